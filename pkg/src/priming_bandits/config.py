"""JSON experiment configuration: parsing, validation and serialization.

Unknown keys are rejected everywhere so that typos fail fast.  Errors carry a
dotted path to the offending field, e.g. ``instance.priming.wear_in.high``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .env import ArmSpec, BanditInstance, DiscreteDist, PrimingSpec, validate_instance
from .harness import POLICIES, PolicySpec
from .policies import BENCHMARKS


class ConfigError(ValueError):
    pass


def _fields(obj: Any, path: str, required: set[str], optional: set[str] = frozenset()) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(f"{path or '<root>'}: expected an object, got {type(obj).__name__}")
    unknown = set(obj) - required - set(optional)
    if unknown:
        raise ConfigError(f"{path or '<root>'}: unknown key(s) {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise ConfigError(f"{path or '<root>'}: missing key(s) {sorted(missing)}")
    return obj


def _join(path: str, key: str | int) -> str:
    if isinstance(key, int):
        return f"{path}[{key}]"
    return f"{path}.{key}" if path else key


def _num(obj: dict, key: str, path: str, kind=float):
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{_join(path, key)}: expected a number")
    if kind is int:
        if isinstance(v, float) and not v.is_integer():
            raise ConfigError(f"{_join(path, key)}: expected an integer")
        return int(v)
    return float(v)


def parse_dist(obj: Any, path: str) -> DiscreteDist:
    kind = obj.get("kind") if isinstance(obj, dict) else None
    try:
        if kind == "point":
            _fields(obj, path, {"kind", "value"})
            return DiscreteDist.point(_num(obj, "value", path, int))
        if kind == "uniform":
            _fields(obj, path, {"kind", "low", "high"})
            return DiscreteDist.uniform(_num(obj, "low", path, int), _num(obj, "high", path, int))
        if kind == "pmf":
            _fields(obj, path, {"kind", "support_min", "pmf"})
            return DiscreteDist(_num(obj, "support_min", path, int), tuple(obj["pmf"]))
        if kind == "folded_normal":
            _fields(obj, path, {"kind", "mean", "sigma", "cap"})
            return DiscreteDist.folded_normal(_num(obj, "mean", path), _num(obj, "sigma", path),
                                              _num(obj, "cap", path, int))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}: {exc}") from exc
    raise ConfigError(f"{_join(path, 'kind')}: expected one of point, uniform, pmf, folded_normal")


def parse_arm(obj: Any, path: str) -> ArmSpec:
    kind = obj.get("kind") if isinstance(obj, dict) else None
    try:
        if kind == "bernoulli":
            _fields(obj, path, {"kind", "p"})
            return ArmSpec.bernoulli(_num(obj, "p", path))
        if kind == "constant":
            _fields(obj, path, {"kind", "value"})
            return ArmSpec.constant(_num(obj, "value", path))
        if kind == "beta":
            _fields(obj, path, {"kind", "alpha", "beta", "grid_size"})
            return ArmSpec.discretized_beta(_num(obj, "alpha", path), _num(obj, "beta", path),
                                            _num(obj, "grid_size", path, int))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}: {exc}") from exc
    raise ConfigError(f"{_join(path, 'kind')}: expected one of bernoulli, constant, beta")


def _laws(obj: Any, path: str):
    if isinstance(obj, list):
        return tuple(parse_dist(d, _join(path, i)) for i, d in enumerate(obj))
    return parse_dist(obj, path)


def parse_instance(obj: Any, path: str = "instance") -> BanditInstance:
    _fields(obj, path, {"arms", "priming", "horizon"})
    if not isinstance(obj["arms"], list):
        raise ConfigError(f"{_join(path, 'arms')}: expected a list")
    arms = tuple(parse_arm(a, _join(_join(path, "arms"), i)) for i, a in enumerate(obj["arms"]))
    ppath = _join(path, "priming")
    pr = _fields(obj["priming"], ppath, {"window", "wear_in"}, {"wear_out"})
    wear_out = pr.get("wear_out")
    priming = PrimingSpec(
        _num(pr, "window", ppath, int),
        _laws(pr["wear_in"], _join(ppath, "wear_in")),
        None if wear_out is None else _laws(wear_out, _join(ppath, "wear_out")),
    )
    return BanditInstance(arms, priming, _num(obj, "horizon", path, int))


def parse_policy(obj: Any, path: str) -> PolicySpec:
    if isinstance(obj, str):
        obj = {"name": obj}
    _fields(obj, path, {"name"}, {"params"})
    name = obj["name"]
    if name not in POLICIES and name not in BENCHMARKS:
        raise ConfigError(f"{_join(path, 'name')}: unknown policy {name!r}")
    params = dict(obj.get("params") or {})
    ppath = _join(path, "params")
    if name in ("wi-ucb", "wiwo-ucb"):
        _fields(params, ppath, set(), {"expected_d", "use_exact_formula"})
        ed = params.get("expected_d", "auto")
        if ed != "auto" and (isinstance(ed, bool) or not isinstance(ed, (int, float)) or ed < 0):
            raise ConfigError(f"{_join(ppath, 'expected_d')}: expected \"auto\" or a number >= 0")
        if not isinstance(params.get("use_exact_formula", True), bool):
            raise ConfigError(f"{_join(ppath, 'use_exact_formula')}: expected a boolean")
    elif params:
        raise ConfigError(f"{ppath}: policy {name!r} takes no parameters")
    return PolicySpec(name, params)


@dataclass
class ExperimentConfig:
    instance: BanditInstance
    policies: list[PolicySpec]
    benchmark: str = "best-arm"
    benchmark_mode: str = "analytic"
    runs: int = 30
    seed: int = 0
    output_dir: str = "results"
    threads: int = 1
    diagnostics: bool = False
    extra: dict = field(default_factory=dict)

    def check(self) -> None:
        wiwo = any(p.name == "wiwo-ucb" for p in self.policies)
        problems = validate_instance(self.instance, require_wiwo_assumption=wiwo)
        if problems:
            raise ConfigError("instance: " + "; ".join(problems))
        if not self.policies:
            raise ConfigError("policies: at least one policy is required")
        if self.benchmark not in BENCHMARKS:
            raise ConfigError(f"benchmark.kind: unknown benchmark {self.benchmark!r}")
        if self.benchmark_mode not in ("analytic", "simulated"):
            raise ConfigError("benchmark.mode: expected analytic or simulated")
        if self.runs < 1:
            raise ConfigError("runs: must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads: must be >= 1")


TOP_LEVEL = {"instance", "policies", "benchmark", "runs", "seed", "output_dir", "threads", "diagnostics"}


def parse_config(source: str | Path | dict) -> ExperimentConfig:
    """Parse a config from a path, a JSON string or an already-decoded dict."""
    if isinstance(source, dict):
        obj = source
    else:
        text = source
        if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
            try:
                text = Path(source).read_text()
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}") from exc
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON: {exc}") from exc

    _fields(obj, "", {"instance", "policies"}, TOP_LEVEL)
    if not isinstance(obj["policies"], list):
        raise ConfigError("policies: expected a list")
    bench = _fields(obj.get("benchmark", {}), "benchmark", set(), {"kind", "mode"})
    cfg = ExperimentConfig(
        instance=parse_instance(obj["instance"]),
        policies=[parse_policy(p, _join("policies", i)) for i, p in enumerate(obj["policies"])],
        benchmark=bench.get("kind", "best-arm"),
        benchmark_mode=bench.get("mode", "analytic"),
        runs=_num(obj, "runs", "", int) if "runs" in obj else 30,
        seed=_num(obj, "seed", "", int) if "seed" in obj else 0,
        output_dir=str(obj.get("output_dir", "results")),
        threads=_num(obj, "threads", "", int) if "threads" in obj else 1,
        diagnostics=bool(obj.get("diagnostics", False)),
    )
    cfg.check()
    return cfg


def dist_to_dict(d: DiscreteDist) -> dict:
    if len(d.pmf) == 1:
        return {"kind": "point", "value": d.support_min}
    if all(p == d.pmf[0] for p in d.pmf):
        return {"kind": "uniform", "low": d.support_min, "high": d.support_max}
    return {"kind": "pmf", "support_min": d.support_min, "pmf": list(d.pmf)}


def arm_to_dict(a: ArmSpec) -> dict:
    if a.kind == "bernoulli":
        return {"kind": "bernoulli", "p": a.p}
    if a.kind == "constant":
        return {"kind": "constant", "value": a.value}
    return {"kind": "beta", "alpha": a.alpha, "beta": a.beta, "grid_size": a.grid_size}


def _laws_to_json(d):
    if d is None:
        return None
    if isinstance(d, tuple):
        return [dist_to_dict(x) for x in d]
    return dist_to_dict(d)


def instance_to_dict(inst: BanditInstance) -> dict:
    pr = inst.priming
    return {
        "arms": [arm_to_dict(a) for a in inst.arms],
        "priming": {"window": pr.window_N, "wear_in": _laws_to_json(pr.wear_in),
                    "wear_out": _laws_to_json(pr.wear_out)},
        "horizon": inst.horizon_T,
    }


def config_to_dict(cfg: ExperimentConfig, include_runtime: bool = True) -> dict:
    """Serialize back to the JSON schema.

    ``include_runtime=False`` drops ``threads`` and ``output_dir``, which never
    affect results, so manifests stay byte-identical across machines.
    """
    out = {
        "instance": instance_to_dict(cfg.instance),
        "policies": [{"name": p.name, "params": dict(p.params)} if p.params else p.name for p in cfg.policies],
        "benchmark": {"kind": cfg.benchmark, "mode": cfg.benchmark_mode},
        "runs": cfg.runs,
        "seed": cfg.seed,
        "diagnostics": cfg.diagnostics,
    }
    if include_runtime:
        out["output_dir"] = cfg.output_dir
        out["threads"] = cfg.threads
    return out
