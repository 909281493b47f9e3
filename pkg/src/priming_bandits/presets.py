"""Experiment runner and the built-in experiment presets.

Random Bernoulli means are drawn once per preset from the master seed and
reused by every policy and replication; the manifest records them.
"""

from __future__ import annotations

from dataclasses import replace
from pathlib import Path

from . import __version__
from .config import ConfigError, ExperimentConfig, config_to_dict
from .env import ArmSpec, BanditInstance, DiscreteDist, PrimingSpec
from .harness import (PolicySpec, mix_seed, monte_carlo_regret, run_episode, run_episodes, same_arm_counts,
                      stream, sublinearity_ratio, summarize, switching_histogram)
from .output import emit_csv, write_manifest

INSTANCE_STREAM = 2
ARTIFACT = "priming-bandits"

SWITCHING_WINDOW = 15
SWITCHING_MULTIPLICITIES = (1, 3, 7)
ED_TARGETS = (2, 6, 10, 14)
PRESETS = ("wear-in", "wear-in-out", "wear-in-out-scaled", "switching", "ed-sweep")
OVERRIDES = {"runs", "threads", "output_dir", "horizon", "diagnostics", "benchmark_mode"}

BASELINES = ("ucb1", "moss", "se")


def draw_means(master_seed: int, K: int) -> list[float]:
    return stream(master_seed, INSTANCE_STREAM).random(K).tolist()


def bernoulli_arms(means) -> tuple[ArmSpec, ...]:
    return tuple(ArmSpec.bernoulli(p) for p in means)


def with_multiplicity(means, k: int) -> list[float]:
    """Copy the largest mean onto the ``k`` arms with the largest means."""
    order = sorted(range(len(means)), key=lambda j: (-means[j], j))
    out = list(means)
    for j in order[:k]:
        out[j] = means[order[0]]
    return out


def ed_sweep_priming(target: float, K: int, N: int) -> PrimingSpec:
    laws = tuple(DiscreteDist.folded_normal(target, 0.5 * (j + 1), N) for j in range(K))
    return PrimingSpec(N, laws)


def _policies(*names) -> list[PolicySpec]:
    return [PolicySpec(n, {"expected_d": "auto", "use_exact_formula": True}) if n in ("wi-ucb", "wiwo-ucb")
            else PolicySpec(n) for n in names]


def preset_configs(name: str, master_seed: int) -> list[tuple[str, ExperimentConfig]]:
    """Resolve a preset into labelled experiment configs."""
    if name == "wear-in":
        inst = BanditInstance(bernoulli_arms(draw_means(master_seed, 20)),
                              PrimingSpec(10, DiscreteDist.uniform(0, 10)), 5000)
        return [("wear-in", ExperimentConfig(inst, _policies("wi-ucb", *BASELINES), "best-arm", seed=master_seed))]
    if name in ("wear-in-out", "wear-in-out-scaled"):
        priming = PrimingSpec(10, DiscreteDist.uniform(0, 3), DiscreteDist.uniform(6, 10))
        if name == "wear-in-out":
            inst = BanditInstance(bernoulli_arms(draw_means(master_seed, 20)), priming, 5000)
        else:
            inst = BanditInstance(bernoulli_arms((0.9, 0.7, 0.5, 0.3, 0.1)), priming, 20000)
        pols = _policies("wiwo-ucb", "wi-ucb", *BASELINES)
        return [(name, ExperimentConfig(inst, pols, "top-two-random", seed=master_seed))]
    if name == "switching":
        base = draw_means(master_seed, 30)
        out = []
        for k in SWITCHING_MULTIPLICITIES:
            inst = BanditInstance(bernoulli_arms(with_multiplicity(base, k)),
                                  PrimingSpec(10, DiscreteDist.point(0)), 5000)
            cfg = ExperimentConfig(inst, _policies("ucb1"), "best-arm", seed=master_seed,
                                   extra={"multiplicity": k, "window": SWITCHING_WINDOW})
            out.append((f"multiplicity-{k}", cfg))
        return out
    if name == "ed-sweep":
        arms = bernoulli_arms(draw_means(master_seed, 10))
        out = []
        for target in ED_TARGETS:
            inst = BanditInstance(arms, ed_sweep_priming(target, 10, 20), 10000)
            cfg = ExperimentConfig(inst, _policies("wi-ucb"), "best-arm", seed=master_seed,
                                   extra={"target_mean": target, "sigma": "0.5*(arm+1)"})
            out.append((f"ed-{target}", cfg))
        return out
    raise ConfigError(f"unknown preset {name!r}; expected one of {', '.join(PRESETS)}")


def apply_overrides(cfg: ExperimentConfig, overrides: dict) -> ExperimentConfig:
    unknown = set(overrides) - OVERRIDES
    if unknown:
        raise ConfigError(f"unknown override(s) {sorted(unknown)}")
    ov = {k: v for k, v in overrides.items() if v is not None}
    if "horizon" in ov:
        cfg = replace(cfg, instance=replace(cfg.instance, horizon_T=int(ov.pop("horizon"))))
    if "benchmark_mode" in ov:
        cfg = replace(cfg, benchmark_mode=ov.pop("benchmark_mode"))
    cfg = replace(cfg, **ov)
    cfg.check()
    return cfg


def _curve_summary(curve) -> dict:
    return {"final_mean_regret": curve.final, "final_stderr": curve.final_stderr,
            "sublinearity_ratio": sublinearity_ratio(curve)}


def run_experiment(cfg: ExperimentConfig, out_dir: Path, label: str = "regret") -> tuple[dict, dict]:
    """Run every policy of ``cfg``; write ``<label>.csv``.  Returns (curves, summary)."""
    curves = {}
    for spec in cfg.policies:
        curves[spec.label] = monte_carlo_regret(cfg.instance, spec, cfg.benchmark, cfg.runs, cfg.seed,
                                                cfg.benchmark_mode, workers=cfg.threads)
    emit_csv(curves.values(), "regret", out_dir / f"{label}.csv")
    if cfg.diagnostics:
        for spec in cfg.policies:
            tr = run_episode(cfg.instance, spec, mix_seed(cfg.seed, 0), diagnostics=True)
            emit_csv(tr.diagnostics, "diagnostics", out_dir / f"diagnostics_{label}_{spec.label}.csv")
    return curves, {name: _curve_summary(c) for name, c in curves.items()}


def run_switching(cfg: ExperimentConfig, W: int = SWITCHING_WINDOW):
    """UCB1-style switching statistics: the pooled histogram and per-run mean counts."""
    seeds = [mix_seed(cfg.seed, r) for r in range(cfg.runs)]
    traces = run_episodes(cfg.instance, cfg.policies[0], seeds, workers=cfg.threads)
    hist = switching_histogram(traces, W)
    per_run = [float(same_arm_counts(tr.arms, W).mean()) for tr in traces]
    return hist, per_run


def _manifest(name, master_seed, experiments) -> dict:
    return {"artifact": ARTIFACT, "version": __version__, "preset": name, "master_seed": master_seed,
            "experiments": experiments}


def run_preset(name: str, master_seed: int = 1, overrides: dict | None = None) -> dict:
    """Run a preset end to end and write its CSVs plus ``manifest.json``."""
    overrides = dict(overrides or {})
    if overrides.get("output_dir") is None:
        overrides["output_dir"] = str(Path("results") / name)
    configs = [(label, apply_overrides(cfg, overrides)) for label, cfg in preset_configs(name, master_seed)]
    out_dir = Path(configs[0][1].output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    experiments, results, files = [], {}, []

    if name == "switching":
        hists = []
        for label, cfg in configs:
            hist, per_run = run_switching(cfg)
            hists.append((label, hist))
            results[label] = {"histogram": hist, "per_run_mean_count": per_run}
            experiments.append({"label": label, "config": config_to_dict(cfg, include_runtime=False),
                                "extra": cfg.extra, "summary": {"mean_same_arm_count": summarize(per_run)}})
        files.append(emit_csv(hists, "histogram", out_dir / "histogram.csv"))
    else:
        for label, cfg in configs:
            csv_label = "regret" if len(configs) == 1 else f"regret_{label}"
            curves, summary = run_experiment(cfg, out_dir, csv_label)
            results[label] = curves
            files.append(out_dir / f"{csv_label}.csv")
            experiments.append({"label": label, "config": config_to_dict(cfg, include_runtime=False),
                                "extra": cfg.extra, "summary": summary})

    files.append(write_manifest(out_dir / "manifest.json", _manifest(name, master_seed, experiments)))
    return {"files": files, "results": results, "out_dir": out_dir}


def run_config(cfg: ExperimentConfig) -> dict:
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    curves, summary = run_experiment(cfg, out_dir)
    exp = [{"label": "regret", "config": config_to_dict(cfg, include_runtime=False), "extra": cfg.extra,
            "summary": summary}]
    manifest = write_manifest(out_dir / "manifest.json", _manifest(None, cfg.seed, exp))
    return {"files": [out_dir / "regret.csv", manifest], "results": {"regret": curves}, "out_dir": out_dir}
