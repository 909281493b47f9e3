"""Seeded episodes, Monte-Carlo pseudo-regret and switching statistics."""

from __future__ import annotations

import math
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from .env import BanditInstance, env_reset
from .policies import (BENCHMARKS, MOSS, UCB1, FixedArm, Policy, PolicyObservation, SuccessiveElimination,
                       benchmark_expected_curve, make_benchmark)
from .priming import WIUCB, WIWOUCB

MASK64 = (1 << 64) - 1

# stream tags mixed into an episode seed
ENV_STREAM = 0
POLICY_STREAM = 1

# replication roles
LEARNER_ROLE = 0
BENCHMARK_ROLE = 1

POLICIES = ("ucb1", "moss", "se", "wi-ucb", "wiwo-ucb")


def splitmix64(x: int) -> int:
    """SplitMix64 finalizer (Steele, Lea & Flood 2014)."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def mix_seed(master: int, replication: int, role: int = LEARNER_ROLE) -> int:
    h = splitmix64(master & MASK64)
    h = splitmix64(h ^ (replication & MASK64))
    return splitmix64(h ^ (role & MASK64))


def stream(seed: int, tag: int) -> np.random.Generator:
    return np.random.default_rng([seed & MASK64, tag])


@dataclass(frozen=True)
class PolicySpec:
    name: str
    params: dict = field(default_factory=dict)

    @property
    def label(self) -> str:
        return self.name


def make_policy(spec: PolicySpec | str, instance: BanditInstance, rng: np.random.Generator) -> Policy:
    if isinstance(spec, str):
        spec = PolicySpec(spec)
    K, T = instance.K, instance.horizon_T
    name, params = spec.name, spec.params
    if name in BENCHMARKS:
        return make_benchmark(name, instance, rng)
    if name == "fixed-arm":
        return FixedArm(K, int(params["arm"]))
    if name == "ucb1":
        return UCB1(K)
    if name == "moss":
        return MOSS(K, T)
    if name == "se":
        return SuccessiveElimination(K, T)
    if name in ("wi-ucb", "wiwo-ucb"):
        ed = params.get("expected_d", "auto")
        ed = instance.priming.expected_d if ed == "auto" else float(ed)
        exact = bool(params.get("use_exact_formula", True))
        if name == "wi-ucb":
            return WIUCB(K, T, ed, exact)
        return WIWOUCB(K, T, instance.priming.window_N, ed, rng, exact)
    raise ValueError(f"unknown policy {name!r}")


@dataclass
class RunTrace:
    seed: int
    policy: str
    arms: np.ndarray
    accrued: np.ndarray
    diagnostics: list | None = None
    phases: list | None = None

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.accrued)


DIAGNOSTIC_FIELDS = ("t", "arm", "raw_r", "d_sample", "z_sample", "window_count", "accrued_x")


def run_episode(instance: BanditInstance, policy: PolicySpec | str, seed: int,
                diagnostics: bool = False) -> RunTrace:
    spec = PolicySpec(policy) if isinstance(policy, str) else policy
    env = env_reset(instance, stream(seed, ENV_STREAM), trace_diagnostics=diagnostics)
    agent = make_policy(spec, instance, stream(seed, POLICY_STREAM))
    T = instance.horizon_T
    arms = [0] * T
    xs = [0.0] * T
    rows = [] if diagnostics else None
    select, observe, step = agent.select, agent.observe, env.step
    for t in range(T):
        a = select(t)
        o = step(a)
        observe(PolicyObservation(t, a, o.accrued_x))
        arms[t] = a
        xs[t] = o.accrued_x
        if rows is not None:
            rows.append((o.t, o.arm, o.raw_r, o.d_sample, o.z_sample, o.window_count, o.accrued_x))
    return RunTrace(seed, spec.label, np.asarray(arms, dtype=np.int64), np.asarray(xs),
                    rows, getattr(agent, "phases", None))


def _run_many(args) -> list[RunTrace]:
    instance, spec, seeds, diagnostics = args
    return [run_episode(instance, spec, s, diagnostics) for s in seeds]


def run_episodes(instance: BanditInstance, policy: PolicySpec | str, seeds: Sequence[int],
                 workers: int = 1, diagnostics: bool = False) -> list[RunTrace]:
    """Run one episode per seed; output order follows ``seeds`` for any ``workers``."""
    seeds = list(seeds)
    if workers <= 1 or len(seeds) <= 1:
        return _run_many((instance, policy, seeds, diagnostics))
    n = min(workers, len(seeds))
    chunks = [seeds[i::n] for i in range(n)]
    with ProcessPoolExecutor(max_workers=n) as pool:
        parts = list(pool.map(_run_many, [(instance, policy, c, diagnostics) for c in chunks]))
    out: list[RunTrace] = [None] * len(seeds)  # type: ignore[list-item]
    for i, part in enumerate(parts):
        out[i::n] = part
    return out


@dataclass
class RegretCurve:
    """Mean cumulative pseudo-regret and its standard error for t = 1..T."""

    policy: str
    benchmark: str
    mode: str
    runs: int
    mean: np.ndarray
    stderr: np.ndarray
    traces: list = field(default_factory=list, repr=False)

    def at(self, t: int) -> float:
        return float(self.mean[t - 1])

    @property
    def final(self) -> float:
        return float(self.mean[-1])

    @property
    def final_stderr(self) -> float:
        return float(self.stderr[-1])


def _mean_and_se(cum: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m = cum.shape[0]
    mean = cum.mean(axis=0)
    if m < 2:
        return mean, np.zeros_like(mean)
    return mean, cum.std(axis=0, ddof=1) / math.sqrt(m)


def monte_carlo_regret(instance: BanditInstance, policy: PolicySpec | str, benchmark: str, runs: int,
                       master_seed: int, mode: str = "analytic", workers: int = 1,
                       keep_traces: bool = False) -> RegretCurve:
    if runs < 1:
        raise ValueError("runs must be >= 1")
    if benchmark not in BENCHMARKS:
        raise ValueError(f"unknown benchmark {benchmark!r}")
    spec = PolicySpec(policy) if isinstance(policy, str) else policy
    seeds = [mix_seed(master_seed, r, LEARNER_ROLE) for r in range(runs)]
    traces = run_episodes(instance, spec, seeds, workers)
    mean_x, se_x = _mean_and_se(np.stack([tr.cumulative for tr in traces]))

    if mode == "analytic":
        bench = np.cumsum(benchmark_expected_curve(instance, benchmark))
        se_b = 0.0
    elif mode == "simulated":
        bseeds = [mix_seed(master_seed, r, BENCHMARK_ROLE) for r in range(runs)]
        btraces = run_episodes(instance, PolicySpec(benchmark), bseeds, workers)
        bench, se_b = _mean_and_se(np.stack([tr.cumulative for tr in btraces]))
    else:
        raise ValueError(f"unknown benchmark mode {mode!r}")

    return RegretCurve(spec.label, benchmark, mode, runs, bench - mean_x, np.sqrt(se_x**2 + se_b**2),
                       traces if keep_traces else [])


def same_arm_counts(actions: Sequence[int], W: int) -> np.ndarray:
    """For t >= 1, plays of ``actions[t]`` among the previous ``min(t, W)`` actions."""
    if W < 1:
        raise ValueError("W must be >= 1")
    window: deque[int] = deque()
    counts: dict[int, int] = {}
    out = []
    for t, a in enumerate(actions):
        a = int(a)
        if t >= 1:
            out.append(counts.get(a, 0))
        window.append(a)
        counts[a] = counts.get(a, 0) + 1
        if len(window) > W:
            old = window.popleft()
            counts[old] -= 1
    return np.asarray(out, dtype=np.int64)


@dataclass
class SwitchHistogram:
    window: int
    frequency: list[int]
    offset: int = 1

    @property
    def total(self) -> int:
        return sum(self.frequency)

    def mean_count(self) -> float:
        return sum(c * f for c, f in enumerate(self.frequency)) / self.total


def switching_histogram(traces: Iterable[Sequence[int] | RunTrace], W: int) -> SwitchHistogram:
    freq = np.zeros(W + 1, dtype=np.int64)
    for tr in traces:
        actions = tr.arms if isinstance(tr, RunTrace) else tr
        freq += np.bincount(same_arm_counts(actions, W), minlength=W + 1)
    return SwitchHistogram(W, freq.tolist())


def sublinearity_ratio(curve: RegretCurve | Sequence[float]) -> float | None:
    """regret(T) / regret(T/2); ``None`` when regret(T/2) <= 0."""
    values = curve.mean if isinstance(curve, RegretCurve) else np.asarray(curve, dtype=float)
    T = len(values)
    if T < 2:
        return None
    half = values[T // 2 - 1]
    if not half > 0:
        return None
    return float(values[T - 1] / half)


def summarize(values: Sequence[float]) -> dict[str, Any]:
    """Mean and standard error of per-run scalars."""
    v = np.asarray(values, dtype=float)
    se = float(v.std(ddof=1) / math.sqrt(len(v))) if len(v) > 1 else 0.0
    return {"mean": float(v.mean()), "stderr": se, "n": int(len(v))}
