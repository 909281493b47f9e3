"""Problem instances and the priming-censored reward process.

An arm's reward is accrued only when the number of times it was played in the
last ``N`` rounds (the current play included) lies between a sampled wear-in
threshold ``D`` and a sampled wear-out threshold ``Z``.  Every round draws one
uniform triple from the environment stream, consumed in the order R, D, Z, and
each quantity is obtained by inverse-CDF lookup.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import betainc

PMF_ATOL = 1e-12
_UNIFORM_CHUNK = 4096


class ContractViolation(RuntimeError):
    """Raised when a caller breaks an operation's preconditions at run time."""


@dataclass(frozen=True)
class DiscreteDist:
    """Integer-valued distribution on ``support_min..support_max``."""

    support_min: int
    pmf: tuple[float, ...]
    _cdf: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pmf = tuple(float(p) for p in self.pmf)
        if not pmf:
            raise ValueError("pmf must be non-empty")
        if any(p < 0 or not math.isfinite(p) for p in pmf):
            raise ValueError("pmf entries must be finite and non-negative")
        if abs(math.fsum(pmf) - 1.0) > PMF_ATOL:
            raise ValueError(f"pmf sums to {math.fsum(pmf)!r}, expected 1")
        object.__setattr__(self, "support_min", int(self.support_min))
        object.__setattr__(self, "pmf", pmf)
        object.__setattr__(self, "_cdf", tuple(np.cumsum(pmf).tolist()))

    @classmethod
    def point(cls, value: int) -> "DiscreteDist":
        return cls(value, (1.0,))

    @classmethod
    def uniform(cls, low: int, high: int) -> "DiscreteDist":
        if high < low:
            raise ValueError("uniform needs low <= high")
        n = high - low + 1
        return cls(low, (1.0 / n,) * n)

    @classmethod
    def folded_normal(cls, mean: float, sigma: float, cap: int) -> "DiscreteDist":
        """Law of ``min(cap, round(|g|))`` with ``g ~ Normal(mean, sigma)``.

        Tabulated from the normal CDF, so the mean of the result is exact.
        """
        if sigma <= 0 or cap < 0:
            raise ValueError("folded_normal needs sigma > 0 and cap >= 0")

        def abs_cdf(x):
            if x <= 0:
                return 0.0
            hi = 0.5 * math.erfc(-(x - mean) / (sigma * math.sqrt(2)))
            lo = 0.5 * math.erfc(-(-x - mean) / (sigma * math.sqrt(2)))
            return hi - lo

        edges = [abs_cdf(k + 0.5) for k in range(cap)]
        pmf = [edges[0] if cap > 0 else 1.0]
        pmf += [edges[k] - edges[k - 1] for k in range(1, cap)]
        if cap > 0:
            pmf.append(1.0 - edges[-1])
        pmf = [max(p, 0.0) for p in pmf]
        total = math.fsum(pmf)
        return cls(0, tuple(p / total for p in pmf))

    @property
    def support_max(self) -> int:
        return self.support_min + len(self.pmf) - 1

    @property
    def mean(self) -> float:
        return math.fsum((self.support_min + i) * p for i, p in enumerate(self.pmf))

    def prob(self, k: int) -> float:
        i = k - self.support_min
        return self.pmf[i] if 0 <= i < len(self.pmf) else 0.0

    def cdf(self, k: int) -> float:
        """P(X <= k)."""
        i = k - self.support_min
        if i < 0:
            return 0.0
        if i >= len(self.pmf):
            return 1.0
        return min(self._cdf[i], 1.0)

    def sf(self, k: int) -> float:
        """P(X >= k)."""
        return 1.0 - self.cdf(k - 1)

    def quantile(self, u: float) -> int:
        i = bisect_right(self._cdf, u)
        return self.support_min + min(i, len(self.pmf) - 1)


def sample_discrete(dist: DiscreteDist, rng: np.random.Generator) -> int:
    return dist.quantile(rng.random())


@dataclass(frozen=True)
class ArmSpec:
    """Reward distribution of one arm.

    ``kind`` is ``"bernoulli"`` (``p``), ``"constant"`` (``value``) or
    ``"beta"`` (``alpha``, ``beta``, ``grid_size``).  The beta kind puts the
    Beta(alpha, beta) mass of each of ``grid_size`` equal bins of [0, 1] on the
    bin midpoint.
    """

    kind: str
    p: float = 0.0
    value: float = 0.0
    alpha: float = 1.0
    beta: float = 1.0
    grid_size: int = 10

    def __post_init__(self):
        if self.kind == "bernoulli":
            if not 0.0 <= self.p <= 1.0:
                raise ValueError(f"bernoulli p={self.p} outside [0, 1]")
        elif self.kind == "constant":
            if not 0.0 <= self.value <= 1.0:
                raise ValueError(f"constant value={self.value} outside [0, 1]")
        elif self.kind == "beta":
            if self.alpha <= 0 or self.beta <= 0 or self.grid_size < 1:
                raise ValueError("beta arm needs alpha, beta > 0 and grid_size >= 1")
        else:
            raise ValueError(f"unknown arm kind {self.kind!r}")

    @classmethod
    def bernoulli(cls, p: float) -> "ArmSpec":
        return cls("bernoulli", p=float(p))

    @classmethod
    def constant(cls, value: float) -> "ArmSpec":
        return cls("constant", value=float(value))

    @classmethod
    def discretized_beta(cls, alpha: float, beta: float, grid_size: int) -> "ArmSpec":
        return cls("beta", alpha=float(alpha), beta=float(beta), grid_size=int(grid_size))

    def _beta_table(self):
        g = self.grid_size
        edges = betainc(self.alpha, self.beta, np.linspace(0.0, 1.0, g + 1))
        probs = np.diff(edges)
        values = (np.arange(g) + 0.5) / g
        return values.tolist(), np.cumsum(probs).tolist(), probs

    @property
    def mean(self) -> float:
        if self.kind == "bernoulli":
            return self.p
        if self.kind == "constant":
            return self.value
        values, _, probs = self._beta_table()
        return float(np.dot(values, probs))

    def sampler(self):
        """Return ``u -> reward`` mapping a uniform draw to a reward in [0, 1]."""
        if self.kind == "bernoulli":
            p = self.p
            return lambda u: 1.0 if u < p else 0.0
        if self.kind == "constant":
            v = self.value
            return lambda u: v
        values, cdf, _ = self._beta_table()
        last = len(values) - 1
        return lambda u: values[min(bisect_right(cdf, u), last)]


def _laws(d):
    return d if isinstance(d, tuple) else (d,)


@dataclass(frozen=True)
class PrimingSpec:
    """Window length plus wear-in / wear-out threshold laws.

    ``wear_in`` and ``wear_out`` are either one shared distribution or a tuple
    with one distribution per arm.  ``wear_out=None`` means ``Z = N`` always.
    """

    window_N: int
    wear_in: DiscreteDist | tuple[DiscreteDist, ...]
    wear_out: DiscreteDist | tuple[DiscreteDist, ...] | None = None

    def wear_in_for(self, arm: int) -> DiscreteDist:
        return self.wear_in[arm] if isinstance(self.wear_in, tuple) else self.wear_in

    def wear_out_for(self, arm: int) -> DiscreteDist:
        if self.wear_out is None:
            return DiscreteDist.point(self.window_N)
        return self.wear_out[arm] if isinstance(self.wear_out, tuple) else self.wear_out

    @property
    def a(self) -> int:
        return max(d.support_max for d in _laws(self.wear_in))

    @property
    def b(self) -> int | None:
        if self.wear_out is None:
            return None
        return min(d.support_min for d in _laws(self.wear_out))

    @property
    def expected_d(self) -> float:
        """Mean wear-in threshold; the max over arms when laws are per-arm."""
        return max(d.mean for d in _laws(self.wear_in))


@dataclass(frozen=True)
class BanditInstance:
    arms: tuple[ArmSpec, ...]
    priming: PrimingSpec
    horizon_T: int

    def __post_init__(self):
        object.__setattr__(self, "arms", tuple(self.arms))

    @property
    def K(self) -> int:
        return len(self.arms)

    @property
    def means(self) -> list[float]:
        return [arm.mean for arm in self.arms]

    @property
    def best_arm(self) -> int:
        means = self.means
        return max(range(len(means)), key=lambda j: (means[j], -j))

    @property
    def mu_star(self) -> float:
        return max(self.means)


def validate_instance(instance: BanditInstance, require_wiwo_assumption: bool = False) -> list[str]:
    """Return a list of human-readable violations; empty means valid."""
    problems = []
    pr = instance.priming
    N = pr.window_N
    if instance.K < 2:
        problems.append(f"K >= 2 fails (K={instance.K})")
    if instance.horizon_T < 1:
        problems.append(f"T >= 1 fails (T={instance.horizon_T})")
    if N < 1:
        problems.append(f"N >= 1 fails (N={N})")
    for j, m in enumerate(instance.means):
        if not (math.isfinite(m) and 0.0 <= m <= 1.0):
            problems.append(f"arm {j} mean {m} outside [0, 1]")

    for label, dists in (("wear_in", pr.wear_in), ("wear_out", pr.wear_out)):
        if isinstance(dists, tuple) and len(dists) != instance.K:
            problems.append(f"{label} has {len(dists)} per-arm laws for K={instance.K}")

    a, b = pr.a, pr.b
    if min(d.support_min for d in _laws(pr.wear_in)) < 0:
        problems.append("wear_in support_min >= 0 fails")
    if a > N:
        problems.append(f"a <= N fails (a={a}, N={N})")
    if b is not None:
        z_max = max(d.support_max for d in _laws(pr.wear_out))
        if z_max > N:
            problems.append(f"wear_out values <= N fails (max={z_max}, N={N})")
        if not a < b:
            problems.append(f"a < b fails (a={a}, b={b})")
    if require_wiwo_assumption:
        if not a <= N / 2:
            problems.append(f"a ≤ N/2 fails (a={a}, N/2={N / 2})")
        if b is not None and not N / 2 < b:
            problems.append(f"N/2 < b fails (b={b}, N/2={N / 2})")
    return problems


def recent_count(history_suffix: Sequence[int], current_arm: int, window_N: int) -> int:
    """Plays of ``current_arm`` in the last ``window_N`` rounds, current play included.

    ``history_suffix`` lists previous actions most recent first.
    """
    return 1 + sum(1 for a in list(history_suffix)[: window_N - 1] if a == current_arm)


@dataclass(slots=True)
class Observation:
    t: int
    arm: int
    accrued_x: float
    raw_r: float | None = None
    d_sample: int | None = None
    z_sample: int | None = None
    window_count: int | None = None


class EnvState:
    """Single-episode simulator state.

    ``window`` holds the last ``min(t, N)`` actions, oldest first, and
    ``counts`` holds per-arm multiplicities within it.
    """

    def __init__(self, instance: BanditInstance, rng: np.random.Generator, trace_diagnostics: bool = False):
        self.instance = instance
        self.rng = rng
        self.trace_diagnostics = trace_diagnostics
        self.t = 0
        self.N = instance.priming.window_N
        self.window: deque[int] = deque()
        self.counts = [0] * instance.K
        self._reward = [arm.sampler() for arm in instance.arms]
        self._d = [instance.priming.wear_in_for(j).quantile for j in range(instance.K)]
        self._z = [instance.priming.wear_out_for(j).quantile for j in range(instance.K)]
        self._buf: list[list[float]] = []
        self._pos = 0

    def _uniforms(self):
        if self._pos >= len(self._buf):
            n = min(_UNIFORM_CHUNK, max(self.instance.horizon_T - self.t, 1))
            self._buf = self.rng.random((n, 3)).tolist()
            self._pos = 0
        row = self._buf[self._pos]
        self._pos += 1
        return row

    def current_count(self, arm: int) -> int:
        c = self.counts[arm] + 1
        if len(self.window) == self.N and self.window[0] == arm:
            c -= 1
        return c

    def step(self, arm: int) -> Observation:
        if self.t >= self.instance.horizon_T:
            raise ContractViolation(f"step past horizon T={self.instance.horizon_T}")
        if not 0 <= arm < self.instance.K:
            raise ContractViolation(f"arm {arm} out of range for K={self.instance.K}")
        u_r, u_d, u_z = self._uniforms()
        r = self._reward[arm](u_r)
        d = self._d[arm](u_d)
        z = self._z[arm](u_z)
        c = self.current_count(arm)
        x = r if z >= c >= d else 0.0

        window = self.window
        if len(window) == self.N:
            self.counts[window.popleft()] -= 1
        window.append(arm)
        self.counts[arm] += 1
        t = self.t
        self.t += 1
        if self.trace_diagnostics:
            return Observation(t, arm, x, r, d, z, c)
        return Observation(t, arm, x)


def env_reset(instance: BanditInstance, seed: int | np.random.Generator, trace_diagnostics: bool = False) -> EnvState:
    problems = validate_instance(instance)
    if problems:
        raise ValueError("invalid instance: " + "; ".join(problems))
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return EnvState(instance, rng, trace_diagnostics)


def env_step(state: EnvState, arm: int) -> Observation:
    return state.step(arm)
