"""Phased elimination under priming: WI-UCB and WI/WO-UCB.

Both algorithms play every active member for ``n_m - n_{m-1}`` rounds in phase
``m``, where ``n_m`` is the cumulative per-member play count required by the
end of phase ``m``, then drop members whose estimate is separated from the
leader by more than the confidence width, and halve the width.  WI-UCB's
members are arms played in consecutive runs; WI/WO-UCB's members are unordered
pairs of arms ("compound arms"), each round of a pair's block playing one of
its two arms by a fair coin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Hashable, Mapping, Sequence

import numpy as np

from .env import ContractViolation
from .policies import Policy, _CoinStream


def confidence_width(m: int) -> float:
    return 2.0 ** (1 - m)


def _check_horizon(T: float) -> float:
    if T < 2:
        raise ValueError(f"phase lengths need T >= 2 (got {T})")
    return math.log(T)


def _phase_length(delta: float, log_t: float, scale: float) -> int:
    s1 = math.sqrt((4.0 / 9.0) * log_t**2 + 4.0 * scale * log_t)
    root = math.sqrt(log_t) + math.sqrt(log_t + (4.0 / 3.0) * delta * log_t + 2.0 * delta * s1)
    return math.ceil(root**2 / delta**2)


def phase_length_wi(m: int, delta_tilde: float, T: float, expected_d: float) -> int:
    """Smallest cumulative per-arm play count making phase ``m`` estimates reliable."""
    return _phase_length(delta_tilde, _check_horizon(T), m * expected_d)


def phase_length_wiwo(m: int, delta_tilde: float, T: float, window_N: int, expected_d: float) -> int:
    return _phase_length(delta_tilde, _check_horizon(T), window_N * m * expected_d)


def phase_length_bound(m: int, delta_tilde: float, T: float, expected_d: float, window_N: int | None = None) -> float:
    log_t = _check_horizon(T)
    scale = m * expected_d * (window_N if window_N is not None else 1)
    return (
        1.0
        + 4.0 * log_t / delta_tilde**2
        + (16.0 / 3.0) * log_t / delta_tilde
        + 8.0 * math.sqrt(scale * log_t) / delta_tilde
    )


def phase_length_bound_check(n_m: int, m: int, delta_tilde: float, T: float, expected_d: float,
                             window_N: int | None = None) -> bool:
    return n_m <= phase_length_bound(m, delta_tilde, T, expected_d, window_N)


def eliminate(active: Sequence[Hashable], means_hat: Mapping[Hashable, float], delta_tilde: float) -> list:
    """Keep members whose estimate is not separated from the best by more than ``delta_tilde``."""
    if len(active) <= 1:
        return list(active)
    best = max(means_hat[j] for j in active)
    half = delta_tilde / 2.0
    return [j for j in active if not means_hat[j] + half < best - half]


@dataclass(frozen=True, order=True)
class CompoundArm:
    lo: int
    hi: int

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"compound arm needs lo < hi, got ({self.lo}, {self.hi})")

    def mean(self, means: Sequence[float]) -> float:
        return 0.5 * (means[self.lo] + means[self.hi])


def enumerate_compound_arms(K: int) -> list[CompoundArm]:
    if K < 2:
        raise ValueError("compound arms need K >= 2")
    return [CompoundArm(i, j) for i, j in combinations(range(K), 2)]


def compound_gap(means: Sequence[float], pair: CompoundArm) -> float:
    top = sorted(means, reverse=True)
    return 0.5 * ((top[0] + top[1]) - means[pair.lo] - means[pair.hi])


@dataclass
class PhaseRecord:
    """Snapshot taken at a completed phase end, before elimination."""

    m: int
    delta_tilde: float
    n_m: int
    active: list
    estimates: dict
    plays: dict
    survivors: list = field(default_factory=list)


class _PhasedElimination(Policy):
    """Shared phase bookkeeping over a list of members (arms or pairs)."""

    def __init__(self, n_arms: int, members: list, horizon: int, expected_d: float, use_exact_formula: bool = True):
        super().__init__(n_arms)
        if expected_d < 0:
            raise ValueError("expected_d must be >= 0")
        self.horizon = horizon
        self.expected_d = float(expected_d)
        self.use_exact_formula = use_exact_formula
        self.active = list(members)
        self.sums = {j: 0.0 for j in members}
        self.plays = {j: 0 for j in members}
        self.m = 0
        self.n_prev = 0
        self.n_cur = 0
        self.delta_tilde = 2.0
        self.phases: list[PhaseRecord] = []
        self._block = 0
        self._left = 0
        self._start_phase()

    def _n(self, m: int, delta: float) -> int:
        raise NotImplementedError

    def _start_phase(self):
        self.m += 1
        self.delta_tilde = confidence_width(self.m)
        self.n_prev, self.n_cur = self.n_cur, self._n(self.m, self.delta_tilde)
        if self.n_cur <= self.n_prev:
            raise ContractViolation(f"phase lengths not increasing at m={self.m}")
        self._block = 0
        self._left = self.n_cur - self.n_prev

    @property
    def exploiting(self) -> bool:
        return len(self.active) == 1

    def current_member(self):
        return self.active[0] if self.exploiting else self.active[self._block]

    def _record(self, x: float):
        member = self.current_member()
        self.sums[member] += x
        self.plays[member] += 1
        if self.exploiting:
            return
        self._left -= 1
        if self._left == 0:
            self._block += 1
            self._left = self.n_cur - self.n_prev
            if self._block == len(self.active):
                self._end_phase()

    def _end_phase(self):
        est = {j: self.sums[j] / self.plays[j] for j in self.active}
        survivors = eliminate(self.active, est, self.delta_tilde)
        self.phases.append(PhaseRecord(self.m, self.delta_tilde, self.n_cur, list(self.active), est,
                                       {j: self.plays[j] for j in self.active}, survivors))
        self.active = survivors
        self._start_phase()

    def phase_budget(self) -> int:
        """Rounds needed to finish the current phase from its start."""
        return len(self.active) * (self.n_cur - self.n_prev)


class WIUCB(_PhasedElimination):
    """Consecutive-run phased elimination over single arms."""

    name = "wi-ucb"

    def __init__(self, n_arms: int, horizon: int, expected_d: float, use_exact_formula: bool = True):
        super().__init__(n_arms, list(range(n_arms)), horizon, expected_d, use_exact_formula)

    def _n(self, m, delta):
        T = max(self.horizon, 2)
        if self.use_exact_formula:
            return phase_length_wi(m, delta, T, self.expected_d)
        return math.ceil(phase_length_bound(m, delta, T, self.expected_d) - 1.0)

    def _choose(self):
        return self.current_member()

    def _update(self, arm, x):
        self._record(x)


class WIWOUCB(_PhasedElimination):
    """Phased elimination over compound arms with a fair coin inside each pair."""

    name = "wiwo-ucb"

    def __init__(self, n_arms: int, horizon: int, window_N: int, expected_d: float,
                 rng: np.random.Generator, use_exact_formula: bool = True):
        self.window_N = window_N
        self._coins = _CoinStream(rng)
        super().__init__(n_arms, enumerate_compound_arms(n_arms), horizon, expected_d, use_exact_formula)

    def _n(self, m, delta):
        T = max(self.horizon, 2)
        if self.use_exact_formula:
            return phase_length_wiwo(m, delta, T, self.window_N, self.expected_d)
        return math.ceil(phase_length_bound(m, delta, T, self.expected_d, self.window_N) - 1.0)

    def _choose(self):
        pair = self.current_member()
        return pair.hi if self._coins.flip() else pair.lo

    def _update(self, arm, x):
        self._record(x)
