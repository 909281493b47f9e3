"""Learning and benchmark policies sharing one select/observe contract.

A policy is asked for an arm with ``select(t)`` and then told what happened
with ``observe(obs)``; ``obs`` only carries ``t``, ``arm`` and ``accrued_x``.
Ties are broken toward the lowest arm index everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .env import BanditInstance, ContractViolation


@dataclass(frozen=True, slots=True)
class PolicyObservation:
    t: int
    arm: int
    accrued_x: float


def _argmax(values) -> int:
    best, best_v = 0, values[0]
    for j in range(1, len(values)):
        if values[j] > best_v:
            best, best_v = j, values[j]
    return best


class Policy:
    """Base class tracking the round counter and the pending selection."""

    name = "policy"

    def __init__(self, n_arms: int):
        self.n_arms = n_arms
        self.t = 0
        self._pending: int | None = None

    def select(self, t: int) -> int:
        if t != self.t:
            raise ContractViolation(f"{self.name}: select({t}) but {self.t} observations were fed")
        if self._pending is None:
            self._pending = self._choose()
        return self._pending

    def observe(self, obs: PolicyObservation) -> None:
        if obs.t != self.t or self._pending is None:
            raise ContractViolation(f"{self.name}: observation for round {obs.t}, expected {self.t}")
        if obs.arm != self._pending:
            raise ContractViolation(f"{self.name}: observed arm {obs.arm}, selected {self._pending}")
        self._update(obs.arm, obs.accrued_x)
        self._pending = None
        self.t += 1

    def _choose(self) -> int:
        raise NotImplementedError

    def _update(self, arm: int, x: float) -> None:
        pass


class _CountingPolicy(Policy):
    def __init__(self, n_arms: int):
        super().__init__(n_arms)
        self.counts = [0] * n_arms
        self.sums = [0.0] * n_arms

    def _update(self, arm, x):
        self.counts[arm] += 1
        self.sums[arm] += x


def ucb1_index(mean_hat: float, n_j: int, t: float) -> float:
    return mean_hat + math.sqrt(2.0 * math.log(t) / n_j)


def moss_index(mean_hat: float, n_j: int, t_horizon: int, k_arms: int) -> float:
    return mean_hat + math.sqrt(max(0.0, math.log(t_horizon / (k_arms * n_j))) / n_j)


class UCB1(_CountingPolicy):
    name = "ucb1"

    def _choose(self):
        if self.t < self.n_arms:
            return self.t
        t = self.t
        return _argmax([ucb1_index(s / n, n, t) for s, n in zip(self.sums, self.counts)])


class MOSS(_CountingPolicy):
    name = "moss"

    def __init__(self, n_arms: int, horizon: int):
        super().__init__(n_arms)
        self.horizon = horizon

    def _choose(self):
        if self.t < self.n_arms:
            return self.t
        T, K = self.horizon, self.n_arms
        return _argmax([moss_index(s / n, n, T, K) for s, n in zip(self.sums, self.counts)])


class SuccessiveElimination(_CountingPolicy):
    """Round-robin over the active set; confidence elimination after each pass.

    Arm ``i`` is dropped when ``mean_i + r_i < max_j (mean_j - r_j)`` with
    ``r_j = sqrt(2 ln T / n_j)``.
    """

    name = "se"

    def __init__(self, n_arms: int, horizon: int):
        super().__init__(n_arms)
        self.horizon = horizon
        self.active = list(range(n_arms))
        self.cursor = 0
        self.radii = [math.inf] * n_arms

    def _choose(self):
        return self.active[self.cursor]

    def _update(self, arm, x):
        if arm not in self.active:
            raise ContractViolation(f"se: arm {arm} was eliminated")
        super()._update(arm, x)
        self.cursor += 1
        if self.cursor == len(self.active):
            self.cursor = 0
            self._eliminate()

    def _eliminate(self):
        if len(self.active) == 1:
            return
        log_t = math.log(self.horizon) if self.horizon > 1 else 0.0
        for j in self.active:
            self.radii[j] = math.sqrt(2.0 * log_t / self.counts[j])
        means = {j: self.sums[j] / self.counts[j] for j in self.active}
        floor = max(means[j] - self.radii[j] for j in self.active)
        keep = [j for j in self.active if not means[j] + self.radii[j] < floor]
        self.active = keep or self.active


def top_two(means) -> tuple[int, int]:
    order = sorted(range(len(means)), key=lambda j: (-means[j], j))
    return order[0], order[1]


class FixedArm(Policy):
    name = "fixed-arm"

    def __init__(self, n_arms: int, arm: int):
        super().__init__(n_arms)
        self.arm = arm

    def _choose(self):
        return self.arm


class BestArm(Policy):
    name = "best-arm"

    def __init__(self, means):
        super().__init__(len(means))
        self.arm = _argmax(list(means))

    def _choose(self):
        return self.arm


class TopTwoRandom(Policy):
    """Plays each of the two best arms with probability 1/2 every round."""

    name = "top-two-random"

    def __init__(self, means, rng: np.random.Generator):
        if len(means) < 2:
            raise ValueError("top-two benchmarks need K >= 2")
        super().__init__(len(means))
        self.pair = top_two(means)
        self._coins = _CoinStream(rng)

    def _choose(self):
        return self.pair[self._coins.flip()]


class TopTwoAlternating(Policy):
    """Plays the best arm at even rounds and the runner-up at odd rounds."""

    name = "top-two-alternating"

    def __init__(self, means):
        if len(means) < 2:
            raise ValueError("top-two benchmarks need K >= 2")
        super().__init__(len(means))
        self.pair = top_two(means)

    def _choose(self):
        return self.pair[self.t % 2]


class _CoinStream:
    """Fair coin flips drawn from a generator in blocks."""

    def __init__(self, rng: np.random.Generator, block: int = 4096):
        self.rng = rng
        self.block = block
        self._buf: list[int] = []
        self._pos = 0

    def flip(self) -> int:
        if self._pos >= len(self._buf):
            self._buf = self.rng.integers(0, 2, size=self.block).tolist()
            self._pos = 0
        b = self._buf[self._pos]
        self._pos += 1
        return b


BENCHMARKS = ("best-arm", "top-two-random", "top-two-alternating")


def make_benchmark(kind: str, instance: BanditInstance, rng: np.random.Generator) -> Policy:
    means = instance.means
    if kind == "best-arm":
        return BestArm(means)
    if kind == "top-two-random":
        return TopTwoRandom(means, rng)
    if kind == "top-two-alternating":
        return TopTwoAlternating(means)
    raise ValueError(f"unknown benchmark {kind!r}")


def _accrual_prob(instance: BanditInstance, arm: int, c: int) -> float:
    pr = instance.priming
    return pr.wear_in_for(arm).cdf(c) * pr.wear_out_for(arm).sf(c)


def benchmark_expected_reward(instance: BanditInstance, kind: str, t: int) -> float:
    """E[X_t] of a clairvoyant benchmark at round ``t`` (0-based)."""
    N = instance.priming.window_N
    means = instance.means
    if kind == "best-arm":
        j = _argmax(means)
        return means[j] * _accrual_prob(instance, j, min(t + 1, N))
    if instance.K < 2:
        raise ValueError("top-two benchmarks need K >= 2")
    hi, lo = top_two(means)
    if kind == "top-two-alternating":
        arm = (hi, lo)[t % 2]
        return means[arm] * _accrual_prob(instance, arm, 1 + min(t, N - 1) // 2)
    if kind == "top-two-random":
        n = min(t, N - 1)
        total = 0.0
        for k in range(n + 1):
            w = math.comb(n, k) / 2.0**n
            c = 1 + k
            total += w * (means[hi] * _accrual_prob(instance, hi, c) + means[lo] * _accrual_prob(instance, lo, c))
        return total / 2.0
    raise ValueError(f"unknown benchmark {kind!r}")


def benchmark_expected_curve(instance: BanditInstance, kind: str) -> np.ndarray:
    """Per-round expected rewards for t = 0..T-1.

    Past round ``N - 1`` the window is saturated and the per-round value only
    depends on the parity of ``t``, so it is computed once per parity.
    """
    T = instance.horizon_T
    N = instance.priming.window_N
    head = min(T, N + 1)
    out = np.empty(T)
    for t in range(head):
        out[t] = benchmark_expected_reward(instance, kind, t)
    if T > head:
        tail = np.arange(head, T)
        even = benchmark_expected_reward(instance, kind, head - (head % 2))
        odd = benchmark_expected_reward(instance, kind, head - (head % 2) + 1)
        out[head:] = np.where(tail % 2 == 0, even, odd)
    return out
