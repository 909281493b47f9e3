import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from priming_bandits.env import ArmSpec, BanditInstance, ContractViolation, DiscreteDist, PrimingSpec
from priming_bandits.harness import run_episode, run_episodes
from priming_bandits.policies import (UCB1, _argmax, BestArm, PolicyObservation, SuccessiveElimination,
                                      TopTwoAlternating, TopTwoRandom, benchmark_expected_curve,
                                      benchmark_expected_reward, moss_index, top_two, ucb1_index)

# frozen from a 30-digit mpmath evaluation
UCB1_EXAMPLE = 1.91421356237309504880
MOSS_EXAMPLE = 1.51742712938514635086


def feed(policy, t, x):
    a = policy.select(t)
    policy.observe(PolicyObservation(t, a, x))
    return a


def bern(*means):
    return tuple(ArmSpec.bernoulli(m) for m in means)


# --- index formulas --------------------------------------------------------

def test_ucb1_index_examples():
    assert ucb1_index(0.5, 2, math.e**2) == pytest.approx(UCB1_EXAMPLE, abs=1e-12)
    for t in (10, 1000, 10**6):
        assert ucb1_index(0.0, t, t) == pytest.approx(math.sqrt(2 * math.log(t) / t))
    assert ucb1_index(0.0, 10**8, 10**8) < 1e-3


def test_moss_index_examples():
    assert moss_index(0.3, 10, 100, 10) == 0.3
    assert moss_index(0.3, 20, 100, 10) == 0.3
    assert moss_index(0.0, 1, 100, 10) == pytest.approx(MOSS_EXAMPLE, abs=1e-12)
    bonuses = [moss_index(0.0, n, 10**4, 5) for n in range(1, 3000)]
    assert all(a >= b for a, b in zip(bonuses, bonuses[1:]))


def test_argmax_tie_rule():
    assert _argmax([0.3, 0.7, 0.7]) == 1
    assert _argmax([1.0, 1.0]) == 0


@given(st.lists(st.integers(-1000, 1000), min_size=1, max_size=20), st.integers(-1000, 1000))
def test_argmax_shift_invariance(values, c):
    # integer-valued floats keep the shift exact
    vals = [v / 8 for v in values]
    assert _argmax(vals) == _argmax([v + c for v in vals])


def test_ucb1_initialization_and_accumulation():
    pol = UCB1(4)
    assert pol.select(0) == 0
    xs = [0.0, 0.0, 0.0, 0.5]
    for t in range(16):
        j = t % 4
        pol._pending = j  # drive a known play pattern
        pol.observe(PolicyObservation(t, j, xs[j]))
    assert pol.counts[3] == 4 and pol.sums[3] == 2.0
    assert pol.select(16) == 3
    pol.observe(PolicyObservation(16, 3, 1.0))
    assert pol.counts[3] == 5 and pol.sums[3] == 3.0


def test_mismatched_round_index_rejected():
    pol = UCB1(2)
    pol.select(0)
    with pytest.raises(ContractViolation):
        pol.observe(PolicyObservation(1, 0, 1.0))
    with pytest.raises(ContractViolation):
        pol.select(3)


# --- successive elimination ------------------------------------------------

def test_se_hand_trace():
    # r = sqrt(2 ln 10 / n) drops below 0.5 first at n = 19
    se = SuccessiveElimination(2, 10)
    reward = {0: 1.0, 1: 0.0}
    t = 0
    for block in range(1, 20):
        for _ in range(2):
            a = se.select(t)
            se.observe(PolicyObservation(t, a, reward[a]))
            t += 1
        assert se.active == ([0, 1] if block < 19 else [0])
    assert se.select(t) == 0


def test_se_rejects_eliminated_arm():
    se = SuccessiveElimination(2, 10)
    se.active = [0]
    se._pending = 1
    with pytest.raises(ContractViolation):
        se.observe(PolicyObservation(0, 1, 0.0))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32), st.integers(2, 6))
def test_se_active_set_non_increasing_and_never_empty(seed, K):
    rng = np.random.default_rng(seed)
    means = rng.random(K)
    se = SuccessiveElimination(K, 500)
    sizes = []
    for t in range(500):
        a = se.select(t)
        se.observe(PolicyObservation(t, a, float(rng.random() < means[a])))
        sizes.append(len(se.active))
    assert all(a >= b for a, b in zip(sizes, sizes[1:]))
    assert sizes[-1] >= 1


# --- benchmarks ------------------------------------------------------------

def test_benchmark_selection_examples():
    means = (0.2, 0.9, 0.5)
    best = BestArm(means)
    alt = TopTwoAlternating(means)
    got_best, got_alt = [], []
    for t in range(10):
        got_best.append(feed(best, t, 0.0))
        got_alt.append(feed(alt, t, 0.0))
    assert got_best == [1] * 10
    assert got_alt == [1, 2] * 5


def test_top_two_tie_lowest_index():
    assert top_two([0.9, 0.5, 0.5]) == (0, 1)
    with pytest.raises(ValueError):
        TopTwoRandom([0.5], np.random.default_rng(0))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32))
def test_benchmarks_ignore_observations(seed):
    means = (0.2, 0.9, 0.5, 0.6)
    rng = np.random.default_rng(seed)
    for make in (lambda: BestArm(means), lambda: TopTwoAlternating(means),
                 lambda: TopTwoRandom(means, np.random.default_rng(77))):
        p, q = make(), make()
        for t in range(200):
            assert feed(p, t, float(rng.random())) == feed(q, t, 0.0)


def _instance(priming, T=40, arms=bern(0.3, 0.8, 0.6)):
    return BanditInstance(arms, priming, T)


def test_benchmark_reward_examples():
    inst = _instance(PrimingSpec(10, DiscreteDist.point(0)))
    assert all(benchmark_expected_reward(inst, "best-arm", t) == 0.8 for t in range(30))
    assert all(benchmark_expected_reward(inst, "top-two-random", t) == pytest.approx(0.7) for t in range(30))
    inst = _instance(PrimingSpec(10, DiscreteDist.uniform(0, 10)))
    assert benchmark_expected_reward(inst, "best-arm", 0) == pytest.approx(0.8 * 2 / 11, abs=1e-15)


def test_expected_curve_matches_pointwise():
    inst = _instance(PrimingSpec(6, DiscreteDist.uniform(0, 2), DiscreteDist.uniform(4, 6)), T=31)
    for kind in ("best-arm", "top-two-random", "top-two-alternating"):
        curve = benchmark_expected_curve(inst, kind)
        ref = [benchmark_expected_reward(inst, kind, t) for t in range(31)]
        assert curve.tolist() == pytest.approx(ref, abs=1e-15)


@pytest.mark.parametrize("kind", ["best-arm", "top-two-random", "top-two-alternating"])
def test_analytic_matches_simulation(kind):
    inst = _instance(PrimingSpec(6, DiscreteDist.uniform(0, 2), DiscreteDist.uniform(4, 6)), T=30)
    traces = run_episodes(inst, kind, range(1000))
    cum = np.stack([tr.cumulative for tr in traces])
    mean, se = cum.mean(axis=0), cum.std(axis=0, ddof=1) / math.sqrt(len(traces))
    analytic = np.cumsum(benchmark_expected_curve(inst, kind))
    assert np.all(np.abs(mean - analytic) <= 3 * se + 1e-12)


def test_top_two_random_coin_is_fair():
    inst = _instance(PrimingSpec(10, DiscreteDist.point(0)), T=10**4)
    arms = run_episode(inst, "top-two-random", 3).arms
    assert set(arms.tolist()) == {1, 2}
    assert abs(np.mean(arms == 1) - 0.5) < 0.02
