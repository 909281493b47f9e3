import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from priming_bandits.env import ArmSpec, BanditInstance, DiscreteDist, PrimingSpec
from priming_bandits.harness import (PolicySpec, RunTrace, mix_seed, monte_carlo_regret, run_episode,
                                     same_arm_counts, splitmix64, sublinearity_ratio, summarize,
                                     switching_histogram)

# log(5001)/log(2501) at 30 digits
LOG_RATIO = 1.08856182874326043078


def no_priming(N=10):
    return PrimingSpec(N, DiscreteDist.point(0))


def test_splitmix64_reference_vector():
    # first output of the reference generator seeded with 0
    assert splitmix64(0) == 0xE220A8397B1DCDAF


def test_mix_seed_separates_roles_and_replications():
    seeds = {mix_seed(1, r, role) for r in range(100) for role in (0, 1)}
    assert len(seeds) == 200
    assert mix_seed(1, 0) == mix_seed(1, 0)


# --- run_episode -----------------------------------------------------------

def test_constant_best_arm_total():
    inst = BanditInstance((ArmSpec.constant(0.7), ArmSpec.constant(0.1)), no_priming(), 1000)
    tr = run_episode(inst, "best-arm", 3)
    assert tr.cumulative[-1] == pytest.approx(0.7 * 1000, rel=1e-12)


def test_episode_determinism():
    inst = BanditInstance(tuple(ArmSpec.bernoulli(p) for p in (0.2, 0.5, 0.7)),
                          PrimingSpec(10, DiscreteDist.uniform(0, 3), DiscreteDist.uniform(6, 10)), 1500)
    for name in ("ucb1", "moss", "se", "wi-ucb", "wiwo-ucb", "top-two-random"):
        a, b = run_episode(inst, name, 99), run_episode(inst, name, 99)
        assert np.array_equal(a.arms, b.arms) and np.array_equal(a.accrued, b.accrued)


def test_wear_in_point_mass_two():
    inst = BanditInstance((ArmSpec.constant(1.0), ArmSpec.constant(0.5)), PrimingSpec(4, DiscreteDist.point(2)), 20)
    tr = run_episode(inst, "best-arm", 0)
    assert tr.accrued[0] == 0.0
    assert np.all(tr.accrued[1:] == 1.0)


def test_trace_invariants_and_diagnostics():
    inst = BanditInstance(tuple(ArmSpec.bernoulli(p) for p in (0.4, 0.6)), no_priming(), 300)
    tr = run_episode(inst, "ucb1", 1, diagnostics=True)
    assert len(tr.arms) == 300 and len(tr.diagnostics) == 300
    assert np.all(np.diff(tr.cumulative) >= 0)


# --- monte_carlo_regret ----------------------------------------------------

def _priming_instance(T=60):
    return BanditInstance(tuple(ArmSpec.bernoulli(p) for p in (0.3, 0.9, 0.6)),
                          PrimingSpec(6, DiscreteDist.uniform(0, 2), DiscreteDist.uniform(4, 6)), T)


@pytest.mark.parametrize("kind", ["best-arm", "top-two-random", "top-two-alternating"])
def test_self_regret_is_noise(kind):
    # the max over 60 correlated points exceeds 3 stderr for roughly 1 seed in 20
    curve = monte_carlo_regret(_priming_instance(), kind, kind, 1000, 0)
    assert np.all(np.abs(curve.mean) <= 3 * curve.stderr + 1e-12)


def test_worst_arm_linear_regret():
    inst = BanditInstance((ArmSpec.constant(0.7), ArmSpec.constant(0.0)), no_priming(), 500)
    curve = monte_carlo_regret(inst, PolicySpec("fixed-arm", {"arm": 1}), "best-arm", 4, 0)
    assert curve.mean == pytest.approx(0.7 * np.arange(1, 501), rel=1e-12)
    assert np.all(curve.stderr == 0)


@pytest.mark.parametrize("kind", ["best-arm", "top-two-random", "top-two-alternating"])
def test_analytic_vs_simulated_modes(kind):
    inst = _priming_instance()
    a = monte_carlo_regret(inst, "ucb1", kind, 600, 2, "analytic")
    s = monte_carlo_regret(inst, "ucb1", kind, 600, 2, "simulated")
    assert np.all(np.abs(a.mean - s.mean) <= 3 * s.stderr + 1e-12)


def test_parallel_determinism():
    inst = _priming_instance(200)
    base = monte_carlo_regret(inst, "wiwo-ucb", "top-two-random", 24, 7, "simulated", workers=1)
    for w in (4, 16):
        other = monte_carlo_regret(inst, "wiwo-ucb", "top-two-random", 24, 7, "simulated", workers=w)
        assert base.mean.tobytes() == other.mean.tobytes()
        assert base.stderr.tobytes() == other.stderr.tobytes()


def test_stderr_scaling():
    inst = _priming_instance(300)
    small = monte_carlo_regret(inst, "ucb1", "best-arm", 100, 3)
    large = monte_carlo_regret(inst, "ucb1", "best-arm", 400, 3)
    ratio = large.final_stderr / small.final_stderr
    assert abs(ratio - 0.5) <= 0.1


def test_runs_must_be_positive():
    with pytest.raises(ValueError):
        monte_carlo_regret(_priming_instance(), "ucb1", "best-arm", 0, 0)


# --- switching statistics --------------------------------------------------

def test_histogram_examples():
    # t = 1..5 see 1..5 earlier plays of the same arm
    hist = switching_histogram([[2] * 6], 15)
    assert hist.frequency[:7] == [0, 1, 1, 1, 1, 1, 0]
    assert len(hist.frequency) == 16
    assert same_arm_counts([0, 1] * 10, 2)[1:].tolist() == [1] * 18
    trace = [0, 0, 1, 1, 1, 0, 2, 2]
    hist = switching_histogram([trace], 1)
    assert hist.frequency[1] == 4


@settings(max_examples=50, deadline=None)
@given(st.lists(st.lists(st.integers(0, 4), min_size=20, max_size=20), min_size=1, max_size=5),
       st.integers(1, 16))
def test_histogram_mass_conservation(traces, W):
    hist = switching_histogram(traces, W)
    assert hist.total == (20 - 1) * len(traces)
    for tr in traces:
        counts = same_arm_counts(tr, W)
        for t in range(1, 20):
            assert counts[t - 1] == tr[max(0, t - W):t].count(tr[t])


def test_histogram_accepts_run_traces():
    tr = RunTrace(0, "x", np.array([1, 1, 1]), np.zeros(3))
    assert switching_histogram([tr], 15).frequency[:3] == [0, 1, 1]


def test_sublinearity_examples():
    t = np.arange(1, 5001, dtype=float)
    assert sublinearity_ratio(0.3 * t) == pytest.approx(2.0)
    assert sublinearity_ratio(0.3 * np.sqrt(t)) == pytest.approx(math.sqrt(2))
    assert sublinearity_ratio(0.3 * np.log1p(t)) == pytest.approx(LOG_RATIO, abs=1e-12)
    assert sublinearity_ratio(np.zeros(100)) is None
    assert sublinearity_ratio(-t) is None


def test_summarize():
    s = summarize([1.0, 2.0, 3.0, 4.0])
    assert s["mean"] == 2.5 and s["n"] == 4
    assert s["stderr"] == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)
