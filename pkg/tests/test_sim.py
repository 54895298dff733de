import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import binom, chisquare
from statsmodels.stats.proportion import proportion_confint

from instances import random_kernel
from markov_recurrence import (
    KernelSchedule,
    ReferenceMeasure,
    SupportSet,
    empirical_vs_exact,
    estimate_return_prob,
    identity_kernel,
    kernel_from_map,
    sample_path,
    validate_kernel,
    wilson_interval,
)
from markov_recurrence.sim import Z95, exact_return_prob

EXM = validate_kernel([[0, 0, 1], [.5, .5, 0], [0, 0, 1]])
EX2 = validate_kernel([[.25] * 4, [.25] * 4, [0, 0, .5, .5], [0, 0, .5, .5]])


def S(n, *idx):
    return SupportSet.from_indices(n, idx)


# -- paths -------------------------------------------------------------------

def test_deterministic_path_is_the_orbit():
    t = [3, 0, 4, 1, 2]
    path = sample_path(kernel_from_map(t), 2, 12, seed=1)
    x, orbit = 2, [2]
    for _ in range(12):
        x = t[x]
        orbit.append(x)
    assert list(path.states) == orbit
    assert path.times == tuple(range(13))


def test_path_seed_determinism():
    q = validate_kernel(np.full((5, 5), 0.2))
    a = sample_path(q, 0, 50, seed=7)
    assert a == sample_path(q, 0, 50, seed=7)
    assert a.states != sample_path(q, 0, 50, seed=8).states


def test_exm_path_is_absorbed():
    path = sample_path(EXM, 0, 20, seed=3)
    assert path.states == (0,) + (2,) * 20


def test_exm_path_from_one_stays_then_jumps():
    states = sample_path(EXM, 1, 200, seed=11).states
    k = states.index(0) if 0 in states else len(states)
    assert set(states[:k]) == {1}
    assert set(states[k + 1:]) <= {2}


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_paths_follow_the_support(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 10))
    q = random_kernel(rng, n, density=rng.uniform(0.1, 0.5))
    path = sample_path(q, int(rng.integers(n)), 100, seed=seed)
    for x, y in zip(path.states, path.states[1:]):
        assert q.support[x, y]


def test_one_step_distribution_chi_square():
    row = np.array([0.1, 0.2, 0.3, 0.4])
    q = validate_kernel(np.tile(row, (4, 1)))
    ends = [sample_path(q, 0, 1, seed=s).states[1] for s in range(4000)]
    counts = np.bincount(ends, minlength=4)
    assert chisquare(counts, row * len(ends)).pvalue > 1e-3


def test_schedule_path_uses_start_time():
    sched = KernelSchedule((kernel_from_map([1, 0]), identity_kernel(2)), 2)
    assert sample_path(sched, 0, 4, seed=0, start_time=0).states == (0, 1, 1, 0, 0)
    assert sample_path(sched, 0, 4, seed=0, start_time=1).states == (0, 0, 1, 1, 0)


# -- Wilson interval ---------------------------------------------------------

def test_z_value():
    assert Z95 == pytest.approx(1.959963984540054)


@pytest.mark.parametrize("k,n", [(0, 100), (3, 100), (50, 100), (100, 100), (2500, 10000), (1, 7)])
def test_wilson_against_statsmodels(k, n):
    lo, hi = wilson_interval(k, n)
    ref = proportion_confint(k, n, alpha=0.05, method="wilson")
    assert lo == pytest.approx(ref[0], abs=1e-12)
    assert hi == pytest.approx(ref[1], abs=1e-12)


def test_wilson_exact_coverage_near_nominal():
    # exact binomial coverage at p = 1/4 with 10^4 trials
    n, p = 10_000, 0.25
    ks = np.arange(n + 1)
    cover = np.array([lo <= p <= hi for lo, hi in (wilson_interval(int(k), n) for k in ks)])
    coverage = binom.pmf(ks[cover], n, p).sum()
    assert abs(coverage - 0.95) < 0.005


def test_wilson_rejects_zero_trials():
    with pytest.raises(ValueError):
        wilson_interval(0, 0)


# -- estimates ---------------------------------------------------------------

def test_ex2_estimate_covers_quarter():
    est = estimate_return_prob(EX2, 0, S(4, 0), 1, 10_000, seed=2024)
    assert est.covers(0.25)
    assert est.hi - est.lo < 0.02


def test_exact_zero_probability():
    est = estimate_return_prob(EXM, 0, S(3, 0), 5, 1000, seed=1)
    assert est.point == 0 and est.lo == 0 and est.covers(0.0)
    assert exact_return_prob(EXM, 0, S(3, 0), 5) == 0


def test_exm_return_to_one():
    assert exact_return_prob(EXM, 1, S(3, 1), 3) == pytest.approx(0.125)
    est = estimate_return_prob(EXM, 1, S(3, 1), 3, 20_000, seed=5)
    assert est.covers(0.125)


def test_estimate_determinism_and_shards():
    a = estimate_return_prob(EX2, 0, S(4, 2, 3), 2, 5000, seed=9, shards=4)
    assert a == estimate_return_prob(EX2, 0, S(4, 2, 3), 2, 5000, seed=9, shards=4)
    assert a.trials == 5000
    b = estimate_return_prob(EX2, 0, S(4, 2, 3), 2, 5000, seed=9, shards=1)
    assert abs(a.point - b.point) < 0.05


def test_too_few_trials():
    with pytest.raises(ValueError):
        estimate_return_prob(EX2, 0, S(4, 0), 1, 50, seed=0)


def test_inhomogeneous_exact_probability():
    sched = KernelSchedule((validate_kernel([[.5, .5], [0, 1]]), kernel_from_map([1, 0])), 2)
    # from 0 at time 0: stay or move, then swap
    assert exact_return_prob(sched, 0, S(2, 0), 2) == pytest.approx(0.5)
    assert exact_return_prob(sched, 0, S(2, 0), 2, start_time=1) == pytest.approx(0.0)
    assert estimate_return_prob(sched, 0, S(2, 0), 2, 4000, seed=3).covers(0.5)


def test_empirical_vs_exact_rows():
    m = ReferenceMeasure.uniform(4)
    pairs = [(0, S(4, 0), 1), (2, S(4, 2, 3), 3), (0, S(4, 1), 2)]
    rep = empirical_vs_exact(EX2, m, pairs, 2000, seed=100)
    assert rep.total == 3 and 0 <= rep.fraction <= 1
    row = rep.rows[1]
    assert row["exact"] == pytest.approx(1.0) and row["mass"] == pytest.approx(0.5)
    assert row["covered"]
    first = estimate_return_prob(EX2, 0, S(4, 0), 1, 2000, seed=100)
    assert rep.rows[0]["point"] == first.point
