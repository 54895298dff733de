from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from markov_recurrence import (
    PiecewiseMap,
    classify_with_refinement,
    discretize_map,
    ex5_map,
    ex6_map,
    identity_map,
    orbit_return_test,
)
from markov_recurrence.errors import InvalidPartition
from markov_recurrence.maps import (
    CERTAIN_NONRECURRENT,
    UNKNOWN,
    Const,
    Interval,
    Piece,
    Point,
    Reflect,
    Square,
    parse_interval,
)

F = Fraction
HALF = F(1, 2)


def two_cycle_map():
    """Constant pieces: [0, 1/2) -> 3/4 and [1/2, 1] -> 1/4, so 1/4 <-> 3/4."""
    return PiecewiseMap([Piece(Interval(F(0), HALF, True, False), Const(F(3, 4))),
                         Piece(Interval(HALF, F(1), True, True), Const(F(1, 4)))])


def ex6_float(x):
    if x == 0:
        return 0.8
    if x == 1:
        return 0.2
    return x * x if x < 0.5 else 1 - (1 - x) ** 2


# -- intervals and formulas --------------------------------------------------

def test_parse_interval():
    iv = parse_interval("(0, 1/2)")
    assert iv == Interval(F(0), HALF, False, False)
    assert not iv.contains(0) and iv.contains(F(1, 3)) and not iv.contains(HALF)
    assert parse_interval("[1/2, 1]").contains(1)
    with pytest.raises(ValueError):
        parse_interval("0, 1")


def test_interval_operations():
    a = Interval(F(0), F(1), True, True)
    b = Interval(HALF, F(2), False, True)
    c = a.intersect(b)
    assert c == Interval(HALF, F(1), False, True)
    assert [str(x) for x in a.remove_point(HALF)] == ["[0, 1/2)", "(1/2, 1]"]
    assert Interval(HALF, HALF, True, False).is_empty()


def test_ex6_values():
    t = ex6_map()
    assert t(0) == F(4, 5) and t(1) == F(1, 5)
    assert t(HALF) == F(3, 4) and t(F(1, 3)) == F(1, 9)
    assert t(F(1, 4)) == F(1, 16) and t(F(3, 4)) == F(15, 16)


def test_ex5_values():
    t = ex5_map()
    assert t(0) == 1 and t(1) == 1 and t(F(1, 3)) == F(1, 9)


def test_formula_inverse():
    r = Reflect(Square())
    for y in (0.1, 0.5, 0.9):
        assert float(r(F(r.inverse(y)))) == pytest.approx(y)


# -- two-sided points against mpmath ----------------------------------------

@pytest.mark.parametrize("x0", [F(1, 3), F(2, 3), F(7, 10), F(1, 7), HALF])
def test_point_orbit_matches_high_precision(x0):
    t = ex6_map()
    pt = Point.exact(x0)
    with mpmath.workprec(20000):
        x = mpmath.mpf(x0.numerator) / x0.denominator
        for _ in range(12):
            pt = t.on_point(pt)
            x = x * x if x < 0.5 else 1 - (1 - x) ** 2
            # compare the distance to the nearer endpoint in relative terms
            ref = min(x, 1 - x)
            got = pt.s
            if isinstance(got, Fraction):
                got = mpmath.mpf(got.numerator) / got.denominator
            assert (x > 0.5) == pt.high
            assert float(abs(got - ref) / ref) < 1e-60


def test_point_near_one_keeps_precision():
    pt = Point.exact(F(3, 4))
    sq = Reflect(Square())
    for _ in range(40):
        pt = sq.on_point(pt)
    # 1 - x = (1/4)**(2**40) is far below double precision but still positive
    assert pt.high and pt.compare(1) < 0
    assert pt.value() == 1.0


def test_point_rejects_outside():
    with pytest.raises(ValueError):
        Point.exact(F(3, 2))


# -- discretization ----------------------------------------------------------

def test_identity_discretization_is_identity():
    pair = discretize_map(identity_map(), 8)
    assert np.array_equal(pair.outer.support, np.eye(8, dtype=bool))
    assert np.allclose(pair.outer.probs, np.eye(8))


def test_ex6_grid_kernel_at_ten():
    pair = discretize_map(ex6_map(), 10)
    sup = pair.outer.support
    # cell 0 contains 0, which is thrown to 4/5 in cell 8
    assert sup[0, 8] and pair.outer.probs[0, 8] == 0
    assert sup[9, 2] and pair.outer.probs[9, 2] == 0
    # [0.4, 0.5) squares into [0.16, 0.25): cells 1 and 2
    assert set(np.flatnonzero(sup[4])) == {1, 2}
    assert np.allclose(pair.outer.probs.sum(axis=1), 1)


@pytest.mark.parametrize("make,n", [(ex6_map, 10), (ex6_map, 37), (ex5_map, 16), (two_cycle_map, 8)])
def test_inner_subset_of_outer(make, n):
    pair = discretize_map(make(), n)
    assert not (pair.inner_support & ~pair.outer.support).any()
    assert not ((pair.outer.probs > 0) & ~pair.inner_support).any()


def test_ulam_probabilities_against_sampling():
    n, per_cell = 10, 4000
    pair = discretize_map(ex6_map(), n)
    est = np.zeros((n, n))
    for i in range(n):
        xs = (i + (np.arange(per_cell) + 0.5) / per_cell) / n
        ys = np.where(xs < 0.5, xs**2, 1 - (1 - xs) ** 2)
        js = np.minimum((ys * n).astype(int), n - 1)
        est[i] = np.bincount(js, minlength=n) / per_cell
    assert np.allclose(pair.outer.probs, est, atol=2e-3)


@settings(max_examples=200, deadline=None)
@given(st.fractions(min_value=0, max_value=1, max_denominator=10**6), st.integers(2, 60))
def test_outer_support_contains_every_transition(x, n):
    pair = discretize_map(ex6_map(), n)
    y = ex6_map()(x)
    i, j = min(int(x * n), n - 1), min(int(y * n), n - 1)
    assert pair.outer.support[i, j]


def test_too_few_cells():
    with pytest.raises(InvalidPartition):
        discretize_map(ex6_map(), 1)


# -- partitions --------------------------------------------------------------

def test_invalid_partitions():
    sq = Square()
    with pytest.raises(InvalidPartition):
        PiecewiseMap([Piece(Interval(F(0), HALF, True, False), sq)])
    with pytest.raises(InvalidPartition):
        PiecewiseMap([Piece(Interval(F(0), HALF, True, True), sq),
                      Piece(Interval(F(1, 4), F(1), True, True), sq)])
    with pytest.raises(InvalidPartition):
        PiecewiseMap([Piece(Interval(F(0), HALF, True, False), sq),
                      Piece(Interval(HALF, F(1), False, True), sq)])
    with pytest.raises(InvalidPartition):
        PiecewiseMap([Piece(Interval(F(0), F(2), True, True), sq)])
    with pytest.raises(ValueError):
        Const(F(2))
    with pytest.raises(InvalidPartition):
        PiecewiseMap([Piece(Interval(F(0), F(1), False, True), sq)])


def test_override_covers_missing_point():
    t = PiecewiseMap([Piece(Interval(F(0), HALF, True, False), sq := Square()),
                      Piece(Interval(HALF, F(1), False, True), sq)], overrides=[(HALF, 0)])
    assert t(HALF) == 0


# -- refinement --------------------------------------------------------------

def test_ex6_refinement_shrinks_unknown():
    levels = classify_with_refinement(ex6_map(), [10, 100, 1000])
    lengths = [lv.unknown_length for lv in levels]
    assert lengths[0] > lengths[1] > lengths[2]
    assert float(lengths[2]) < 0.05
    # the attractor cells next to 0 and 1 stay undecided
    for lv in levels:
        assert 0 in lv.unknown and lv.n_cells - 1 in lv.unknown


def test_ex5_all_unknown():
    for lv in classify_with_refinement(ex5_map(), [10, 100]):
        assert all(v == UNKNOWN for v in lv.verdicts)


def test_identity_all_unknown():
    lv, = classify_with_refinement(identity_map(), [12])
    assert len(lv.unknown) == 12


def test_certificates_are_sound_on_two_cycle():
    lv, = classify_with_refinement(two_cycle_map(), [8])
    # 1/4 and 3/4 are genuinely periodic, every other cell maps into them
    assert lv.unknown.indices() == (2, 6)
    assert lv.verdicts.count(CERTAIN_NONRECURRENT) == 6


def test_schedule_must_increase():
    with pytest.raises(ValueError):
        classify_with_refinement(ex6_map(), [10, 10])


def test_level_record():
    lv, = classify_with_refinement(ex6_map(), [10])
    rec = lv.to_record()
    assert rec["n_cells"] == 10 and rec["n_unknown"] == len(rec["unknown_cells"])


# -- orbits ------------------------------------------------------------------

def test_identity_orbit_returns_at_once():
    r = orbit_return_test(identity_map(), F(1, 3), 1e-9, 10)
    assert r.returned_at == 1


def test_two_cycle_orbit():
    r = orbit_return_test(two_cycle_map(), F(1, 4), 1e-12, 10)
    assert r.returned_at == 2 and r.exact_steps >= 2


@pytest.mark.parametrize("x0", [F(1, 3), F(2, 3), HALF, F(0), F(1)])
def test_ex6_orbits_do_not_return(x0):
    r = orbit_return_test(ex6_map(), x0, 1e-3, 10**4)
    assert r.returned_at is None
    assert r.min_distance >= 1e-3


def test_ex6_orbit_matches_float_prefix():
    x, best = 1 / 3, np.inf
    for _ in range(8):
        x = ex6_float(x)
        best = min(best, abs(x - 1 / 3))
    r = orbit_return_test(ex6_map(), F(1, 3), 1e-9, 8)
    assert r.min_distance == pytest.approx(best)
    assert r.exact_steps == 8


def test_long_orbit_stops_on_cycle():
    r = orbit_return_test(ex6_map(), F(1, 3), 1e-3, 10**6)
    assert r.returned_at is None and r.cycle_at is not None and r.cycle_at < 1000


def test_orbit_arguments():
    with pytest.raises(ValueError):
        orbit_return_test(ex6_map(), F(1, 3), 0, 10)
