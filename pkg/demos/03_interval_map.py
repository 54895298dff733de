"""An interval map with no recurrent points, seen through grid kernels.

Squaring pulls everything in ``(0, 1/2)`` to 0 and the reflected square pulls
``[1/2, 1)`` to 1. The endpoints are thrown into the opposite basin, so no
point ever comes back. Grid kernels can only certify part of that, and the
undecided part shrinks as the grid is refined.
Run with ``python3 demos/03_interval_map.py``.
"""

from fractions import Fraction

from markov_recurrence import classify_with_refinement, discretize_map, ex6_map, orbit_return_test

t = ex6_map()
print("T(0) =", t(0), " T(1/2) =", t(Fraction(1, 2)), " T(1) =", t(1))

pair = discretize_map(t, 10)
print("\ncell transitions at n = 10 (outer support):")
for i, row in enumerate(pair.outer.support):
    print(f"  cell {i}: -> {[int(j) for j in row.nonzero()[0]]}")

print("\nrefinement:")
for level in classify_with_refinement(t, (10, 100, 1000)):
    print(f"  n = {level.n_cells:5d}: {len(level.unknown):3d} cells UNKNOWN, "
          f"length {float(level.unknown_length):.3f}")

print("\norbits (exact rationals first, then 256-bit floats):")
for x0 in (0, Fraction(1, 3), 1):
    r = orbit_return_test(t, x0, 0.01, 10**6)
    print(f"  x0 = {x0}: returned {r.returned_at}, min distance {r.min_distance:.3f}, "
          f"exact for {r.exact_steps} steps, cycle detected at step {r.cycle_at}")
