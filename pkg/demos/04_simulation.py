"""Monte Carlo return probabilities next to their exact values.

Run with ``python3 demos/04_simulation.py``.
"""

from markov_recurrence import SupportSet, empirical_vs_exact, load_bundled, sample_path

spec = load_bundled("exM")
print("a path of exM from s1:", [spec.space.labels[s] for s in sample_path(spec.kernel, 1, 12, seed=3).states])

spec = load_bundled("ex2")
q, m = spec.kernel, spec.measure
pairs = [(x, SupportSet.from_indices(4, [0]), t) for x in range(4) for t in (1, 2, 5)]
rep = empirical_vs_exact(q, m, pairs, trials=10_000, seed=7)
print(f"\nex2, A = {{a0}}, 10^4 trials per row")
print(f"{'x':>3} {'t':>2} {'estimate':>9} {'95% interval':>20} {'exact':>7}")
for r in rep.rows:
    print(f"{spec.space.labels[r['x']]:>3} {r['t']:>2} {r['point']:9.4f} "
          f"[{r['lo']:.4f}, {r['hi']:.4f}]{'':>3} {r['exact']:7.4f}")
print(f"coverage: {rep.covered}/{rep.total}")
