"""Recurrence on three small chains, read off the support graph.

Run with ``python3 demos/01_small_chains.py``.
"""

from markov_recurrence import (
    SupportSet,
    load_bundled,
    poincare_recurrent_set,
    preimage,
    preimage_trace,
    prp_check,
    pushforward,
    series_main,
    series_pushforward,
    strong_recurrent_set,
    topologically_recurrent_points,
)


def show(title):
    print(f"\n== {title}")


# Two states, all transitions positive. The preimage of either state is the
# whole space, yet one step of the chain moves the uniform measure around.
spec = load_bundled("ex0")
q, m = spec.kernel, spec.measure
a = SupportSet.from_indices(2, [0])
show("ex0: preimages and pushforwards are different objects")
print("Q^-1({s0})      =", preimage(q, a).labels(spec.space))
print("m(Q^-1({s0}))   =", m.mass(preimage(q, a)))
print("(Qm)({s0})      =", pushforward(q, m).mass(a))

# s0 jumps into the absorbing s2; s1 lingers with probability 1/2.
spec = load_bundled("exM")
q, m = spec.kernel, spec.measure
a = SupportSet.from_indices(3, [0])
show("exM: a transient state")
tr = preimage_trace(q, a)
print(f"preimage trace of {{s0}}: preperiod {tr.preperiod}, period {tr.period}")
print("partial sums of m(Q^-n A & A):", series_main(q, m, a).partial_sums)
print("recurrent part of {s0}:", poincare_recurrent_set(q, a).labels(spec.space))
print("topologically recurrent points:", topologically_recurrent_points(q, m).labels(spec.space))
v = prp_check(q, m)
print("PRP holds:", v.holds, "| witness:", v.witness.labels(spec.space))

# Every state recurs, but the first block leaks into the second for good.
spec = load_bundled("ex2")
q, m = spec.kernel, spec.measure
show("ex2: recurrence without strong recurrence")
print("PRP holds:", prp_check(q, m).holds)
for block in ([0, 1], [2, 3]):
    s = SupportSet.from_indices(4, block)
    print(f"strong recurrent part of {s.labels(spec.space)}:",
          strong_recurrent_set(q, s).labels(spec.space))
push = series_pushforward(q, m, SupportSet.from_indices(4, [0]))
print(f"sum over n >= 1 of (Q^n m)({{a0}}) = {push.total:.12f} (finite)")
