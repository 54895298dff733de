"""Multiple-recurrence probe.

For a set ``A`` and ``k >= 2`` look for ``n >= 1`` with

    m(A & Q^{-n}(A) & Q^{-2n}(A) & ... & Q^{-(k-1)n}(A)) > 0.

``k = 2`` is ordinary Poincare recurrence. For ``k >= 3`` the statement is
an open conjecture for general Markov chains, so results are reported and
never asserted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import ReferenceMeasure, StochasticKernel
from .errors import DimensionMismatch, EmptySet
from .sets import SupportSet, fast_step, trace_bits


@dataclass(frozen=True)
class MultiRecResult:
    k: int
    found_n: int
    mass: float
    searched_bound: int
    exhaustive: bool

    def to_record(self) -> dict:
        return {"k": self.k, "n": self.found_n, "mass": self.mass,
                "searched_bound": self.searched_bound, "exhaustive": self.exhaustive}


def _validate(q, m, a, k):
    if k < 2:
        raise ValueError("k must be at least 2")
    if a.n != q.n or m.n != q.n:
        raise DimensionMismatch("kernel, measure and set must share the state space")
    if not m.is_positive(a.bits):
        raise EmptySet(f"m(A) = 0 for A = {set(a.indices())}")


def furstenberg_probe(q: StochasticKernel, m: ReferenceMeasure, a: SupportSet, k: int,
                      n_max: int = None) -> MultiRecResult:
    """Smallest ``n`` whose ``k``-fold intersection has positive mass.

    Reads ``Q^{-jn}(A)`` off the preimage trace (preperiod ``P``, period
    ``L``). Once ``n > P`` every index ``jn`` with ``j >= 1`` lies in the
    periodic window and its position there depends only on ``n mod L``, so
    ``n`` in ``[1, P + L]`` covers every case. Without ``n_max`` that range
    is searched and the result is exhaustive; with ``n_max`` the search stops
    at ``n_max`` and is exhaustive only if ``n_max >= P + L``.
    """
    _validate(q, m, a, k)
    seq, p, l = trace_bits(fast_step(q, "pre"), a.bits)
    bound = p + l
    limit = bound if n_max is None else n_max

    def at(t):
        return seq[t] if t < p + l else seq[p + (t - p) % l]

    for n in range(1, limit + 1):
        bits = a.bits
        for j in range(1, k):
            bits &= at(j * n)
            if not bits:
                break
        mass = m.mass(bits)
        if mass > m.zero_tol:
            return MultiRecResult(k, n, mass, limit, limit >= bound)
    return MultiRecResult(k, None, 0.0, limit, limit >= bound)


def furstenberg_oracle(q: StochasticKernel, m: ReferenceMeasure, a: SupportSet, k: int,
                       n_limit: int) -> MultiRecResult:
    """Brute-force counterpart of :func:`furstenberg_probe`.

    Builds the sequence ``Q^{-t}(A)`` for ``t <= (k-1) n_limit`` by repeated
    boolean matrix-vector products and checks every ``n <= n_limit`` without
    using periodicity. Exhaustive when ``n_limit >= 2**n_states``, since no
    set sequence can have more distinct terms than that.
    """
    _validate(q, m, a, k)
    adj = q.support.astype(np.int64)
    v = a.to_bool()
    seq = [v]
    for _ in range((k - 1) * n_limit):
        v = (adj @ seq[-1].astype(np.int64)) > 0
        seq.append(v)
    base = a.to_bool()
    w = np.asarray(m.weights)
    for n in range(1, n_limit + 1):
        inter = base.copy()
        for j in range(1, k):
            inter &= seq[j * n]
        mass = float(w[inter].sum())
        if mass > m.zero_tol:
            return MultiRecResult(k, n, mass, n_limit, n_limit >= 2 ** q.n)
    return MultiRecResult(k, None, 0.0, n_limit, n_limit >= 2 ** q.n)
