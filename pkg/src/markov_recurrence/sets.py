"""Set-valued dynamics on the support graph.

Preimages and images of sets, eventually periodic traces of iterated set
maps, communicating classes, and exact divergence decisions for the three
recurrence series

* ``sum_{n>=1} m(Q^{-n}(A) & A)``   (:func:`series_main`)
* ``sum_{n>=0} m(Q^{n}(A) & A)``    (:func:`series_forward`)
* ``sum_{n>=1} (Q^n m)(A)``         (:func:`series_pushforward`)

Sets are stored as Python integer bitmasks, bit ``i`` standing for state ``i``.
Since there are only ``2**n`` subsets, every iterated set sequence repeats,
and the first two series diverge exactly when some term inside the repeating
window is positive.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .chain import ReferenceMeasure, StochasticKernel, StateSpace, bits_from_bool
from .errors import DimensionMismatch, EmptySet

REPORT_EXTRA_TERMS = 16


@dataclass(frozen=True)
class SupportSet:
    """Subset of a finite state space of size ``n``, as a bitmask."""

    n: int
    bits: int = 0

    def __post_init__(self):
        if self.bits < 0 or self.bits >> self.n:
            raise ValueError(f"bitmask {self.bits:#x} does not fit {self.n} states")

    @classmethod
    def from_indices(cls, n: int, indices: Iterable[int]) -> "SupportSet":
        bits = 0
        for i in indices:
            i = int(i)
            if not 0 <= i < n:
                raise IndexError(f"state {i} outside 0..{n - 1}")
            bits |= 1 << i
        return cls(n, bits)

    @classmethod
    def from_bool(cls, mask) -> "SupportSet":
        mask = np.asarray(mask, dtype=bool)
        return cls(mask.size, bits_from_bool(mask))

    @classmethod
    def full(cls, n: int) -> "SupportSet":
        return cls(n, (1 << n) - 1)

    @classmethod
    def empty(cls, n: int) -> "SupportSet":
        return cls(n, 0)

    def to_bool(self) -> np.ndarray:
        return np.array([(self.bits >> i) & 1 for i in range(self.n)], dtype=bool)

    def indices(self) -> tuple:
        return tuple(i for i in range(self.n) if (self.bits >> i) & 1)

    def labels(self, space: StateSpace) -> list:
        return [space.labels[i] for i in self.indices()]

    def complement(self) -> "SupportSet":
        return SupportSet(self.n, ((1 << self.n) - 1) & ~self.bits)

    def _other(self, other):
        if not isinstance(other, SupportSet):
            return NotImplemented
        if other.n != self.n:
            raise DimensionMismatch(f"sets over {self.n} and {other.n} states")
        return other.bits

    def __or__(self, other):
        return SupportSet(self.n, self.bits | self._other(other))

    def __and__(self, other):
        return SupportSet(self.n, self.bits & self._other(other))

    def __sub__(self, other):
        return SupportSet(self.n, self.bits & ~self._other(other))

    def __le__(self, other):
        return self.bits & ~self._other(other) == 0

    def __lt__(self, other):
        return self <= other and self.bits != other.bits

    def __ge__(self, other):
        return other <= self

    def __contains__(self, i):
        return bool((self.bits >> int(i)) & 1)

    def __len__(self):
        return bin(self.bits).count("1")

    def __iter__(self):
        return iter(self.indices())

    def __bool__(self):
        return self.bits != 0

    def __repr__(self):
        return f"SupportSet({set(self.indices())})"


def _check(q: StochasticKernel, s: SupportSet):
    if s.n != q.n:
        raise DimensionMismatch(f"set over {s.n} states, kernel over {q.n}")


def union_of_masks(masks, bits: int) -> int:
    out = 0
    i = 0
    while bits:
        if bits & 1:
            out |= masks[i]
        bits >>= 1
        i += 1
    return out


def preimage_bits(q: StochasticKernel, bits: int) -> int:
    return union_of_masks(q.pred_masks, bits)


def image_bits(q: StochasticKernel, bits: int) -> int:
    return union_of_masks(q.succ_masks, bits)


def preimage(q: StochasticKernel, b: SupportSet) -> SupportSet:
    """States that enter ``b`` in one step with positive probability."""
    _check(q, b)
    return SupportSet(q.n, preimage_bits(q, b.bits))


def image(q: StochasticKernel, a: SupportSet) -> SupportSet:
    """States reachable from ``a`` in one step.

    On a finite space with the discrete topology the neighbourhood closure
    in the definition of the image is the union of the support rows.
    """
    _check(q, a)
    return SupportSet(q.n, image_bits(q, a.bits))


def reach_closure_bits(masks, bits: int) -> int:
    """States connected to ``bits`` by a path of length >= 1 through ``masks``."""
    acc = union_of_masks(masks, bits)
    while True:
        nxt = acc | union_of_masks(masks, acc)
        if nxt == acc:
            return acc
        acc = nxt


def fast_step(q: StochasticKernel, kind: str) -> Callable[[int], int]:
    """Bitmask-to-bitmask preimage (``kind='pre'``) or image map."""
    if kind not in ("pre", "img"):
        raise ValueError(f"unknown set map {kind!r}")
    if q.n <= 16:
        table = (q.pre_table if kind == "pre" else q.img_table).tolist()
        return table.__getitem__
    masks = q.pred_masks if kind == "pre" else q.succ_masks
    return lambda b: union_of_masks(masks, b)


def trace_bits(step: Callable[[int], int], start: int):
    """Iterate ``step`` from ``start`` until a set repeats.

    Returns ``(seq, P, L)`` where ``seq`` lists the ``P + L`` distinct sets
    and ``seq[P]`` is the first set that recurs, with period ``L``.
    """
    seen = {}
    seq = []
    cur = start
    while cur not in seen:
        seen[cur] = len(seq)
        seq.append(cur)
        cur = step(cur)
    p = seen[cur]
    return seq, p, len(seq) - p


@dataclass(frozen=True)
class SetTrace:
    """Eventually periodic set sequence ``S_t = step^t(S_0)``.

    ``sets`` holds ``S_0 .. S_{P+L-1}``; ``S_{t}`` for larger ``t`` repeats the
    window ``S_P .. S_{P+L-1}``. ``P`` and ``L`` are minimal.
    """

    sets: tuple
    preperiod: int
    period: int

    def index(self, t: int) -> int:
        if t < 0:
            raise ValueError("trace index must be nonnegative")
        p, l = self.preperiod, self.period
        return t if t < p + l else p + (t - p) % l

    def at(self, t: int) -> SupportSet:
        return self.sets[self.index(t)]

    def union(self, t_from: int = 0) -> SupportSet:
        """Union of ``S_t`` over all ``t >= t_from``."""
        # the periodic window recurs past any t_from
        bits = 0
        for t in range(min(t_from, self.preperiod), self.preperiod + self.period):
            bits |= self.sets[t].bits
        return SupportSet(self.sets[0].n, bits)


def iterate_trace(step: Callable[[SupportSet], SupportSet], start: SupportSet) -> SetTrace:
    """Trace of an arbitrary set map; terminates within ``2**n`` steps."""
    seen = {}
    seq = []
    cur = start
    while cur.bits not in seen:
        seen[cur.bits] = len(seq)
        seq.append(cur)
        cur = step(cur)
        if cur.n != start.n:
            raise DimensionMismatch("set map changed the state-space size")
    p = seen[cur.bits]
    return SetTrace(tuple(seq), p, len(seq) - p)


def preimage_trace(q: StochasticKernel, a: SupportSet) -> SetTrace:
    _check(q, a)
    seq, p, l = trace_bits(fast_step(q, "pre"), a.bits)
    return SetTrace(tuple(SupportSet(q.n, b) for b in seq), p, l)


def image_trace(q: StochasticKernel, a: SupportSet) -> SetTrace:
    _check(q, a)
    seq, p, l = trace_bits(fast_step(q, "img"), a.bits)
    return SetTrace(tuple(SupportSet(q.n, b) for b in seq), p, l)


@dataclass(frozen=True)
class DivergenceVerdict:
    """Decision for one recurrence series on one set.

    ``total`` is the exact value of the series when it converges and
    ``inf`` otherwise. ``preperiod``/``period`` describe the set trace the
    decision was read from (``None`` for the pushforward series).
    """

    kind: str
    set: SupportSet
    diverges: bool
    partial_sums: tuple
    witness: str
    preperiod: int = None
    period: int = None
    total: float = float("inf")

    def to_record(self, space: StateSpace = None) -> dict:
        labels = self.set.labels(space) if space is not None else list(self.set.indices())
        return {
            "series_kind": self.kind,
            "set": labels,
            "diverges": self.diverges,
            "P": self.preperiod,
            "L": self.period,
            "partial_sums": [float(x) for x in self.partial_sums],
            "total": None if self.diverges else float(self.total),
            "witness": self.witness,
        }


def _require_mass(m: ReferenceMeasure, a: SupportSet, q: StochasticKernel):
    _check(q, a)
    if m.n != q.n:
        raise DimensionMismatch(f"measure on {m.n} states, kernel on {q.n}")
    if not m.is_positive(a.bits):
        raise EmptySet(f"m(A) = 0 for A = {set(a.indices())}")


def _periodic_series(kind, q, m, a, step_kind, first_index):
    _require_mass(m, a, q)
    seq, p, l = trace_bits(fast_step(q, step_kind), a.bits)

    def term(t):
        idx = t if t < p + l else p + (t - p) % l
        return m.mass(seq[idx] & a.bits)

    lo = max(p, first_index)
    window = range(lo, lo + l)
    hits = [t for t in window if term(t) > m.zero_tol]
    n_report = p + l + REPORT_EXTRA_TERMS
    partial, acc = [], 0.0
    for t in range(first_index, n_report + 1):
        acc += term(t)
        partial.append(acc)
    arrow = "Q^-n(A)" if step_kind == "pre" else "Q^n(A)"
    if hits:
        t = hits[0]
        witness = (f"term n={t} of the periodic window [{lo}, {lo + l}) is "
                   f"m({arrow} & A) = {term(t):.6g} > 0; it repeats every {l} steps")
        total = float("inf")
    else:
        witness = f"all terms with n >= {lo} vanish (preperiod {p}, period {l})"
        total = sum(term(t) for t in range(first_index, lo))
    return DivergenceVerdict(kind, a, bool(hits), tuple(partial), witness, p, l, total)


def series_main(q: StochasticKernel, m: ReferenceMeasure, a: SupportSet) -> DivergenceVerdict:
    """Decide whether ``sum_{n>=1} m(Q^{-n}(A) & A)`` diverges."""
    return _periodic_series("main", q, m, a, "pre", 1)


def series_forward(q: StochasticKernel, m: ReferenceMeasure, a: SupportSet) -> DivergenceVerdict:
    """Decide whether ``sum_{n>=0} m(Q^{n}(A) & A)`` diverges."""
    return _periodic_series("forward", q, m, a, "img", 0)


@dataclass(frozen=True)
class CommunicatingClass:
    states: SupportSet
    closed: bool
    cyclic: bool


@dataclass(frozen=True)
class SCCDecomposition:
    """Communicating classes of the support graph.

    ``classes`` are ordered by smallest member. ``reaches[c]`` is the bitmask
    of class indices reachable from class ``c`` (including ``c`` itself).
    """

    classes: tuple
    class_of: tuple
    reaches: tuple

    def closed_classes(self) -> list:
        return [c for c in self.classes if c.closed]

    def closed_union(self) -> int:
        bits = 0
        for c in self.classes:
            if c.closed:
                bits |= c.states.bits
        return bits

    def cyclic_union(self) -> int:
        bits = 0
        for c in self.classes:
            if c.cyclic:
                bits |= c.states.bits
        return bits


def _tarjan(succ):
    """Iterative Tarjan; returns components in reverse topological order."""
    n = len(succ)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack, comps = [], []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, pos = work[-1]
            if pos < len(succ[v]):
                work[-1] = (v, pos + 1)
                w = succ[v][pos]
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(sorted(comp))
    return comps


def scc_decomposition(q: StochasticKernel) -> SCCDecomposition:
    n = q.n
    succ = [list(np.flatnonzero(q.support[i])) for i in range(n)]
    tarjan_order = _tarjan(succ)
    comps = sorted(tarjan_order, key=lambda c: c[0])
    class_of = [0] * n
    for c, comp in enumerate(comps):
        for v in comp:
            class_of[v] = c
    edges = [set() for _ in comps]
    for v in range(n):
        for w in succ[v]:
            if class_of[w] != class_of[v]:
                edges[class_of[v]].add(class_of[w])
    classes = []
    for c, comp in enumerate(comps):
        cyclic = len(comp) > 1 or bool(q.support[comp[0], comp[0]])
        classes.append(CommunicatingClass(SupportSet.from_indices(n, comp), not edges[c], cyclic))
    # Tarjan emits sinks first, so successors are finished before their sources
    reaches = [0] * len(comps)
    for comp in tarjan_order:
        c = class_of[comp[0]]
        bits = 1 << c
        for d in edges[c]:
            bits |= reaches[d]
        reaches[c] = bits
    return SCCDecomposition(tuple(classes), tuple(class_of), tuple(reaches))


def recurrent_core(q: StochasticKernel, m: ReferenceMeasure) -> int:
    """Union of the closed classes reachable from the support of ``m``."""
    dec = scc_decomposition(q)
    atoms = m.atoms
    reachable = atoms | reach_closure_bits(q.succ_masks, atoms)
    bits = 0
    for c in dec.classes:
        if c.closed and c.states.bits & reachable:
            bits |= c.states.bits
    return bits


def series_pushforward(q: StochasticKernel, m: ReferenceMeasure, a: SupportSet,
                       n_report: int = None) -> DivergenceVerdict:
    """Decide whether ``sum_{n>=1} (Q^n m)(A)`` diverges.

    The mass that ``Q^n m`` puts on transient states decays geometrically,
    while every closed class that ``m`` can reach keeps a positive share of
    mass on each of its states in Cesaro mean (its stationary law is
    positive there). So the series diverges exactly when ``A`` meets such a
    class. When it converges the sum is computed exactly from the
    fundamental matrix of the transient block.
    """
    _check(q, a)
    if m.n != q.n:
        raise DimensionMismatch(f"measure on {m.n} states, kernel on {q.n}")
    n = q.n
    if n_report is None:
        n_report = max(32, 4 * n)
    core = recurrent_core(q, m)
    partial, acc = [], 0.0
    mu = np.asarray(m.weights, dtype=float)
    mask = a.to_bool()
    for _ in range(n_report):
        mu = mu @ q.probs
        acc += float(mu[mask].sum())
        partial.append(acc)
    hit = core & a.bits
    if hit:
        state = (hit & -hit).bit_length() - 1
        witness = (f"A meets the closed class of state {q.space.labels[state]}, "
                   f"which is reachable from the support of m")
        return DivergenceVerdict("pushforward", a, True, tuple(partial), witness)
    closed = scc_decomposition(q).closed_union()
    transient = np.array([not (closed >> i) & 1 for i in range(n)], dtype=bool)
    total = 0.0
    if transient.any() and (mask & transient).any():
        qtt = q.probs[np.ix_(transient, transient)]
        rhs = (mask & transient)[transient].astype(float)
        h = np.linalg.solve(np.eye(qtt.shape[0]) - qtt, qtt @ rhs)
        total = float(np.asarray(m.weights)[transient] @ h)
    witness = "A misses every closed class reachable from the support of m"
    return DivergenceVerdict("pushforward", a, False, tuple(partial), witness, total=total)
