"""Recurrence classifiers, conservativity checks and theorem verifiers.

All checks are exact on support masks. Quantifiers over "every measurable
set" are realized either exhaustively (every subset, ``n <= 20``, bitmask
tables) or over a structured family of sets (singletons, communicating
classes, forward and backward closures); verdicts from the latter carry
``family_restricted=True``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .chain import (
    MAX_TABLE_STATES,
    KernelSchedule,
    ReferenceMeasure,
    StateSpace,
    StochasticKernel,
)
from .errors import DimensionMismatch, FamilyTooLarge, InhomogeneousChain
from .sets import (
    SupportSet,
    fast_step,
    image_bits,
    reach_closure_bits,
    recurrent_core,
    scc_decomposition,
    preimage_trace,
    trace_bits,
    union_of_masks,
)

ALL_SUBSETS = "ALL_SUBSETS"
STRUCTURED = "STRUCTURED"


class Property(str, enum.Enum):
    E_MAIN_ALL_A = "E_MAIN_ALL_A"
    PRP = "PRP"
    E_CONS = "E_CONS"
    E_CONS_MINUS = "E_CONS_MINUS"
    E_MAIN_PLUS_ALL_A = "E_MAIN_PLUS_ALL_A"
    E_MAIN_MES_ALL_A = "E_MAIN_MES_ALL_A"
    THEOREM1 = "THEOREM1"
    THEOREM2 = "THEOREM2"
    THEOREM4A = "THEOREM4A"
    THEOREM4C = "THEOREM4C"


@dataclass(frozen=True)
class PropertyVerdict:
    property_name: Property
    holds: bool
    witness: SupportSet = None
    family_restricted: bool = False
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.holds and self.witness is None:
            raise ValueError(f"failed {self.property_name.value} verdict needs a witness")

    def to_record(self, space: StateSpace = None) -> dict:
        def fmt(s):
            if s is None:
                return None
            return s.labels(space) if space is not None else list(s.indices())

        details = {k: fmt(v) if isinstance(v, SupportSet) else v for k, v in self.details.items()}
        return {
            "property": self.property_name.value,
            "holds": self.holds,
            "witness": fmt(self.witness),
            "family_restricted": self.family_restricted,
            "details": details,
        }


@dataclass(frozen=True)
class RecurrenceReport:
    set_a: SupportSet
    recurrent: SupportSet
    nonrecurrent: SupportSet
    strong_recurrent: SupportSet
    m_nonrecurrent: float

    def to_record(self, space: StateSpace = None) -> dict:
        f = (lambda s: s.labels(space)) if space is not None else (lambda s: list(s.indices()))
        return {
            "set": f(self.set_a),
            "recurrent": f(self.recurrent),
            "nonrecurrent": f(self.nonrecurrent),
            "strong_recurrent": f(self.strong_recurrent),
            "m_nonrecurrent": self.m_nonrecurrent,
        }


def _kernel(q) -> StochasticKernel:
    if isinstance(q, KernelSchedule):
        if not q.homogeneous:
            raise InhomogeneousChain("this check needs a time-homogeneous chain")
        return q.kernels[0]
    return q


def _check(q, m=None, a=None):
    if m is not None and m.n != q.n:
        raise DimensionMismatch(f"measure on {m.n} states, kernel on {q.n}")
    if a is not None and a.n != q.n:
        raise DimensionMismatch(f"set over {a.n} states, kernel on {q.n}")


# -- pointwise classifiers ---------------------------------------------------

def poincare_recurrent_set(q: StochasticKernel, a: SupportSet) -> SupportSet:
    """Points of ``a`` that come back to ``a`` at some time ``t >= 1``."""
    q = _kernel(q)
    _check(q, a=a)
    return preimage_trace(q, a).union(1) & a


def nonrecurrent_set(q: StochasticKernel, a: SupportSet) -> SupportSet:
    return a - poincare_recurrent_set(q, a)


def strong_recurrent_set(q: StochasticKernel, a: SupportSet) -> SupportSet:
    """Points of ``a`` that are inside ``a`` with probability one at some ``t >= 1``.

    Iterates the "certainly inside" map ``C -> {x : supp Q(x, .) <= C}``,
    the dual of the preimage, from ``C_0 = a``.
    """
    q = _kernel(q)
    _check(q, a=a)
    full = (1 << q.n) - 1
    pre = fast_step(q, "pre")
    seq, p, l = trace_bits(lambda c: full & ~pre(full & ~c), a.bits)
    bits = 0
    for c in seq[1:]:
        bits |= c
    if p == 0:
        bits |= seq[0]
    return SupportSet(q.n, bits & a.bits)


def topologically_recurrent_points(q: StochasticKernel, m: ReferenceMeasure = None) -> SupportSet:
    """States that return to their own cell.

    With the discrete (or cell) topology the smallest neighbourhood of a
    state is its cell, and returning to it implies returning to every larger
    neighbourhood. ``m`` plays no role and is accepted for symmetry.
    """
    q = _kernel(q)
    # x returns to {x} iff it sits on a cycle of the support graph
    return SupportSet(q.n, scc_decomposition(q).cyclic_union())


def metrically_recurrent_points(q: StochasticKernel, m: ReferenceMeasure) -> SupportSet:
    """States that return to every positive-mass set containing them.

    Returning is monotone in the target set, so only minimal sets matter:
    ``{x}`` when ``x`` is an atom of ``m``, otherwise ``{x, y}`` for each
    atom ``y``.
    """
    q = _kernel(q)
    _check(q, m)
    atoms = m.atoms
    cyclic = scc_decomposition(q).cyclic_union()
    bits = 0
    for x in range(q.n):
        if cyclic >> x & 1:
            # returns to {x}, hence to every set containing x
            bits |= 1 << x
        elif not m.weights[x] > 0:
            # {x, y} is reached iff y is reached; need every atom
            ahead = reach_closure_bits(q.succ_masks, 1 << x)
            if atoms and atoms & ~ahead == 0:
                bits |= 1 << x
    return SupportSet(q.n, bits)


def recurrence_report(q: StochasticKernel, m: ReferenceMeasure, a: SupportSet) -> RecurrenceReport:
    rec = poincare_recurrent_set(q, a)
    non = a - rec
    return RecurrenceReport(a, rec, non, strong_recurrent_set(q, a), m.mass(non))


def poincare_recurrent_set_at(schedule: KernelSchedule, a: SupportSet, s: int) -> SupportSet:
    """Points of ``a`` that return to ``a`` when the chain is started at time ``s``.

    Forward images are followed until the pair (schedule phase, image set)
    repeats, which bounds the search exactly.
    """
    if isinstance(schedule, StochasticKernel):
        schedule = KernelSchedule.constant(schedule)
    n = schedule.n
    if a.n != n:
        raise DimensionMismatch(f"set over {a.n} states, schedule on {n}")
    bits = 0
    for x in a.indices():
        cur, t = 1 << x, s
        seen = set()
        while True:
            cur = image_bits(schedule.kernel_at(t), cur)
            t += 1
            if cur & a.bits:
                bits |= 1 << x
                break
            key = (schedule.phase(t), cur)
            if key in seen:
                break
            seen.add(key)
    return SupportSet(n, bits)


# -- families of sets --------------------------------------------------------

def _mass_table(m: ReferenceMeasure) -> np.ndarray:
    n = m.n
    table = np.zeros(1 << n)
    for j in range(n):
        size = 1 << j
        table[size:2 * size] = table[:size] + m.weights[j]
    return table


def _closure_table(q: StochasticKernel) -> np.ndarray:
    """For every subset: states with a path of length >= 1 into it."""
    pre = q.pre_table
    acc = pre.copy()
    while True:
        nxt = acc | pre[acc]
        if np.array_equal(nxt, acc):
            return acc
        acc = nxt


def structured_family(q: StochasticKernel) -> list:
    """Singletons, communicating classes, forward and backward closures."""
    n = q.n
    fam = set()
    for x in range(n):
        fam.add(1 << x)
        fam.add((1 << x) | reach_closure_bits(q.succ_masks, 1 << x))
        fam.add((1 << x) | reach_closure_bits(q.pred_masks, 1 << x))
    dec = scc_decomposition(q)
    for c in dec.classes:
        fam.add(c.states.bits)
    fam.add(dec.closed_union())
    fam.add((1 << n) - 1)
    fam.discard(0)
    return [SupportSet(n, b) for b in sorted(fam)]


def _resolve_family(q, family):
    """Return (list of bitmasks or None for exhaustive, restricted flag)."""
    if family == ALL_SUBSETS:
        if q.n > MAX_TABLE_STATES:
            raise FamilyTooLarge(f"ALL_SUBSETS needs n <= {MAX_TABLE_STATES}, got {q.n}")
        return None, False
    if family == STRUCTURED:
        return [s.bits for s in structured_family(q)], True
    sets = list(family)
    if not sets:
        raise ValueError("family of sets must be nonempty")
    for s in sets:
        _check(q, a=s)
    return [s.bits for s in sets], True


def _default_family(q):
    return ALL_SUBSETS if q.n <= MAX_TABLE_STATES else STRUCTURED


def _first(mask_array) -> int:
    hits = np.flatnonzero(mask_array)
    return int(hits[0]) if hits.size else None


# -- PRP and the series conditions for all sets ------------------------------

def prp_check(q: StochasticKernel, m: ReferenceMeasure, family=ALL_SUBSETS) -> PropertyVerdict:
    """Poincare recurrence property: ``m(A \\ recurrent(A)) = 0`` for every ``A``."""
    q = _kernel(q)
    _check(q, m)
    sets, restricted = _resolve_family(q, family)
    tol = m.zero_tol
    if sets is None:
        idx = np.arange(1 << q.n, dtype=np.int64)
        mass = _mass_table(m)
        non = idx & ~_closure_table(q)
        bad = _first((mass > tol) & (mass[non] >= tol))
        if bad is None:
            return PropertyVerdict(Property.PRP, True)
        a = SupportSet(q.n, bad)
    else:
        a = None
        for bits in sets:
            s = SupportSet(q.n, bits)
            if m.is_positive(bits) and m.mass(nonrecurrent_set(q, s)) >= tol:
                a = s
                break
        if a is None:
            return PropertyVerdict(Property.PRP, True, family_restricted=restricted)
    non = nonrecurrent_set(q, a)
    return PropertyVerdict(Property.PRP, False, a, restricted,
                           {"nonrecurrent": non, "m_nonrecurrent": m.mass(non)})


def _series_all(q, m, family, kind):
    prop = {"pre": Property.E_MAIN_ALL_A, "img": Property.E_MAIN_PLUS_ALL_A}[kind]
    first_index = 1 if kind == "pre" else 0
    sets, restricted = _resolve_family(q, family)
    tol = m.zero_tol
    step = fast_step(q, kind)
    if sets is None:
        mass = _mass_table(m)
        candidates = np.flatnonzero(mass > tol).tolist()
        mass = mass.tolist()
        weight = mass.__getitem__
    else:
        candidates = [b for b in sets if m.is_positive(b)]
        weight = m.mass
    for a in candidates:
        seq, p, l = trace_bits(step, a)
        lo = max(p, first_index)
        diverges = False
        for t in range(lo, lo + l):
            idx = t if t < p + l else p + (t - p) % l
            if weight(seq[idx] & a) > tol:
                diverges = True
                break
        if not diverges:
            return PropertyVerdict(prop, False, SupportSet(q.n, a), restricted)
    return PropertyVerdict(prop, True, family_restricted=restricted)


def e_main_check(q: StochasticKernel, m: ReferenceMeasure, family=ALL_SUBSETS) -> PropertyVerdict:
    """``sum_{n>=1} m(Q^{-n}(A) & A) = inf`` for every ``A`` with ``m(A) > 0``."""
    q = _kernel(q)
    _check(q, m)
    return _series_all(q, m, family, "pre")


def e_main_plus_check(q: StochasticKernel, m: ReferenceMeasure, family=ALL_SUBSETS) -> PropertyVerdict:
    """``sum_{n>=0} m(Q^{n}(A) & A) = inf`` for every ``A`` with ``m(A) > 0``."""
    q = _kernel(q)
    _check(q, m)
    return _series_all(q, m, family, "img")


def e_main_mes_check(q: StochasticKernel, m: ReferenceMeasure, family=ALL_SUBSETS) -> PropertyVerdict:
    """``sum_{n>=1} (Q^n m)(A) = inf`` for every ``A`` with ``m(A) > 0``."""
    q = _kernel(q)
    _check(q, m)
    sets, restricted = _resolve_family(q, family)
    core = recurrent_core(q, m)
    tol = m.zero_tol
    if sets is None:
        idx = np.arange(1 << q.n, dtype=np.int64)
        bad = _first((_mass_table(m) > tol) & ((idx & core) == 0))
    else:
        bad = next((b for b in sets if m.is_positive(b) and not b & core), None)
    if bad is None:
        return PropertyVerdict(Property.E_MAIN_MES_ALL_A, True, family_restricted=restricted)
    return PropertyVerdict(Property.E_MAIN_MES_ALL_A, False, SupportSet(q.n, bad), restricted)


# -- conservativity ----------------------------------------------------------

def _cons_check(q, m, mode, kind):
    prop = Property.E_CONS if kind == "img" else Property.E_CONS_MINUS
    masks = q.succ_masks if kind == "img" else q.pred_masks
    tol = m.zero_tol
    if mode is None:
        mode = "exhaustive" if q.n <= MAX_TABLE_STATES else "structured"
    if mode == "exhaustive":
        if q.n > MAX_TABLE_STATES:
            raise FamilyTooLarge(f"exhaustive mode needs n <= {MAX_TABLE_STATES}, got {q.n}")
        idx = np.arange(1 << q.n, dtype=np.int64)
        table = q.img_table if kind == "img" else q.pre_table
        mass = _mass_table(m)
        invariant = (table & ~idx) == 0
        bad = _first(invariant & (mass[idx & ~table] >= tol))
        restricted = False
    elif mode == "structured":
        restricted = True
        bad = None
        for s in structured_family(q):
            b = s.bits
            img = union_of_masks(masks, b)
            if img & ~b == 0 and m.mass(b & ~img) >= tol:
                bad = b
                break
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if bad is None:
        return PropertyVerdict(prop, True, family_restricted=restricted)
    lost = bad & ~union_of_masks(masks, bad)
    return PropertyVerdict(prop, False, SupportSet(q.n, bad), restricted,
                           {"lost": SupportSet(q.n, lost), "m_lost": m.mass(lost)})


def cons_forward_check(q: StochasticKernel, m: ReferenceMeasure, mode: str = None) -> PropertyVerdict:
    """Every ``A`` with ``Q^1(A) <= A`` has ``m(A \\ Q^1(A)) = 0``."""
    q = _kernel(q)
    _check(q, m)
    return _cons_check(q, m, mode, "img")


def cons_backward_check(q: StochasticKernel, m: ReferenceMeasure, mode: str = None) -> PropertyVerdict:
    """Every ``A`` with ``Q^{-1}(A) <= A`` has ``m(A \\ Q^{-1}(A)) = 0``."""
    q = _kernel(q)
    _check(q, m)
    return _cons_check(q, m, mode, "pre")


# -- theorem verifiers -------------------------------------------------------

def _exhaustive_kernel(q):
    q = _kernel(q)
    if q.n > MAX_TABLE_STATES:
        raise FamilyTooLarge(f"theorem checks enumerate all subsets; n={q.n} > {MAX_TABLE_STATES}")
    return q


def verify_theorem1(q: StochasticKernel, m: ReferenceMeasure) -> PropertyVerdict:
    """Check ``[for all A: series_main diverges] <=> PRP(m)`` over all subsets."""
    q = _exhaustive_kernel(q)
    left = e_main_check(q, m)
    right = prp_check(q, m)
    holds = left.holds == right.holds
    details = {
        "E_MAIN_ALL_A": left.holds, "PRP": right.holds,
        "E_MAIN_witness": left.witness, "PRP_witness": right.witness,
    }
    witness = None if holds else (left.witness or right.witness)
    return PropertyVerdict(Property.THEOREM1, holds, witness, details=details)


def verify_theorem2(q: StochasticKernel, m: ReferenceMeasure) -> PropertyVerdict:
    """If every set satisfies the divergence condition, m-a.e. point recurs."""
    q = _exhaustive_kernel(q)
    premise = e_main_check(q, m)
    full = SupportSet.full(q.n)
    non_top = full - topologically_recurrent_points(q, m)
    non_met = full - metrically_recurrent_points(q, m)
    m_top, m_met = m.mass(non_top), m.mass(non_met)
    conclusion = m_top < m.zero_tol and m_met < m.zero_tol
    holds = (not premise.holds) or conclusion
    details = {
        "premise": premise.holds, "conclusion": conclusion,
        "m_non_topological": m_top, "m_non_metric": m_met,
        "non_topological": non_top, "non_metric": non_met,
    }
    witness = None if holds else (non_top | non_met)
    return PropertyVerdict(Property.THEOREM2, holds, witness, details=details)


def verify_theorem4(q: StochasticKernel, m: ReferenceMeasure) -> list:
    """Conservativity relations.

    Returns verdicts for (a) ``E_MAIN <=> E_CONS``, (c) ``E_CONS_MINUS =>
    E_CONS``, followed by the computed truth values of ``E_MAIN_PLUS``,
    ``PRP`` and ``E_MAIN_MES`` from which the non-implications (b) and (b')
    are read off.
    """
    q = _exhaustive_kernel(q)
    main = e_main_check(q, m)
    cons = cons_forward_check(q, m, "exhaustive")
    cons_minus = cons_backward_check(q, m, "exhaustive")
    a_holds = main.holds == cons.holds
    part_a = PropertyVerdict(
        Property.THEOREM4A, a_holds, None if a_holds else (main.witness or cons.witness),
        details={"E_MAIN_ALL_A": main.holds, "E_CONS": cons.holds},
    )
    c_holds = (not cons_minus.holds) or cons.holds
    part_c = PropertyVerdict(
        Property.THEOREM4C, c_holds, None if c_holds else cons.witness,
        details={"E_CONS_MINUS": cons_minus.holds, "E_CONS": cons.holds},
    )
    plus = e_main_plus_check(q, m)
    prp = prp_check(q, m)
    mes = e_main_mes_check(q, m)
    plus = PropertyVerdict(plus.property_name, plus.holds, plus.witness,
                           details={"b_witnessed": plus.holds and not prp.holds})
    mes = PropertyVerdict(mes.property_name, mes.holds, mes.witness,
                          details={"b_prime_witnessed": prp.holds and not mes.holds})
    return [part_a, part_c, plus, prp, mes]
