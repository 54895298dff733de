"""Piecewise monotone interval maps: grid discretization and exact orbits.

A :class:`PiecewiseMap` on ``[0, 1]`` is a list of pieces (domain interval,
formula) plus a few point overrides. Formulas are built from ``identity``,
``const c``, ``square`` (``x -> x**2``), ``reflect f`` (``x -> 1 - f(1 - x)``)
and composition; all of them are continuous and monotone on ``[0, 1]``.

:func:`discretize_map` produces two support approximations on a uniform grid:
``outer`` contains every cell transition that can happen, ``inner`` only
those that carry positive Lebesgue mass. Spurious recurrence can only come
from the outer kernel, so "no return under ``outer``" is a sound certificate
of non-recurrence, and it is the only one :func:`classify_with_refinement`
issues.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from .chain import StateSpace, StochasticKernel
from .errors import InvalidPartition
from .sets import SupportSet, scc_decomposition

CERTAIN_NONRECURRENT = "CERTAIN_NONRECURRENT"
UNKNOWN = "UNKNOWN"

EXACT_LIMIT = 2 ** 512
MP_PRECISION = 256
TINY_MAG = -(2 ** 20)


# -- intervals ---------------------------------------------------------------

@dataclass(frozen=True)
class Interval:
    lo: Fraction
    hi: Fraction
    lo_closed: bool = True
    hi_closed: bool = False

    def is_empty(self) -> bool:
        return self.lo > self.hi or (self.lo == self.hi and not (self.lo_closed and self.hi_closed))

    @property
    def length(self) -> Fraction:
        return max(self.hi - self.lo, Fraction(0))

    def contains(self, x) -> bool:
        above = x > self.lo or (x == self.lo and self.lo_closed)
        below = x < self.hi or (x == self.hi and self.hi_closed)
        return above and below

    def intersect(self, other: "Interval") -> "Interval":
        if self.lo > other.lo:
            lo, lc = self.lo, self.lo_closed
        elif self.lo < other.lo:
            lo, lc = other.lo, other.lo_closed
        else:
            lo, lc = self.lo, self.lo_closed and other.lo_closed
        if self.hi < other.hi:
            hi, hc = self.hi, self.hi_closed
        elif self.hi > other.hi:
            hi, hc = other.hi, other.hi_closed
        else:
            hi, hc = self.hi, self.hi_closed and other.hi_closed
        return Interval(lo, hi, lc, hc)

    def remove_point(self, p) -> list:
        """Split around ``p``; returns the nonempty remaining pieces."""
        if not self.contains(p):
            return [self]
        parts = [Interval(self.lo, p, self.lo_closed, False),
                 Interval(p, self.hi, False, self.hi_closed)]
        return [x for x in parts if not x.is_empty()]

    def __str__(self):
        return f"{'[' if self.lo_closed else '('}{self.lo}, {self.hi}{']' if self.hi_closed else ')'}"


_INTERVAL_RE = re.compile(r"^\s*([\[(])\s*([^,]+?)\s*,\s*([^,]+?)\s*([\])])\s*$")


def parse_interval(text: str) -> Interval:
    """Parse ``"[0, 1/2)"`` style notation with exact rational endpoints."""
    match = _INTERVAL_RE.match(text)
    if not match:
        raise ValueError(f"cannot parse interval {text!r}")
    left, lo, hi, right = match.groups()
    return Interval(Fraction(lo), Fraction(hi), left == "[", right == "]")


# -- two-sided orbit points --------------------------------------------------

class _Tiny:
    """Positive number below every representable magnitude; squares to itself."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "TINY"


TINY = _Tiny()


def _shrink(s):
    if isinstance(s, Fraction):
        if max(abs(s.numerator), s.denominator) < EXACT_LIMIT:
            return s
        with mpmath.workprec(MP_PRECISION):
            s = mpmath.mpf(s.numerator) / s.denominator
    if isinstance(s, mpmath.mpf) and s != 0 and mpmath.mag(s) < TINY_MAG:
        return TINY
    return s


def _mp(x):
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


@dataclass(frozen=True)
class Point:
    """A point of ``[0, 1]`` stored as its distance to the nearer endpoint.

    ``x = s`` when ``high`` is False and ``x = 1 - s`` otherwise. Keeping the
    small distance instead of ``x`` lets orbits converging to 1 keep full
    relative precision, so they never round onto the endpoint itself.
    """

    high: bool
    s: object

    @classmethod
    def exact(cls, x) -> "Point":
        x = Fraction(x)
        if not 0 <= x <= 1:
            raise ValueError(f"point {x} outside [0, 1]")
        return cls(False, x)._normalized()

    def _normalized(self) -> "Point":
        s = self.s
        if s is TINY:
            return self
        exact = isinstance(s, Fraction)
        if s > (Fraction(1, 2) if exact else 0.5):
            one = Fraction(1) if exact else mpmath.mpf(1)
            return Point(not self.high, _shrink(one - s))
        return Point(self.high, _shrink(s))

    def reflect(self) -> "Point":
        return Point(not self.high, self.s)

    def square(self) -> "Point":
        s = self.s
        if s is TINY:
            return self
        with mpmath.workprec(MP_PRECISION):
            if not self.high:
                return Point(False, s * s)._normalized()
            return Point(True, 2 * s - s * s)._normalized()

    def compare(self, r) -> int:
        """Sign of ``x - r`` for a rational ``r``."""
        r = Fraction(r)
        s = self.s
        target = r if not self.high else 1 - r
        if s is TINY:
            c = 1 if target <= 0 else -1
        else:
            with mpmath.workprec(MP_PRECISION):
                d = s - (target if isinstance(s, Fraction) else _mp(target))
            c = (d > 0) - (d < 0)
        return -c if self.high else c

    def value(self) -> float:
        s = 0.0 if self.s is TINY else float(self.s)
        return 1.0 - s if self.high else s

    def is_exact(self) -> bool:
        return isinstance(self.s, Fraction)

    def __repr__(self):
        return f"Point({'1 - ' if self.high else ''}{self.s})"


# -- formulas ----------------------------------------------------------------

class Formula:
    direction = 1  # +1 increasing, -1 decreasing, 0 constant

    def __call__(self, x: Fraction) -> Fraction:
        raise NotImplementedError

    def on_point(self, p: Point) -> Point:
        raise NotImplementedError

    def inverse(self, y: float) -> float:
        raise NotImplementedError

    def image(self, part: Interval) -> Interval:
        if self.direction == 0:
            c = self(part.lo)
            return Interval(c, c, True, True)
        a, b = self(part.lo), self(part.hi)
        if self.direction > 0:
            return Interval(a, b, part.lo_closed, part.hi_closed)
        return Interval(b, a, part.hi_closed, part.lo_closed)


class Identity(Formula):
    def __call__(self, x):
        return Fraction(x)

    def on_point(self, p):
        return p

    def inverse(self, y):
        return y

    def __repr__(self):
        return "identity"


class Const(Formula):
    direction = 0

    def __init__(self, c):
        self.c = Fraction(c)
        if not 0 <= self.c <= 1:
            raise ValueError("constant must lie in [0, 1]")

    def __call__(self, x):
        return self.c

    def on_point(self, p):
        return Point.exact(self.c)

    def inverse(self, y):
        raise ValueError("constant formula has no inverse")

    def __repr__(self):
        return f"const({self.c})"


class Square(Formula):
    def __call__(self, x):
        x = Fraction(x)
        return x * x

    def on_point(self, p):
        return p.square()

    def inverse(self, y):
        return math.sqrt(max(y, 0.0))

    def __repr__(self):
        return "square"


class Reflect(Formula):
    """``x -> 1 - f(1 - x)``."""

    def __init__(self, inner: Formula):
        self.inner = inner
        self.direction = inner.direction

    def __call__(self, x):
        return 1 - self.inner(1 - Fraction(x))

    def on_point(self, p):
        return self.inner.on_point(p.reflect()).reflect()

    def inverse(self, y):
        return 1.0 - self.inner.inverse(1.0 - y)

    def __repr__(self):
        return f"reflect({self.inner!r})"


class Compose(Formula):
    """``x -> outer(inner(x))``."""

    def __init__(self, outer: Formula, inner: Formula):
        self.outer, self.inner = outer, inner
        self.direction = outer.direction * inner.direction

    def __call__(self, x):
        return self.outer(self.inner(x))

    def on_point(self, p):
        return self.outer.on_point(self.inner.on_point(p))

    def inverse(self, y):
        return self.inner.inverse(self.outer.inverse(y))

    def __repr__(self):
        return f"compose({self.outer!r}, {self.inner!r})"


# -- piecewise maps ----------------------------------------------------------

@dataclass(frozen=True)
class Piece:
    domain: Interval
    formula: Formula


class PiecewiseMap:
    """Self-map of ``[0, 1]`` assembled from monotone pieces.

    Overrides win at their exact points; otherwise the first piece whose
    domain contains the point is used.
    """

    def __init__(self, pieces: Sequence[Piece], overrides=(), name: str = None):
        self.pieces = tuple(pieces)
        self.overrides = tuple((Fraction(p), Fraction(c)) for p, c in overrides)
        self.name = name
        self._validate()

    def _validate(self):
        if not self.pieces:
            raise InvalidPartition("a map needs at least one piece")
        points = {p for p, _ in self.overrides}
        for p, c in self.overrides:
            if not (0 <= p <= 1 and 0 <= c <= 1):
                raise InvalidPartition(f"override {p} -> {c} leaves [0, 1]")
        pieces = sorted(self.pieces, key=lambda pc: (pc.domain.lo, pc.domain.hi))
        for pc in pieces:
            d = pc.domain
            if d.is_empty() or d.lo < 0 or d.hi > 1:
                raise InvalidPartition(f"bad piece domain {d}")
            for x in (d.lo, d.hi):
                y = pc.formula(x)
                if not 0 <= y <= 1:
                    raise InvalidPartition(f"piece on {d} maps {x} to {y}, outside [0, 1]")
        first, last = pieces[0].domain, pieces[-1].domain
        if first.lo != 0 or not (first.lo_closed or 0 in points):
            raise InvalidPartition("pieces must cover 0")
        if last.hi != 1 or not (last.hi_closed or 1 in points):
            raise InvalidPartition("pieces must cover 1")
        for a, b in zip(pieces, pieces[1:]):
            da, db = a.domain, b.domain
            if da.hi < db.lo:
                raise InvalidPartition(f"gap between {da} and {db}")
            if da.hi > db.lo:
                raise InvalidPartition(f"overlapping pieces {da} and {db}")
            if not (da.hi_closed or db.lo_closed or da.hi in points):
                raise InvalidPartition(f"point {da.hi} is not covered")

    def piece_at(self, x) -> Piece:
        for pc in self.pieces:
            if pc.domain.contains(x):
                return pc
        raise ValueError(f"no piece contains {x}")

    def __call__(self, x) -> Fraction:
        x = Fraction(x)
        for p, c in self.overrides:
            if x == p:
                return c
        return self.piece_at(x).formula(x)

    def on_point(self, pt: Point) -> Point:
        if pt.is_exact():
            x = pt.s if not pt.high else 1 - pt.s
            for p, c in self.overrides:
                if x == p:
                    return Point.exact(c)
        for pc in self.pieces:
            d = pc.domain
            lo, hi = pt.compare(d.lo), pt.compare(d.hi)
            if (lo > 0 or (lo == 0 and d.lo_closed)) and (hi < 0 or (hi == 0 and d.hi_closed)):
                return pc.formula.on_point(pt)
        raise ValueError(f"no piece contains {pt}")

    def __repr__(self):
        return f"PiecewiseMap({self.name or len(self.pieces)})"


def identity_map() -> PiecewiseMap:
    return PiecewiseMap([Piece(Interval(Fraction(0), Fraction(1), True, True), Identity())],
                        name="identity")


def ex5_map() -> PiecewiseMap:
    """``x -> x**2`` for ``x > 0`` and ``0 -> 1``."""
    return PiecewiseMap([Piece(Interval(Fraction(0), Fraction(1), False, True), Square())],
                        overrides=[(0, 1)], name="ex5")


def ex6_map() -> PiecewiseMap:
    """Two square-law attractors at 0 and 1, each endpoint thrown to the other basin.

    ``0 -> 4/5``, ``x -> x**2`` on ``(0, 1/2)``, ``x -> 1 - (1 - x)**2`` on
    ``[1/2, 1)`` and ``1 -> 1/5``.
    """
    sq = Square()
    return PiecewiseMap(
        [Piece(Interval(Fraction(0), Fraction(1, 2), False, False), sq),
         Piece(Interval(Fraction(1, 2), Fraction(1), True, False), Reflect(sq))],
        overrides=[(0, Fraction(4, 5)), (1, Fraction(1, 5))],
        name="ex6",
    )


# -- discretization ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GridKernelPair:
    outer: StochasticKernel
    inner_support: np.ndarray

    @property
    def space(self) -> StateSpace:
        return self.outer.space


def _cells(n):
    return [Interval(Fraction(i, n), Fraction(i + 1, n), True, i == n - 1) for i in range(n)]


def _cell_index(y: Fraction, n: int) -> int:
    return min(int(math.floor(y * n)), n - 1)


def _preimage_length(formula: Formula, part: Interval, target: Interval) -> float:
    ya, yb = float(formula(part.lo)), float(formula(part.hi))
    lo_y, hi_y = min(ya, yb), max(ya, yb)
    lo = max(lo_y, float(target.lo))
    hi = min(hi_y, float(target.hi))
    if hi <= lo:
        return 0.0
    return abs(formula.inverse(hi) - formula.inverse(lo))


def discretize_map(t: PiecewiseMap, n_cells: int) -> GridKernelPair:
    """Grid kernels for ``t`` on ``n_cells`` equal cells.

    ``outer.support[i, j]`` is True iff ``T(cell_i)`` meets ``cell_j``,
    decided in exact arithmetic, including single points hit by overrides or
    by interval endpoints. ``inner_support[i, j]`` is True iff a positive-length
    part of ``cell_i`` lands in ``cell_j``. Probabilities move the uniform mass
    of each cell forward (Ulam's estimate); overrides move no mass.
    """
    if n_cells < 2:
        raise InvalidPartition("need at least two cells")
    n = n_cells
    cells = _cells(n)
    outer = np.zeros((n, n), dtype=bool)
    inner = np.zeros((n, n), dtype=bool)
    probs = np.zeros((n, n))
    width = 1.0 / n
    override_points = [p for p, _ in t.overrides]
    for i, cell in enumerate(cells):
        for p, c in t.overrides:
            if cell.contains(p):
                outer[i, _cell_index(c, n)] = True
        for pc in t.pieces:
            part = cell.intersect(pc.domain)
            if part.is_empty():
                continue
            parts = [part]
            for p in override_points:
                parts = [q for x in parts for q in x.remove_point(p)]
            for part in parts:
                img = pc.formula.image(part)
                j_lo, j_hi = _cell_index(img.lo, n), _cell_index(img.hi, n)
                for j in range(max(j_lo - 1, 0), min(j_hi + 1, n - 1) + 1):
                    meet = img.intersect(cells[j])
                    if meet.is_empty():
                        continue
                    outer[i, j] = True
                    if part.length == 0:
                        continue
                    if pc.formula.direction == 0:
                        inner[i, j] = True
                        probs[i, j] += float(part.length) / width
                    elif meet.length > 0:
                        inner[i, j] = True
                        probs[i, j] += _preimage_length(pc.formula, part, cells[j]) / width
    probs = np.where(inner, probs, 0.0)
    probs /= probs.sum(axis=1, keepdims=True)
    space = StateSpace.uniform_grid(n)
    return GridKernelPair(StochasticKernel(probs, outer, space), inner)


@dataclass(frozen=True)
class RefinementLevel:
    n_cells: int
    verdicts: tuple
    unknown: SupportSet
    unknown_length: Fraction

    def to_record(self) -> dict:
        return {
            "n_cells": self.n_cells,
            "unknown_cells": list(self.unknown.indices()),
            "unknown_length": float(self.unknown_length),
            "n_unknown": len(self.unknown),
        }


def cell_verdicts(pair: GridKernelPair) -> RefinementLevel:
    q = pair.outer
    dec = scc_decomposition(q)
    bits = 0
    for c in dec.classes:
        if c.cyclic:
            bits |= c.states.bits
    unknown = SupportSet(q.n, bits)
    verdicts = tuple(UNKNOWN if i in unknown else CERTAIN_NONRECURRENT for i in range(q.n))
    return RefinementLevel(q.n, verdicts, unknown, Fraction(len(unknown), q.n))


def classify_with_refinement(t: PiecewiseMap, n_schedule: Sequence[int]) -> list:
    """Per-cell verdicts at each resolution of an increasing schedule.

    A cell is ``CERTAIN_NONRECURRENT`` when the outer kernel has no path of
    positive length from it back to itself, and ``UNKNOWN`` otherwise.
    """
    n_schedule = list(n_schedule)
    if any(b <= a for a, b in zip(n_schedule, n_schedule[1:])):
        raise ValueError("resolution schedule must be strictly increasing")
    return [cell_verdicts(discretize_map(t, n)) for n in n_schedule]


# -- orbits ------------------------------------------------------------------

@dataclass(frozen=True)
class OrbitResult:
    returned_at: int
    min_distance: float
    steps: int
    exact_steps: int
    cycle_at: int = None


def orbit_return_test(t: PiecewiseMap, x0, eps: float, t_max: int) -> OrbitResult:
    """First ``t`` in ``[1, t_max]`` with ``|T^t x0 - x0| < eps``.

    Iterates in exact rationals while numerators and denominators stay below
    ``2**512``, then in 256-bit floats; magnitudes below ``2**(-2**20)`` are
    replaced by a positive infinitesimal. When the stored orbit state repeats
    (Brent cycle detection) every later state has already been seen, so the
    loop stops early and ``cycle_at`` records when.
    """
    if eps <= 0 or t_max < 1:
        raise ValueError("need eps > 0 and t_max >= 1")
    start = Point.exact(Fraction(x0))
    x0f = start.value()
    cur = start
    best = math.inf
    exact_steps = 0
    power = lam = 1
    checkpoint = start
    for step in range(1, t_max + 1):
        cur = t.on_point(cur)
        if cur.is_exact():
            exact_steps = step
        d = abs(cur.value() - x0f)
        best = min(best, d)
        if d < eps:
            return OrbitResult(step, best, step, exact_steps)
        if cur == checkpoint:
            return OrbitResult(None, best, step, exact_steps, cycle_at=step)
        if power == lam:
            checkpoint = cur
            power *= 2
            lam = 0
        lam += 1
    return OrbitResult(None, best, t_max, exact_steps)
