"""Finite state spaces, stochastic kernels and their algebra.

A kernel is stored twice: as a row-stochastic float matrix ``probs`` and as a
boolean ``support`` mask. Everything recurrence-related in this package is a
statement about supports, so the mask is the primary object and the float
matrix is carried along for measure computations.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidGamma,
    InvalidGenerator,
    NegativeEntry,
    NonStochasticRow,
    SupportUnderflowWarning,
)

SUPPORT_EPSILON = 1e-12


def _readonly(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def bits_from_bool(mask) -> int:
    bits = 0
    for i in np.flatnonzero(mask):
        bits |= 1 << int(i)
    return bits


MAX_TABLE_STATES = 20


def set_map_table(masks) -> np.ndarray:
    """Tabulate ``S -> OR_{i in S} masks[i]`` over all ``2**n`` bitmasks."""
    n = len(masks)
    if n > MAX_TABLE_STATES:
        raise ValueError(f"refusing to tabulate 2**{n} sets")
    table = np.zeros(1 << n, dtype=np.int64)
    for j, m in enumerate(masks):
        size = 1 << j
        table[size:2 * size] = table[:size] | m
    return table


@dataclass(frozen=True)
class StateSpace:
    """Labelled finite state space, optionally a grid partition of [0, 1].

    ``cell_bounds`` holds ``(lo, hi)`` pairs; every cell is half-open
    ``[lo, hi)`` except the last one, which is closed.
    """

    n: int
    labels: tuple = None
    cell_bounds: tuple = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("a state space needs at least one state")
        labels = self.labels
        if labels is None:
            labels = tuple(str(i) for i in range(self.n))
        labels = tuple(str(x) for x in labels)
        if len(labels) != self.n:
            raise ValueError(f"expected {self.n} labels, got {len(labels)}")
        if len(set(labels)) != self.n:
            raise ValueError("state labels must be distinct")
        object.__setattr__(self, "labels", labels)
        if self.cell_bounds is not None:
            cells = tuple((Fraction(lo), Fraction(hi)) for lo, hi in self.cell_bounds)
            if len(cells) != self.n:
                raise ValueError("one cell per state is required")
            if cells[0][0] != 0 or cells[-1][1] != 1:
                raise ValueError("cells must partition [0, 1]")
            for (lo, hi), nxt in zip(cells, cells[1:] + (None,)):
                if not lo < hi:
                    raise ValueError(f"empty cell [{lo}, {hi})")
                if nxt is not None and nxt[0] != hi:
                    raise ValueError("cells must be contiguous and ordered")
            object.__setattr__(self, "cell_bounds", cells)

    @classmethod
    def uniform_grid(cls, n_cells: int) -> "StateSpace":
        bounds = [(Fraction(i, n_cells), Fraction(i + 1, n_cells)) for i in range(n_cells)]
        return cls(n_cells, tuple(f"c{i}" for i in range(n_cells)), tuple(bounds))

    def index(self, label) -> int:
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise KeyError(f"unknown state label {label!r}") from None

    def cell_lengths(self) -> np.ndarray:
        if self.cell_bounds is None:
            raise ValueError("state space has no cell structure")
        return np.array([float(hi - lo) for lo, hi in self.cell_bounds])


@dataclass(frozen=True, eq=False)
class ReferenceMeasure:
    """Finite nonnegative weights over the states; not assumed invariant."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a nonempty vector")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if not w.sum() > 0:
            raise ValueError("total mass must be positive")
        object.__setattr__(self, "weights", _readonly(w))

    @classmethod
    def uniform(cls, n: int) -> "ReferenceMeasure":
        return cls(np.full(n, 1.0 / n))

    @property
    def n(self) -> int:
        return self.weights.size

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    @property
    def zero_tol(self) -> float:
        """Masses below this are treated as zero (relative to m(X))."""
        return 1e-12 * self.total

    @cached_property
    def atoms(self) -> int:
        """Bitmask of the states carrying positive mass."""
        return bits_from_bool(self.weights > 0)

    def mass(self, s) -> float:
        """Mass of a set given as a bitmask, a SupportSet, or a boolean array."""
        bits = getattr(s, "bits", s)
        if isinstance(bits, (int, np.integer)):
            bits = int(bits)
            total = 0.0
            i = 0
            while bits:
                if bits & 1:
                    total += self.weights[i]
                bits >>= 1
                i += 1
            return float(total)
        return float(self.weights[np.asarray(bits, dtype=bool)].sum())

    def is_positive(self, s) -> bool:
        return self.mass(s) > self.zero_tol


@dataclass(frozen=True, eq=False)
class FunctionOnStates:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise ValueError("values must be a vector")
        if not np.all(np.isfinite(v)):
            raise ValueError("function values must be finite")
        object.__setattr__(self, "values", _readonly(v))


@dataclass(frozen=True, eq=False)
class StochasticKernel:
    """One-step transition kernel on a finite space.

    ``support[i, j]`` is True when the transition ``i -> j`` has positive
    probability. For kernels built by :func:`validate_kernel` it equals
    ``probs > SUPPORT_EPSILON``; constructors that know the support
    structurally (generators, grid discretizations) may set a larger mask,
    but a positive entry is never outside the support.
    """

    probs: np.ndarray
    support: np.ndarray
    space: StateSpace = None

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        s = np.asarray(self.support, dtype=bool)
        if p.ndim != 2 or p.shape[0] != p.shape[1] or s.shape != p.shape:
            raise DimensionMismatch(f"bad kernel shapes {p.shape} / {s.shape}")
        if np.any(p[~s] > SUPPORT_EPSILON):
            raise ValueError("positive transition outside of the support mask")
        space = self.space if self.space is not None else StateSpace(p.shape[0])
        if space.n != p.shape[0]:
            raise DimensionMismatch(f"state space has {space.n} states, matrix {p.shape[0]}")
        object.__setattr__(self, "probs", _readonly(p))
        object.__setattr__(self, "support", _readonly(s))
        object.__setattr__(self, "space", space)

    @property
    def n(self) -> int:
        return self.probs.shape[0]

    @cached_property
    def pred_masks(self) -> tuple:
        """``pred_masks[j]``: bitmask of states that step into ``j``."""
        return tuple(bits_from_bool(self.support[:, j]) for j in range(self.n))

    @cached_property
    def succ_masks(self) -> tuple:
        """``succ_masks[i]``: bitmask of states reachable from ``i`` in one step."""
        return tuple(bits_from_bool(self.support[i, :]) for i in range(self.n))

    @cached_property
    def pre_table(self) -> np.ndarray:
        """Preimage of every subset, indexed by bitmask (n <= 20)."""
        return set_map_table(self.pred_masks)

    @cached_property
    def img_table(self) -> np.ndarray:
        """Image of every subset, indexed by bitmask (n <= 20)."""
        return set_map_table(self.succ_masks)

    @cached_property
    def is_deterministic(self) -> bool:
        return bool(np.all(self.support.sum(axis=1) == 1))

    def __repr__(self):
        return f"StochasticKernel(n={self.n})"


def validate_kernel(probs, space: StateSpace = None,
                    support_epsilon: float = SUPPORT_EPSILON) -> StochasticKernel:
    """Check a transition matrix and wrap it as a kernel.

    Accepts floats, ints or :class:`fractions.Fraction` entries. Raises
    :class:`NegativeEntry` for entries below zero and :class:`NonStochasticRow`
    when a row sum is off by more than ``1e-12 * n``.
    """
    p = np.array(probs, dtype=float)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise DimensionMismatch(f"transition matrix must be square, got shape {p.shape}")
    n = p.shape[0]
    if space is not None and space.n != n:
        raise DimensionMismatch(f"state space has {space.n} states, matrix {n}")
    neg = np.argwhere(p < 0)
    if neg.size:
        i, j = (int(x) for x in neg[0])
        raise NegativeEntry(i, j, p[i, j])
    tol = 1e-12 * n
    sums = p.sum(axis=1)
    for i, total in enumerate(sums):
        if abs(total - 1.0) > tol:
            raise NonStochasticRow(i, float(total))
    return StochasticKernel(p, p > support_epsilon, space)


def identity_kernel(n: int, space: StateSpace = None) -> StochasticKernel:
    return StochasticKernel(np.eye(n), np.eye(n, dtype=bool), space)


def kernel_from_map(mapping: Sequence[int], space: StateSpace = None) -> StochasticKernel:
    """Deterministic kernel of a self-map given as ``mapping[i] = T(i)``."""
    n = len(mapping)
    p = np.zeros((n, n))
    for i, j in enumerate(mapping):
        j = int(j)
        if not 0 <= j < n:
            raise IndexError(f"image {j} of state {i} is outside 0..{n - 1}")
        p[i, j] = 1.0
    return StochasticKernel(p, p > 0, space)


def _check_same(a, b):
    if a.n != b.n:
        raise DimensionMismatch(f"kernels act on {a.n} and {b.n} states")


def _bool_matmul(a, b):
    return (a.astype(np.int64) @ b.astype(np.int64)) > 0


def compose(a: StochasticKernel, b: StochasticKernel,
            support_epsilon: float = SUPPORT_EPSILON) -> StochasticKernel:
    """Kernel of "one step of ``a`` then one step of ``b``" (matrix product).

    The support is the boolean product of the two supports intersected with
    the numeric cutoff; a :class:`SupportUnderflowWarning` is emitted when a
    structurally positive entry underflows.
    """
    _check_same(a, b)
    p = a.probs @ b.probs
    structural = _bool_matmul(a.support, b.support)
    numeric = p > support_epsilon
    if np.any(structural & ~numeric):
        warnings.warn(
            "composition lost structurally positive transitions to underflow",
            SupportUnderflowWarning,
            stacklevel=2,
        )
    support = structural & numeric
    p = np.where(support, p, 0.0)
    return StochasticKernel(p, support, a.space)


def power(q: StochasticKernel, t: int) -> StochasticKernel:
    if t < 0:
        raise ValueError("power needs t >= 0")
    result = identity_kernel(q.n, q.space)
    base = q
    while t:
        if t & 1:
            result = compose(result, base)
        t >>= 1
        if t:
            base = compose(base, base)
    return result


def pushforward(q: StochasticKernel, mu: ReferenceMeasure) -> ReferenceMeasure:
    """Action on measures: ``(Q mu)(j) = sum_i mu(i) Q(i, j)``."""
    if mu.n != q.n:
        raise DimensionMismatch(f"measure on {mu.n} states, kernel on {q.n}")
    return ReferenceMeasure(mu.weights @ q.probs)


def pullback(q: StochasticKernel, phi: FunctionOnStates) -> FunctionOnStates:
    """Action on functions: ``(Q phi)(i) = sum_j Q(i, j) phi(j)``."""
    if phi.values.size != q.n:
        raise DimensionMismatch(f"function on {phi.values.size} states, kernel on {q.n}")
    return FunctionOnStates(q.probs @ phi.values)


@dataclass(frozen=True, eq=False)
class GeneratorMatrix:
    """Rate matrix of a continuous-time chain (rows sum to zero)."""

    rates: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.rates, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise InvalidGenerator(f"generator must be square, got shape {g.shape}")
        n = g.shape[0]
        off = g[~np.eye(n, dtype=bool)]
        if not np.all(np.isfinite(g)):
            raise InvalidGenerator("rates must be finite")
        if np.any(off < 0):
            raise InvalidGenerator("off-diagonal rates must be nonnegative")
        sums = g.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums) > 1e-12 * n)
        if bad.size:
            raise InvalidGenerator(f"row {int(bad[0])} sums to {sums[bad[0]]!r}, expected 0")
        object.__setattr__(self, "rates", _readonly(g))

    @classmethod
    def from_rates(cls, offdiag) -> "GeneratorMatrix":
        """Build from off-diagonal jump rates; the diagonal is filled in."""
        g = np.array(offdiag, dtype=float)
        np.fill_diagonal(g, 0.0)
        np.fill_diagonal(g, -g.sum(axis=1))
        return cls(g)

    @property
    def n(self) -> int:
        return self.rates.shape[0]


def reachability(adjacency) -> np.ndarray:
    """Reflexive-transitive closure of a boolean adjacency matrix."""
    r = np.asarray(adjacency, dtype=bool) | np.eye(len(adjacency), dtype=bool)
    while True:
        nxt = _bool_matmul(r, r)
        if np.array_equal(nxt, r):
            return r
        r = nxt


def kernel_from_generator(g: GeneratorMatrix, gamma: float, tol: float = 1e-13,
                          space: StateSpace = None) -> StochasticKernel:
    """Sample a continuous-time chain at step ``gamma``: the kernel ``exp(gamma G)``.

    Computed by uniformization with the Poisson tail cut below ``tol``. When
    ``lambda * gamma`` is large the step is halved until it is moderate and
    the result squared back up. The support is set to reachability in the
    rate graph, which is the exact support of ``exp(tG)`` for every ``t > 0``.
    """
    if not (isinstance(gamma, (int, float, np.floating)) and math.isfinite(gamma) and gamma > 0):
        raise InvalidGamma(f"gamma must be a positive finite number, got {gamma!r}")
    if not 0 < tol <= 1e-6:
        raise ValueError("tol must lie in (0, 1e-6]")
    if not isinstance(g, GeneratorMatrix):
        g = GeneratorMatrix(g)
    n = g.n
    rates = g.rates
    lam = float(np.max(-np.diag(rates)))
    support = reachability(rates > 0)
    if lam == 0.0:
        return StochasticKernel(np.eye(n), support, space)

    halvings = 0
    h = float(gamma)
    while lam * h > 16.0:
        h /= 2.0
        halvings += 1
    # floor keeps the loop above double rounding of 1 - cum
    piece_tol = max(tol / 2**halvings, 1e-15)

    jump = np.eye(n) + rates / lam
    rate = lam * h
    weight = math.exp(-rate)
    term = np.eye(n)
    acc = weight * term
    cum = weight
    k = 0
    while 1.0 - cum > piece_tol and k < 10_000:
        k += 1
        term = term @ jump
        weight *= rate / k
        acc += weight * term
        cum += weight
    for _ in range(halvings):
        acc = acc @ acc
    acc = np.clip(acc, 0.0, None)
    acc = np.where(support, acc, 0.0)
    acc /= acc.sum(axis=1, keepdims=True)
    return StochasticKernel(acc, support, space)


@dataclass(frozen=True, eq=False)
class KernelSchedule:
    """Time-indexed kernels for an inhomogeneous chain.

    ``kernels[s]`` is used at time ``s`` for the first ``len - tail_period``
    times; afterwards the last ``tail_period`` kernels repeat forever.
    """

    kernels: tuple
    tail_period: int = 1

    def __post_init__(self):
        ks = tuple(self.kernels)
        if not ks:
            raise ValueError("a schedule needs at least one kernel")
        if not 1 <= self.tail_period <= len(ks):
            raise ValueError("tail_period must be between 1 and the number of kernels")
        n = ks[0].n
        for k in ks:
            if k.n != n:
                raise DimensionMismatch("all kernels in a schedule must share a state space")
        object.__setattr__(self, "kernels", ks)

    @classmethod
    def constant(cls, q: StochasticKernel) -> "KernelSchedule":
        return cls((q,), 1)

    @property
    def n(self) -> int:
        return self.kernels[0].n

    @property
    def prefix(self) -> int:
        return len(self.kernels) - self.tail_period

    @cached_property
    def homogeneous(self) -> bool:
        first = self.kernels[0]
        return all(
            np.array_equal(k.probs, first.probs) and np.array_equal(k.support, first.support)
            for k in self.kernels[1:]
        )

    def phase(self, s: int) -> int:
        """Index into ``kernels`` of the kernel acting at time ``s``."""
        if s < 0:
            raise ValueError("schedule times start at 0")
        if s < self.prefix:
            return s
        return self.prefix + (s - self.prefix) % self.tail_period

    def kernel_at(self, s: int) -> StochasticKernel:
        return self.kernels[self.phase(s)]


def schedule_step(s: KernelSchedule, from_time: int, steps: int) -> StochasticKernel:
    """Kernel ``Q_{from_time}^{steps}``: kernels at ``from_time, from_time+1, ...`` in order."""
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    if s.homogeneous:
        return power(s.kernels[0], steps)
    result = identity_kernel(s.n, s.kernels[0].space)
    for t in range(from_time, from_time + steps):
        result = compose(result, s.kernel_at(t))
    return result
