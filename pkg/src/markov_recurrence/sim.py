"""Monte Carlo paths and return-probability estimates.

Random streams come from NumPy's PCG64 generator seeded through
``SeedSequence([seed, shard])``, which is reproducible across platforms.
Trials are split into shards with independent substreams; counts are merged
by summation, so the result does not depend on shard evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import norm

from .chain import KernelSchedule, StochasticKernel, schedule_step
from .sets import SupportSet

Z95 = float(norm.ppf(0.975))


def _rng(seed: int, shard: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed) & (2**64 - 1), shard])))


def _as_schedule(chain) -> KernelSchedule:
    if isinstance(chain, StochasticKernel):
        return KernelSchedule.constant(chain)
    return chain


def _step(kernel: StochasticKernel, states: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw of the next state for every current state."""
    cum = np.cumsum(kernel.probs, axis=1)
    rows = cum[states]
    nxt = (u[:, None] < rows).argmax(axis=1)
    # rounding can leave u above the last cumulative value
    over = u >= rows[:, -1]
    if np.any(over):
        last = kernel.probs.shape[1] - 1 - np.argmax(kernel.probs[:, ::-1] > 0, axis=1)
        nxt[over] = last[states[over]]
    if not np.all(kernel.support[states, nxt]):
        raise AssertionError("sampled a transition outside the support")
    return nxt


@dataclass(frozen=True)
class PathSample:
    start: int
    times: tuple
    states: tuple
    seed: int


def sample_path(chain, x0: int, horizon: int, seed: int, start_time: int = 0) -> PathSample:
    """One trajectory of length ``horizon`` started at ``x0`` at ``start_time``."""
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    sched = _as_schedule(chain)
    rng = _rng(seed)
    cur = np.array([int(x0)])
    states = [int(x0)]
    for t in range(start_time, start_time + horizon):
        cur = _step(sched.kernel_at(t), cur, rng.random(1))
        states.append(int(cur[0]))
    times = tuple(range(start_time, start_time + horizon + 1))
    return PathSample(int(x0), times, tuple(states), seed)


def wilson_interval(successes: int, trials: int, z: float = Z95):
    if trials <= 0:
        raise ValueError("need at least one trial")
    p = successes / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass(frozen=True)
class EstimateWithCI:
    point: float
    lo: float
    hi: float
    trials: int

    def covers(self, value: float) -> bool:
        return self.lo <= value <= self.hi


def estimate_return_prob(chain, x: int, a: SupportSet, t: int, trials: int, seed: int,
                         shards: int = 1, start_time: int = 0) -> EstimateWithCI:
    """Fraction of sampled length-``t`` paths from ``x`` that end in ``a``."""
    if trials < 100:
        raise ValueError("use at least 100 trials")
    sched = _as_schedule(chain)
    target = a.to_bool()
    sizes = [trials // shards + (1 if k < trials % shards else 0) for k in range(shards)]
    hits = 0
    for shard, size in enumerate(sizes):
        if size == 0:
            continue
        rng = _rng(seed, shard)
        cur = np.full(size, int(x))
        for s in range(start_time, start_time + t):
            cur = _step(sched.kernel_at(s), cur, rng.random(size))
        hits += int(target[cur].sum())
    lo, hi = wilson_interval(hits, trials)
    point = hits / trials
    return EstimateWithCI(point, min(lo, point), max(hi, point), trials)


def exact_return_prob(chain, x: int, a: SupportSet, t: int, start_time: int = 0) -> float:
    kernel = schedule_step(_as_schedule(chain), start_time, t)
    return float(kernel.probs[x, a.to_bool()].sum())


@dataclass(frozen=True)
class CoverageReport:
    rows: tuple
    covered: int
    total: int

    @property
    def fraction(self) -> float:
        return self.covered / self.total


def empirical_vs_exact(chain, m, pairs: Sequence, trials: int, seed: int) -> CoverageReport:
    """Check how often the exact probability lies inside the Wilson interval.

    ``pairs`` holds ``(x, a, t)`` triples; pair ``k`` is simulated with
    substream ``seed + k``. Each row also records ``m(a)`` when a reference
    measure is given.
    """
    rows = []
    covered = 0
    for k, (x, a, t) in enumerate(pairs):
        est = estimate_return_prob(chain, x, a, t, trials, seed + k)
        exact = exact_return_prob(chain, x, a, t)
        ok = est.covers(exact)
        covered += ok
        rows.append({"x": x, "set": list(a.indices()), "t": t, "trials": trials,
                     "point": est.point, "lo": est.lo, "hi": est.hi,
                     "exact": exact, "covered": ok,
                     "mass": None if m is None else m.mass(a.bits)})
    return CoverageReport(tuple(rows), covered, len(rows))
