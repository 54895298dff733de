"""Compare the series, recurrence and conservativity conditions on random chains.

Each chain has at most eight states, so every subset can be checked. The
script counts how often each condition holds and confirms that the
equivalences never break. Run with ``python3 demos/02_random_survey.py``.
"""

import time
from collections import Counter

import numpy as np

from markov_recurrence import ReferenceMeasure, validate_kernel, verify_theorem1, verify_theorem4


def random_chain(rng):
    n = int(rng.integers(1, 9))
    p = rng.random((n, n)) * (rng.random((n, n)) < rng.uniform(0.1, 0.8))
    p[np.arange(n), rng.integers(n, size=n)] += 0.1
    w = rng.uniform(0.1, 1, n) * (rng.random(n) > 0.3)
    w[rng.integers(n)] = 1.0
    return validate_kernel(p / p.sum(axis=1, keepdims=True)), ReferenceMeasure(w)


rng = np.random.default_rng(2024)
counts = Counter()
start = time.perf_counter()
for _ in range(500):
    q, m = random_chain(rng)
    t1 = verify_theorem1(q, m)
    a, c, plus, prp, mes = verify_theorem4(q, m)
    counts["series diverges for all A"] += t1.details["E_MAIN_ALL_A"]
    counts["PRP"] += t1.details["PRP"]
    counts["forward series diverges for all A"] += plus.holds
    counts["pushforward series diverges for all A"] += mes.holds
    counts["equivalence broken"] += not t1.holds or not a.holds or not c.holds
print(f"500 chains in {time.perf_counter() - start:.2f}s")
for key, val in counts.items():
    print(f"{key:40s} {val:4d}")
