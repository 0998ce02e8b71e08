"""Baseline construction and local-search algorithms, plus brute force.

All algorithms share conventions: candidates are scored against the
oracle's incremental caches, ties always break toward the lowest element
id, and the returned solution respects the cardinality bound.  Each
function resets the oracle's incremental state; run each on a private
clone when batching.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

import numpy as np

from .objectives import Oracle

BRUTE_FORCE_MAX_N = 24


@dataclass
class Solution:
    """Result of one algorithm run."""

    V: tuple[int, ...]
    f: float
    queries: int
    wall_time: float

    def as_set(self) -> set[int]:
        return set(self.V)


@dataclass
class SearchStep:
    """One iteration of the reversible search, for fidelity checks."""

    t: int
    chosen: int
    applied: int
    evicted: bool
    deltas: np.ndarray
    ages: np.ndarray
    scores: np.ndarray


def _finish(o: Oracle, f: float, q0: int, t0: float) -> Solution:
    members = tuple(int(e) for e in o.current_set())
    return Solution(members, float(f), o.queries - q0, time.perf_counter() - t0)


def greedy(o: Oracle, k: int) -> Solution:
    """Add the best positive-gain element until k or no positive gain."""
    if k < 0:
        raise ValueError("cardinality bound must be nonnegative")
    t0, q0 = time.perf_counter(), o.queries
    o.set_state(())
    while o.size < k:
        g = np.where(o.in_set(), -np.inf, o.gains())
        best = int(np.argmax(g))
        if not g[best] > 0:
            break
        o.flip(best)
    return _finish(o, o.current_value, q0, t0)


def greedy_rev(o: Oracle, k: int) -> Solution:
    """Apply the best strictly improving flip until none exists.

    Adds are only candidates below the cardinality bound; removals are
    always candidates.  Terminates because the value strictly increases.
    """
    if k < 0:
        raise ValueError("cardinality bound must be nonnegative")
    t0, q0 = time.perf_counter(), o.queries
    o.set_state(())
    while True:
        g = o.gains()
        if o.size >= k:
            g = np.where(o.in_set(), g, -np.inf)
        best = int(np.argmax(g))
        if not g[best] > 0:
            break
        o.flip(best)
    return _finish(o, o.current_value, q0, t0)


def greedy_ls(o: Oracle, k: int, eps: float = 0.0) -> Solution:
    """Greedy construction interleaved with deletions and swaps.

    After each addition, improving single deletions and (u out, v in)
    swaps are applied to a fixed point; the whole procedure repeats until
    no addition, deletion, or swap improves.  With eps > 0 a deletion or
    swap must beat the current value by eps / n**4 in relative terms,
    mirroring classical local-search termination; eps = 0 accepts any
    strict improvement.
    """
    if k < 0:
        raise ValueError("cardinality bound must be nonnegative")
    t0, q0 = time.perf_counter(), o.queries
    o.set_state(())
    margin = eps / float(o.n) ** 4 if eps > 0 else 0.0

    def improves(delta: float) -> bool:
        return delta > margin * abs(o.current_value)

    while True:
        moved = False
        if o.size < k:
            g = np.where(o.in_set(), -np.inf, o.gains())
            best = int(np.argmax(g))
            if g[best] > 0:
                o.flip(best)
                moved = True
        while True:
            x = o.in_set()
            g = np.where(x, o.gains(), -np.inf)
            best = int(np.argmax(g))
            if improves(g[best]):
                o.flip(best)
                moved = True
                continue
            best_delta, best_pair = -np.inf, None
            for u in np.flatnonzero(x):
                gu = o.flip(int(u))  # take u out to score replacements
                # each swap credential is one oracle query, per the
                # classical scheme; candidates are scanned in id order
                for v in np.flatnonzero(~o.in_set()):
                    if v == u:
                        continue
                    delta = gu + o.gain(int(v))
                    if delta > best_delta:
                        best_delta, best_pair = delta, (int(u), int(v))
                o.flip(int(u))
            if best_pair is not None and improves(best_delta):
                o.flip(best_pair[0])
                o.flip(best_pair[1])
                moved = True
                continue
            break
        if not moved:
            break
    return _finish(o, o.current_value, q0, t0)


def reversible_local_search(o: Oracle, k: int, lam_gain: float = 1.0,
                            lam_age: float = 0.1,
                            collect_trace: bool = False
                            ) -> tuple[Solution, list[SearchStep]]:
    """Age-augmented reversible search over 2k steps.

    Every step scores each element by lam_gain * flip_gain + lam_age *
    steps_since_chosen and flips the argmax whenever its gain is positive
    or the set is within the bound; otherwise the highest-scoring member
    is evicted.  The best feasible set seen is returned.
    """
    if k < 1:
        raise ValueError("cardinality bound must be at least 1")
    t0, q0 = time.perf_counter(), o.queries
    o.set_state(())
    n = o.n
    ages = np.zeros(n)
    best_f = o.current_value
    best_set: tuple[int, ...] = ()
    trace: list[SearchStep] = []
    for t in range(1, 2 * k + 1):
        ages += 1.0
        deltas = o.gains()
        scores = lam_gain * deltas + lam_age * ages
        ages_scored = ages.copy() if collect_trace else None
        chosen = int(np.argmax(scores))
        if deltas[chosen] > 0 or o.size <= k:
            o.flip(chosen)
            ages[chosen] = 0.0
            applied, evicted = chosen, False
            if o.size <= k and o.current_value > best_f:
                best_f = o.current_value
                best_set = tuple(int(e) for e in o.current_set())
        else:
            member_scores = np.where(o.in_set(), scores, -np.inf)
            applied, evicted = int(np.argmax(member_scores)), True
            o.flip(applied)
        if collect_trace:
            trace.append(SearchStep(t, chosen, applied, evicted,
                                    deltas.copy(), ages_scored, scores.copy()))
    sol = Solution(best_set, float(best_f), o.queries - q0,
                   time.perf_counter() - t0)
    return sol, trace


def brute_force_opt(o: Oracle, k: int) -> Solution:
    """Exact optimum by enumerating every subset of size at most k."""
    if o.n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"ground set too large for enumeration (n={o.n} > {BRUTE_FORCE_MAX_N})")
    if k < 0:
        raise ValueError("cardinality bound must be nonnegative")
    t0, q0 = time.perf_counter(), o.queries
    best_v: tuple[int, ...] = ()
    best_f = o.value(())
    for size in range(1, min(k, o.n) + 1):
        for combo in itertools.combinations(range(o.n), size):
            f = o.value(combo)
            if f > best_f:
                best_f, best_v = f, combo
    o.set_state(best_v)
    return Solution(best_v, float(best_f), o.queries - q0,
                    time.perf_counter() - t0)
