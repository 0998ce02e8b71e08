"""Set-function objectives with exact values and incremental flip gains.

Each oracle evaluates a real-valued function f over subsets of a ground
set of n elements and answers three kinds of queries:

* ``value(V)``: f(V) recomputed from scratch for any subset V.
* ``gain(e)``: f(V xor {e}) - f(V) for the oracle's current set V,
  served from per-element caches (add-gain if e is out, remove-gain if
  e is in).
* ``flip(e)``: toggle e in the current set and update the caches.

Query accounting, used by the benchmark harness: value and gain count 1
each, ``gains()`` over the whole ground set counts n, and a flip counts
1 (it evaluates the realized gain).  All arithmetic is float64; callers
comparing incremental against from-scratch numbers should allow 1e-9
relative tolerance.
"""

from __future__ import annotations

from collections import OrderedDict

import numpy as np

from .graphs import Graph, RatingsMatrix
from .rng import make_rng, positive_uniform

REL_TOL = 1e-9


class Oracle:
    """Base class holding the membership mask and query counters."""

    name = "abstract"

    def __init__(self, n: int):
        self.n = int(n)
        self.queries = 0
        self._x = np.zeros(self.n, dtype=bool)

    # -- subclass hooks -------------------------------------------------
    def _value(self, mask: np.ndarray) -> float:
        raise NotImplementedError

    def _rebuild(self, mask: np.ndarray) -> None:
        raise NotImplementedError

    def _gain_one(self, e: int) -> float:
        raise NotImplementedError

    def _gains_all(self) -> np.ndarray:
        raise NotImplementedError

    def _apply(self, e: int) -> None:
        raise NotImplementedError

    def clone(self) -> "Oracle":
        raise NotImplementedError

    # -- public API -----------------------------------------------------
    def as_mask(self, subset) -> np.ndarray:
        mask = np.zeros(self.n, dtype=bool)
        idx = np.asarray(list(subset), dtype=np.int64)
        if idx.size:
            if idx.min() < 0 or idx.max() >= self.n:
                raise ValueError(f"element outside [0, {self.n})")
            mask[idx] = True
        return mask

    def value(self, subset) -> float:
        """f(subset), computed from scratch; does not touch the caches."""
        self.queries += 1
        return float(self._value(self.as_mask(subset)))

    def set_state(self, subset=()) -> None:
        """Point the incremental caches at `subset`."""
        mask = self.as_mask(subset)
        self._x = mask
        self._rebuild(mask)

    def gain(self, e: int, subset=None) -> float:
        """Flip gain of e against the current set (or `subset` if given)."""
        if not 0 <= e < self.n:
            raise ValueError(f"element {e} outside [0, {self.n})")
        if subset is not None:
            mask = self.as_mask(subset)
            if not np.array_equal(mask, self._x):
                self._x = mask
                self._rebuild(mask)
        self.queries += 1
        return float(self._gain_one(int(e)))

    def gains(self, subset=None) -> np.ndarray:
        """Flip gains of every element; counts n queries."""
        if subset is not None:
            mask = self.as_mask(subset)
            if not np.array_equal(mask, self._x):
                self._x = mask
                self._rebuild(mask)
        self.queries += self.n
        return self._gains_all()

    def flip(self, e: int) -> float:
        """Toggle e in the current set; returns the realized gain."""
        if not 0 <= e < self.n:
            raise ValueError(f"element {e} outside [0, {self.n})")
        self.queries += 1
        g = float(self._gain_one(int(e)))
        self._apply(int(e))
        return g

    @property
    def current_value(self) -> float:
        return float(self._f)

    @property
    def size(self) -> int:
        return int(self._x.sum())

    def in_set(self) -> np.ndarray:
        return self._x.copy()

    def current_set(self) -> np.ndarray:
        return np.flatnonzero(self._x)


class MaxCutOracle(Oracle):
    """Total weight of edges crossing between the set and its complement.

    Per element we track the weight to neighbors currently inside the
    set; with t(e) the total incident weight, the add-gain of an outside
    element is t(e) - 2 * inside(e) and the remove-gain is its negation.
    """

    name = "maxcut"

    def __init__(self, g: Graph):
        if g.directed:
            raise ValueError("cut objective requires an undirected graph")
        super().__init__(g.n)
        self.graph = g
        self._indptr, self._nbr, self._w = g.csr()
        src, _, w = g.arc_arrays()
        self._wtot = np.bincount(src, weights=w, minlength=self.n)
        self.set_state(())

    def clone(self) -> "MaxCutOracle":
        return MaxCutOracle(self.graph)

    def _value(self, mask) -> float:
        src, dst, w = self.graph.arc_arrays()
        return float(np.sum(w * (mask[src] & ~mask[dst])))

    def _rebuild(self, mask) -> None:
        src, dst, w = self.graph.arc_arrays()
        self._cut_in = np.bincount(src, weights=w * mask[dst], minlength=self.n)
        self._f = self._value(mask)

    def _gains_all(self) -> np.ndarray:
        return np.where(self._x, -1.0, 1.0) * (self._wtot - 2.0 * self._cut_in)

    def _gain_one(self, e) -> float:
        base = self._wtot[e] - 2.0 * self._cut_in[e]
        return -base if self._x[e] else base

    def _apply(self, e) -> None:
        g = self._gain_one(e)
        lo, hi = self._indptr[e], self._indptr[e + 1]
        sign = -1.0 if self._x[e] else 1.0
        self._cut_in[self._nbr[lo:hi]] += sign * self._w[lo:hi]
        self._x[e] = not self._x[e]
        self._f += g


class MaxCovOracle(Oracle):
    """Weighted coverage of out-neighborhoods minus degree-based costs.

    A node is covered when it is selected or pointed to by a selected
    node; each selected node pays 1 + max(out_degree - q, 0).  The caches
    hold per-node coverer counts, so the gain of e only inspects e and
    its out-neighbors: nodes with count 0 are gained by an add, nodes
    with count 1 (necessarily covered only by e) are lost by a remove.
    """

    name = "maxcov"

    def __init__(self, g: Graph, q: float = 6.0, node_weights=None):
        if not g.directed:
            raise ValueError("coverage objective requires a directed graph")
        super().__init__(g.n)
        self.graph = g
        self.q = float(q)
        self._indptr, self._out, _ = g.csr()
        outdeg = g.out_degrees().astype(np.float64)
        self.cost = 1.0 + np.maximum(outdeg - self.q, 0.0)
        if node_weights is None:
            self.node_w = np.ones(self.n)
        else:
            self.node_w = np.asarray(node_weights, dtype=np.float64).copy()
            if self.node_w.shape != (self.n,):
                raise ValueError("node weight vector must have one entry per node")
        self.set_state(())

    def clone(self) -> "MaxCovOracle":
        return MaxCovOracle(self.graph, q=self.q, node_weights=self.node_w)

    def _coverers(self, mask) -> np.ndarray:
        src, dst, _ = self.graph.arc_arrays()
        cov = np.bincount(dst, weights=mask[src].astype(np.float64), minlength=self.n)
        return cov.astype(np.int64) + mask.astype(np.int64)

    def _value(self, mask) -> float:
        cov = self._coverers(mask)
        return float(self.node_w[cov > 0].sum() - self.cost[mask].sum())

    def _rebuild(self, mask) -> None:
        self._cov = self._coverers(mask)
        self._f = self._value(mask)

    def _gains_all(self) -> np.ndarray:
        src, dst, _ = self.graph.arc_arrays()
        t0 = self.node_w * (self._cov == 0)
        t1 = self.node_w * (self._cov == 1)
        add_part = t0 + np.bincount(src, weights=t0[dst], minlength=self.n)
        rem_part = t1 + np.bincount(src, weights=t1[dst], minlength=self.n)
        return np.where(self._x, self.cost - rem_part, add_part - self.cost)

    def _gain_one(self, e) -> float:
        lo, hi = self._indptr[e], self._indptr[e + 1]
        touched_cov = self._cov[self._out[lo:hi]]
        touched_w = self.node_w[self._out[lo:hi]]
        if self._x[e]:
            lost = touched_w[touched_cov == 1].sum() + self.node_w[e] * (self._cov[e] == 1)
            return float(self.cost[e] - lost)
        gained = touched_w[touched_cov == 0].sum() + self.node_w[e] * (self._cov[e] == 0)
        return float(gained - self.cost[e])

    def _apply(self, e) -> None:
        g = self._gain_one(e)
        lo, hi = self._indptr[e], self._indptr[e + 1]
        delta = -1 if self._x[e] else 1
        self._cov[self._out[lo:hi]] += delta
        self._cov[e] += delta
        self._x[e] = not self._x[e]
        self._f += g


class _DenseSimilarity:
    """Full item-by-item similarity matrix held in memory."""

    def __init__(self, s: np.ndarray):
        self.s = s
        self.col = s.sum(axis=0)
        self.diag = np.diagonal(s).copy()

    def row(self, e: int) -> np.ndarray:
        return self.s[e]


class _LazySimilarity:
    """Similarity rows computed on demand with a small LRU cache."""

    def __init__(self, row_fn, col: np.ndarray, diag: np.ndarray, cache_size: int = 256):
        self._row_fn = row_fn
        self.col = col
        self.diag = diag
        self._cache: OrderedDict[int, np.ndarray] = OrderedDict()
        self._cache_size = cache_size

    def row(self, e: int) -> np.ndarray:
        if e in self._cache:
            self._cache.move_to_end(e)
            return self._cache[e]
        r = self._row_fn(e)
        self._cache[e] = r
        if len(self._cache) > self._cache_size:
            self._cache.popitem(last=False)
        return r


DENSE_SIMILARITY_LIMIT = 4096


class MovRecOracle(Oracle):
    """Sum of similarities to the chosen items minus a diversity penalty.

    f(V) = sum_j-in-V colsum(j) - lam * sum_{i,j in V} s(i, j), with
    s symmetric.  The cache keeps inV(j) = sum_{i in V} s(i, j), giving
    add-gain  colsum(e) - lam * (2 * inV(e) + s(e, e)) and remove-gain
    -colsum(e) + lam * (2 * inV(e) - s(e, e)).
    """

    name = "movrec"

    def __init__(self, similarity, lam: float = 5.0):
        if lam < 0:
            raise ValueError("diversity coefficient must be nonnegative")
        self.lam = float(lam)
        self._sim = similarity
        super().__init__(len(similarity.col))
        self.set_state(())

    @classmethod
    def from_ratings(cls, m: RatingsMatrix, lam: float = 5.0) -> "MovRecOracle":
        r = m.ratings
        if m.n_items <= DENSE_SIMILARITY_LIMIT:
            return cls(_DenseSimilarity(r @ r.T), lam=lam)
        col = r @ (r.sum(axis=0))
        diag = np.einsum("iu,iu->i", r, r)
        return cls(_LazySimilarity(lambda e: r @ r[e], col, diag), lam=lam)

    @classmethod
    def from_graph(cls, g: Graph, lam: float = 5.0) -> "MovRecOracle":
        """Use symmetric edge weights directly as item similarities."""
        if g.directed:
            raise ValueError("graph-based similarity requires an undirected graph")
        if g.n <= DENSE_SIMILARITY_LIMIT:
            s = np.zeros((g.n, g.n))
            for u, v, w in g.edges:
                s[u, v] = w
                s[v, u] = w
            return cls(_DenseSimilarity(s), lam=lam)
        src, _, w = g.arc_arrays()
        col = np.bincount(src, weights=w, minlength=g.n)
        indptr, nbr, wa = g.csr()

        def row(e: int) -> np.ndarray:
            out = np.zeros(g.n)
            lo, hi = indptr[e], indptr[e + 1]
            out[nbr[lo:hi]] = wa[lo:hi]
            return out

        return cls(_LazySimilarity(row, col, np.zeros(g.n)), lam=lam)

    def clone(self) -> "MovRecOracle":
        return MovRecOracle(self._sim, lam=self.lam)

    def _value(self, mask) -> float:
        idx = np.flatnonzero(mask)
        if idx.size == 0:
            return 0.0
        pair = 0.0
        for i in idx:
            pair += self._sim.row(int(i))[idx].sum()
        return float(self._sim.col[idx].sum() - self.lam * pair)

    def _rebuild(self, mask) -> None:
        inv = np.zeros(self.n)
        for i in np.flatnonzero(mask):
            inv += self._sim.row(int(i))
        self._inv = inv
        self._f = self._value(mask)

    def _gains_all(self) -> np.ndarray:
        add = self._sim.col - self.lam * (2.0 * self._inv + self._sim.diag)
        rem = -self._sim.col + self.lam * (2.0 * self._inv - self._sim.diag)
        return np.where(self._x, rem, add)

    def _gain_one(self, e) -> float:
        if self._x[e]:
            return float(-self._sim.col[e] + self.lam * (2.0 * self._inv[e] - self._sim.diag[e]))
        return float(self._sim.col[e] - self.lam * (2.0 * self._inv[e] + self._sim.diag[e]))

    def _apply(self, e) -> None:
        g = self._gain_one(e)
        if self._x[e]:
            self._inv -= self._sim.row(e)
        else:
            self._inv += self._sim.row(e)
        self._x[e] = not self._x[e]
        self._f += g


def _safe_sqrt(v):
    # incremental +=/-= updates can leave residuals a hair below zero
    return np.sqrt(np.maximum(v, 0.0))


class InfExpOracle(Oracle):
    """Concave influence of the chosen set on the remaining elements.

    f(V) = sum over i outside V of a_i * sqrt(inw(i)), where inw(i) is
    the weight from i to members of V.  Flipping e touches inw only on
    e's neighborhood, so gains are neighborhood-local.
    """

    name = "infexp"

    def __init__(self, g: Graph, a: np.ndarray):
        if g.directed:
            raise ValueError("influence objective requires an undirected graph")
        if any(w < 0 for _, _, w in g.edges):
            raise ValueError("influence objective requires nonnegative edge weights")
        super().__init__(g.n)
        self.graph = g
        self.a = np.asarray(a, dtype=np.float64).copy()
        if self.a.shape != (g.n,):
            raise ValueError("need one concavity coefficient per node")
        if np.any(self.a < 0):
            raise ValueError("concavity coefficients must be nonnegative")
        self._indptr, self._nbr, self._w = g.csr()
        self.set_state(())

    @classmethod
    def sampled(cls, g: Graph, shape: float = 2.0, scale: float = 1.0,
                seed: int = 0) -> "InfExpOracle":
        """Draw the concavity coefficients from a Lomax(shape, scale) law.

        Inverse-CDF sampling: a = scale * (u ** (-1 / shape) - 1) with
        u uniform on (0, 1).
        """
        rng = make_rng(seed)
        u = positive_uniform(rng, g.n)
        return cls(g, scale * (u ** (-1.0 / shape) - 1.0))

    def clone(self) -> "InfExpOracle":
        return InfExpOracle(self.graph, self.a)

    def _inw_for(self, mask) -> np.ndarray:
        src, dst, w = self.graph.arc_arrays()
        return np.bincount(src, weights=w * mask[dst], minlength=self.n)

    def _value(self, mask) -> float:
        inw = self._inw_for(mask)
        return float(np.sum(self.a[~mask] * _safe_sqrt(inw[~mask])))

    def _rebuild(self, mask) -> None:
        self._inw = self._inw_for(mask)
        self._f = self._value(mask)

    def _gains_all(self) -> np.ndarray:
        src, dst, w = self.graph.arc_arrays()
        sq = _safe_sqrt(self._inw)
        outside = ~self._x[dst]
        scale = self.a[dst] * outside
        add_term = scale * (_safe_sqrt(self._inw[dst] + w) - sq[dst])
        rem_term = scale * (_safe_sqrt(self._inw[dst] - w) - sq[dst])
        add_part = np.bincount(src, weights=add_term, minlength=self.n)
        rem_part = np.bincount(src, weights=rem_term, minlength=self.n)
        own = self.a * sq
        return np.where(self._x, own + rem_part, -own + add_part)

    def _gain_one(self, e) -> float:
        lo, hi = self._indptr[e], self._indptr[e + 1]
        nb, wn = self._nbr[lo:hi], self._w[lo:hi]
        outside = ~self._x[nb]
        scale = self.a[nb] * outside
        sq_nb = _safe_sqrt(self._inw[nb])
        own = self.a[e] * _safe_sqrt(self._inw[e])
        if self._x[e]:
            return float(own + np.sum(scale * (_safe_sqrt(self._inw[nb] - wn) - sq_nb)))
        return float(-own + np.sum(scale * (_safe_sqrt(self._inw[nb] + wn) - sq_nb)))

    def _apply(self, e) -> None:
        g = self._gain_one(e)
        lo, hi = self._indptr[e], self._indptr[e + 1]
        sign = -1.0 if self._x[e] else 1.0
        self._inw[self._nbr[lo:hi]] += sign * self._w[lo:hi]
        self._x[e] = not self._x[e]
        self._f += g


def make_maxcut(g: Graph) -> MaxCutOracle:
    return MaxCutOracle(g)


def make_maxcov(g: Graph, q: float = 6.0, node_weights=None) -> MaxCovOracle:
    return MaxCovOracle(g, q=q, node_weights=node_weights)


def make_movrec(m: RatingsMatrix, lam: float = 5.0) -> MovRecOracle:
    return MovRecOracle.from_ratings(m, lam=lam)


def make_movrec_from_graph(g: Graph, lam: float = 5.0) -> MovRecOracle:
    return MovRecOracle.from_graph(g, lam=lam)


def make_infexp(g: Graph, shape: float = 2.0, scale: float = 1.0,
                seed: int = 0) -> InfExpOracle:
    return InfExpOracle.sampled(g, shape=shape, scale=scale, seed=seed)
