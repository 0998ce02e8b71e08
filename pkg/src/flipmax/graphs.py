"""Weighted graphs, synthetic generators, and file ingestion.

Graphs are immutable after construction and use dense 0-based node ids so
that per-element state elsewhere in the library can live in flat numpy
arrays.  Undirected graphs store each edge once, canonically as
``(min(u, v), max(u, v))``; lookups that need both directions expand on
demand into cached CSR-style arrays.
"""

from __future__ import annotations

import enum
import hashlib
from typing import Iterable, Sequence

import numpy as np

from .rng import make_rng, positive_uniform


class WeightScheme(enum.Enum):
    """How edge weights are drawn by the synthetic generators."""

    SIGNED_UNIT = "signed"     # -1 or +1 with equal probability
    UNIT = "unit"              # constant +1
    UNIFORM_REAL = "uniform"   # strictly inside (0, 1)

    def draw(self, rng, count: int) -> np.ndarray:
        if self is WeightScheme.SIGNED_UNIT:
            return rng.integers(0, 2, size=count) * 2.0 - 1.0
        if self is WeightScheme.UNIT:
            return np.ones(count)
        return positive_uniform(rng, count)


class Graph:
    """A weighted graph over nodes 0..n-1.

    Args:
        n: node count; every edge endpoint must lie in [0, n).
        edges: iterable of (u, v, w) triples.  For undirected graphs the
            pair orientation is irrelevant and is canonicalized.
        directed: whether (u, v) and (v, u) are distinct arcs.

    Raises:
        ValueError: on self-loops, out-of-range endpoints, or duplicate
            (u, v) pairs.
    """

    def __init__(self, n: int, edges: Iterable[tuple[int, int, float]],
                 directed: bool = False):
        if n < 0:
            raise ValueError("node count must be nonnegative")
        self.n = int(n)
        self.directed = bool(directed)
        canon = []
        for u, v, w in edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop on node {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) outside [0, {self.n})")
            if not self.directed and u > v:
                u, v = v, u
            canon.append((u, v, float(w)))
        canon.sort(key=lambda e: (e[0], e[1]))
        for a, b in zip(canon, canon[1:]):
            if a[0] == b[0] and a[1] == b[1]:
                raise ValueError(f"duplicate edge ({a[0]}, {a[1]})")
        self.edges: list[tuple[int, int, float]] = canon
        self._csr = None

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def __eq__(self, other) -> bool:
        return (isinstance(other, Graph) and self.n == other.n
                and self.directed == other.directed and self.edges == other.edges)

    def __repr__(self) -> str:
        kind = "directed" if self.directed else "undirected"
        return f"Graph(n={self.n}, edges={self.n_edges}, {kind})"

    def arc_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Flat (src, dst, w) arrays, CSR-ordered by (src, dst).

        Undirected edges appear in both directions.  Cached; treat the
        returned arrays as read-only.
        """
        self._build_csr()
        return self._src, self._dst, self._w

    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(indptr, dst, w) over the arc arrays; out-arcs when directed."""
        self._build_csr()
        return self._indptr, self._dst, self._w

    def neighbors(self, u: int) -> tuple[np.ndarray, np.ndarray]:
        """(neighbor ids, weights) of u; out-neighbors when directed."""
        indptr, dst, w = self.csr()
        lo, hi = indptr[u], indptr[u + 1]
        return dst[lo:hi], w[lo:hi]

    def out_degrees(self) -> np.ndarray:
        indptr, _, _ = self.csr()
        return np.diff(indptr)

    def to_directed(self) -> "Graph":
        """Expand an undirected graph into arcs in both directions."""
        if self.directed:
            return self
        arcs = [(u, v, w) for u, v, w in self.edges]
        arcs += [(v, u, w) for u, v, w in self.edges]
        return Graph(self.n, arcs, directed=True)

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(f"{self.n} {int(self.directed)}\n".encode())
        for u, v, w in self.edges:
            h.update(f"{u} {v} {w!r}\n".encode())
        return h.hexdigest()

    def _build_csr(self) -> None:
        if self._csr is not None:
            return
        if self.directed:
            src = np.array([e[0] for e in self.edges], dtype=np.int64)
            dst = np.array([e[1] for e in self.edges], dtype=np.int64)
            w = np.array([e[2] for e in self.edges])
        else:
            src = np.array([e[0] for e in self.edges]
                           + [e[1] for e in self.edges], dtype=np.int64)
            dst = np.array([e[1] for e in self.edges]
                           + [e[0] for e in self.edges], dtype=np.int64)
            w = np.array([e[2] for e in self.edges] * 2)
        order = np.lexsort((dst, src))
        self._src = src[order]
        self._dst = dst[order]
        self._w = w[order]
        self._indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.add.at(self._indptr, self._src + 1, 1)
        np.cumsum(self._indptr, out=self._indptr)
        self._csr = True


def gen_er(n: int, p: float, scheme: WeightScheme, seed: int) -> Graph:
    """Erdos-Renyi G(n, p): each unordered pair kept with probability p.

    Weights for the kept pairs are drawn from `scheme` in lexicographic
    pair order, so results are reproducible given the seed.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"edge probability {p} outside [0, 1]")
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = make_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < p
    us, vs = iu[keep], ju[keep]
    ws = scheme.draw(rng, len(us))
    return Graph(n, zip(us.tolist(), vs.tolist(), ws.tolist()))


def gen_ba(n: int, m_attach: int, scheme: WeightScheme, seed: int) -> Graph:
    """Preferential-attachment graph with exactly (n - m_attach) * m_attach edges.

    Starts from m_attach isolated nodes; each new node attaches to
    m_attach distinct existing nodes sampled proportionally to degree,
    falling back to uniform while all remaining candidates have degree 0.
    """
    if not 1 <= m_attach < n:
        raise ValueError(f"need 1 <= m_attach < n, got m_attach={m_attach}, n={n}")
    rng = make_rng(seed)
    degrees = np.zeros(n, dtype=np.int64)
    pairs: list[tuple[int, int]] = []
    for v in range(m_attach, n):
        avail = np.ones(v, dtype=bool)
        for _ in range(m_attach):
            weights = np.where(avail, degrees[:v], 0).astype(np.float64)
            total = weights.sum()
            if total > 0:
                probs = weights / total
            else:
                probs = avail / avail.sum()
            u = int(rng.choice(v, p=probs))
            avail[u] = False
            pairs.append((u, v))
            degrees[u] += 1
            degrees[v] += 1
    ws = scheme.draw(rng, len(pairs))
    return Graph(n, [(u, v, w) for (u, v), w in zip(pairs, ws.tolist())])


def load_edge_list(path, directed: bool = False,
                   reweight: WeightScheme | None = None,
                   reweight_seed: int = 0) -> Graph:
    """Parse a whitespace-separated "u v [w]" edge list file.

    Lines starting with '#' and blank lines are ignored; a missing third
    column defaults to weight 1.0.  Node count is 1 + the largest id.
    With `reweight`, the file's weights are replaced by draws from the
    given scheme (structure preserved); callers should record that choice
    in their run metadata.
    """
    edges: list[tuple[int, int, float]] = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise ValueError(f"{path}: line {lineno}: expected 'u v [w]', got {line!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
                w = float(parts[2]) if len(parts) == 3 else 1.0
            except ValueError as exc:
                raise ValueError(f"{path}: line {lineno}: {exc}") from None
            if u == v:
                raise ValueError(f"{path}: line {lineno}: self-loop on node {u}")
            edges.append((u, v, w))
    n = 1 + max((max(u, v) for u, v, _ in edges), default=-1)
    if reweight is not None:
        rng = make_rng(reweight_seed)
        ws = reweight.draw(rng, len(edges))
        edges = [(u, v, float(w)) for (u, v, _), w in zip(edges, ws)]
    return Graph(n, edges, directed=directed)


def save_edge_list(g: Graph, path) -> None:
    """Write the canonical edge list; load_edge_list inverts this exactly."""
    with open(path, "w", encoding="utf-8") as f:
        for u, v, w in g.edges:
            f.write(f"{u} {v} {w!r}\n")


def load_node_weights(path, n: int) -> np.ndarray:
    """Parse "node w" lines into a length-n array, defaulting to 1.0."""
    out = np.ones(n)
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}: line {lineno}: expected 'node w'")
            node, w = int(parts[0]), float(parts[1])
            if not 0 <= node < n:
                raise ValueError(f"{path}: line {lineno}: node {node} outside [0, {n})")
            out[node] = w
    return out


class RatingsMatrix:
    """Dense item-by-user ratings with the original id maps retained."""

    def __init__(self, ratings: np.ndarray,
                 item_ids: Sequence[int] | None = None,
                 user_ids: Sequence[int] | None = None):
        ratings = np.asarray(ratings, dtype=np.float64)
        if ratings.ndim != 2 or ratings.shape[0] < 1 or ratings.shape[1] < 1:
            raise ValueError("ratings must be a nonempty 2-D item x user matrix")
        if not np.all(np.isfinite(ratings)):
            raise ValueError("ratings must be finite")
        self.ratings = ratings
        self.n_items, self.n_users = ratings.shape
        self.item_ids = list(item_ids) if item_ids is not None else list(range(self.n_items))
        self.user_ids = list(user_ids) if user_ids is not None else list(range(self.n_users))
        if len(self.item_ids) != self.n_items or len(self.user_ids) != self.n_users:
            raise ValueError("id maps must match matrix dimensions")

    def __eq__(self, other) -> bool:
        return (isinstance(other, RatingsMatrix)
                and self.item_ids == other.item_ids
                and self.user_ids == other.user_ids
                and np.array_equal(self.ratings, other.ratings))

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(repr(self.item_ids).encode())
        h.update(repr(self.user_ids).encode())
        h.update(np.ascontiguousarray(self.ratings).tobytes())
        return h.hexdigest()


def load_ratings(path) -> RatingsMatrix:
    """Load "user,item,rating" CSV triples into a dense matrix.

    An optional header row is skipped; absent (user, item) pairs are 0.
    External ids are compacted to contiguous indices in sorted order and
    kept on the returned matrix so files can be written back unchanged.
    """
    triples: list[tuple[int, int, float]] = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 3:
                raise ValueError(f"{path}: line {lineno}: expected 'user,item,rating'")
            try:
                user, item, rating = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError:
                if lineno == 1:
                    continue  # header row
                raise ValueError(f"{path}: line {lineno}: non-numeric entry") from None
            triples.append((user, item, rating))
    if not triples:
        raise ValueError(f"{path}: no ratings")
    user_ids = sorted({u for u, _, _ in triples})
    item_ids = sorted({i for _, i, _ in triples})
    urow = {u: j for j, u in enumerate(user_ids)}
    irow = {i: j for j, i in enumerate(item_ids)}
    ratings = np.zeros((len(item_ids), len(user_ids)))
    for user, item, rating in triples:
        ratings[irow[item], urow[user]] = rating
    return RatingsMatrix(ratings, item_ids=item_ids, user_ids=user_ids)


def save_ratings(m: RatingsMatrix, path) -> None:
    """Write nonzero entries as "user,item,rating" triples with a header."""
    with open(path, "w", encoding="utf-8") as f:
        f.write("user,item,rating\n")
        items, users = np.nonzero(m.ratings)
        for i, u in zip(items.tolist(), users.tolist()):
            f.write(f"{m.user_ids[u]},{m.item_ids[i]},{float(m.ratings[i, u])!r}\n")


def gen_ratings(n_items: int, n_users: int, density: float, seed: int) -> RatingsMatrix:
    """Synthetic 1..5 integer ratings at the given fill density.

    Every item and every user is guaranteed at least one rating so the
    matrix round-trips through save/load without losing rows or columns.
    """
    if n_items < 1 or n_users < 1:
        raise ValueError("need at least one item and one user")
    if not 0.0 <= density <= 1.0:
        raise ValueError("density outside [0, 1]")
    rng = make_rng(seed)
    mask = rng.random((n_items, n_users)) < density
    for i in range(n_items):
        if not mask[i].any():
            mask[i, rng.integers(n_users)] = True
    for u in range(n_users):
        if not mask[:, u].any():
            mask[rng.integers(n_items), u] = True
    ratings = np.where(mask, rng.integers(1, 6, size=(n_items, n_users)), 0).astype(np.float64)
    return RatingsMatrix(ratings)
