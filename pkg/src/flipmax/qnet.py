"""Bias-free two-layer scoring network with a mean-pooled readout.

Per element e with feature row x_e, the network computes

    mu_e = relu(th2 @ relu(th1 @ x_e))
    Q_e  = th4 . [relu(th3 @ mean_u mu_u), mu_e]

entirely in float64.  Gradients are analytic (no autodiff framework) and
verified against central finite differences in the test suite.  The
mean-pool accumulates its column sums over a canonically sorted order so
the output is exactly invariant under permutations of the element rows,
not just up to rounding.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .env import FEATURE_DIM
from .rng import make_rng

CHECKPOINT_MAGIC = b"RELSDQN1"
CHECKPOINT_VERSION = 1
GRAD_CLIP_NORM = 1.0
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class QParams:
    """The four weight arrays; hidden width m is implied by the shapes."""

    th1: np.ndarray  # (m, FEATURE_DIM)
    th2: np.ndarray  # (m, m)
    th3: np.ndarray  # (m, m)
    th4: np.ndarray  # (2m,)

    @property
    def m(self) -> int:
        return self.th1.shape[0]

    def arrays(self) -> tuple[np.ndarray, ...]:
        return self.th1, self.th2, self.th3, self.th4

    def copy(self) -> "QParams":
        return QParams(*(a.copy() for a in self.arrays()))

    def __eq__(self, other) -> bool:
        return isinstance(other, QParams) and all(
            np.array_equal(a, b) for a, b in zip(self.arrays(), other.arrays()))


@dataclass
class Gradients:
    th1: np.ndarray
    th2: np.ndarray
    th3: np.ndarray
    th4: np.ndarray

    def arrays(self) -> tuple[np.ndarray, ...]:
        return self.th1, self.th2, self.th3, self.th4

    def global_norm(self) -> float:
        return float(np.sqrt(sum(float(np.sum(a * a)) for a in self.arrays())))


def init_params(m: int, seed: int) -> QParams:
    """Glorot-uniform initialization, drawn th1..th4 in order."""
    if m < 1:
        raise ValueError("hidden width must be at least 1")
    rng = make_rng(seed)

    def glorot(fan_in, fan_out, shape):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=shape)

    return QParams(
        th1=glorot(FEATURE_DIM, m, (m, FEATURE_DIM)),
        th2=glorot(m, m, (m, m)),
        th3=glorot(m, m, (m, m)),
        th4=glorot(2 * m, 1, (2 * m,)),
    )


def _canonical_perm(f2d: np.ndarray) -> np.ndarray:
    """Indices putting the rows in lexicographic order (stable for ties)."""
    keys = tuple(f2d[:, c] for c in range(f2d.shape[1] - 1, -1, -1))
    return np.lexsort(keys)


def _propagate_ties(fc: np.ndarray, qc: np.ndarray) -> np.ndarray:
    """Force bitwise-equal scores onto runs of identical (sorted) rows."""
    if len(qc) > 1:
        same = np.all(fc[1:] == fc[:-1], axis=1)
        for i in np.flatnonzero(same):
            qc[i + 1] = qc[i]
    return qc


def forward(p: QParams, features: np.ndarray) -> np.ndarray:
    """Q-values for an (n, FEATURE_DIM) feature matrix.

    Rows are internally brought into a canonical order before any matrix
    arithmetic and the scores scattered back, so the result is exactly
    invariant under row permutations regardless of how the underlying
    BLAS rounds differently at different row positions.
    """
    f = np.asarray(features, dtype=np.float64)
    if f.ndim != 2 or f.shape[1] != FEATURE_DIM:
        raise ValueError(f"features must be (n, {FEATURE_DIM}), got {f.shape}")
    order = _canonical_perm(f)
    fc = f[order]
    qc = _propagate_ties(fc, _forward_batch(p, fc[None])[0][0])
    out = np.empty_like(qc)
    out[order] = qc
    return out


def _forward_batch(p: QParams, f: np.ndarray):
    """Shared forward over a (B, n, FEATURE_DIM) stack, keeping caches.

    Callers wanting exact permutation invariance must pass rows in
    canonical order (see :func:`forward`).  Activations are computed in
    place; a relu output is positive exactly where its pre-activation
    was, so the caches double as backward masks.
    """
    m = p.m
    n = f.shape[1]
    h1 = f @ p.th1.T
    np.maximum(h1, 0.0, out=h1)
    mu = h1 @ p.th2.T
    np.maximum(mu, 0.0, out=mu)
    pool_in = mu.sum(axis=-2) / n         # (B, m)
    pooled = pool_in @ p.th3.T            # (B, m)
    np.maximum(pooled, 0.0, out=pooled)
    q = mu @ p.th4[m:] + (pooled @ p.th4[:m])[:, None]
    return q, (h1, mu, pool_in, pooled)


def forward_many(p: QParams, stacked: np.ndarray) -> np.ndarray:
    """Q-values for a stack of same-sized feature matrices."""
    f = np.asarray(stacked, dtype=np.float64)
    if f.ndim != 3 or f.shape[2] != FEATURE_DIM:
        raise ValueError(f"expected (B, n, {FEATURE_DIM}), got {f.shape}")
    orders = [_canonical_perm(item) for item in f]
    fc = np.stack([item[order] for item, order in zip(f, orders)])
    qc = _forward_batch(p, fc)[0]
    out = np.empty_like(qc)
    for b, order in enumerate(orders):
        out[b, order] = _propagate_ties(fc[b], qc[b])
    return out


def loss_and_grad(p: QParams, batch) -> tuple[float, Gradients]:
    """Mean squared error of Q at the chosen actions, with gradients.

    `batch` is a sequence of (features, action, target) triples; feature
    matrices may have different row counts.  The gradient flows through
    both the per-element path and the shared mean-pool path.
    """
    if not batch:
        raise ValueError("empty batch")
    total = len(batch)
    m = p.m
    grads = Gradients(*(np.zeros_like(a) for a in p.arrays()))
    loss = 0.0
    by_n: dict[int, list[int]] = {}
    for i, (f, a, _) in enumerate(batch):
        n = np.asarray(f).shape[0]
        if not 0 <= a < n:
            raise ValueError(f"action {a} outside [0, {n})")
        by_n.setdefault(n, []).append(i)
    th4p, th4m = p.th4[:m], p.th4[m:]
    for n, idxs in sorted(by_n.items()):
        raw = [np.asarray(batch[i][0], dtype=np.float64) for i in idxs]
        orders = [_canonical_perm(item) for item in raw]
        f = np.stack([item[order] for item, order in zip(raw, orders)])
        # actions move to their row's canonical slot
        actions = np.array([int(np.flatnonzero(order == batch[i][1])[0])
                            for i, order in zip(idxs, orders)], dtype=np.int64)
        targets = np.array([batch[i][2] for i in idxs], dtype=np.float64)
        b = len(idxs)
        q, (h1, mu, pool_in, pooled) = _forward_batch(p, f)
        rows = np.arange(b)
        err = q[rows, actions] - targets
        loss += float(np.sum(err * err))
        dqa = 2.0 * err / total                          # (B,)
        mu_a = mu[rows, actions]                         # (B, m)
        grads.th4[:m] += dqa @ pooled
        grads.th4[m:] += dqa @ mu_a
        dz3 = (dqa[:, None] * th4p) * (pooled > 0)       # (B, m)
        grads.th3 += dz3.T @ pool_in
        dmu = np.broadcast_to((dz3 @ p.th3)[:, None, :] / n, mu.shape).copy()
        dmu[rows, actions] += dqa[:, None] * th4m
        dz2 = dmu * (mu > 0)
        grads.th2 += dz2.reshape(b * n, m).T @ h1.reshape(b * n, m)
        dz1 = (dz2 @ p.th2) * (h1 > 0)
        grads.th1 += dz1.reshape(b * n, m).T @ f.reshape(b * n, FEATURE_DIM)
    return loss / total, grads


@dataclass
class AdamState:
    step: int
    m1: tuple[np.ndarray, ...]
    v1: tuple[np.ndarray, ...]

    @classmethod
    def zeros(cls, p: QParams) -> "AdamState":
        return cls(0, tuple(np.zeros_like(a) for a in p.arrays()),
                   tuple(np.zeros_like(a) for a in p.arrays()))


def adam_step(p: QParams, g: Gradients, state: AdamState, lr: float,
              clip_norm: float = GRAD_CLIP_NORM) -> tuple[QParams, AdamState]:
    """One Adam update after clipping the global gradient norm."""
    garrs = list(g.arrays())
    norm = g.global_norm()
    if clip_norm is not None and norm > clip_norm:
        scale = clip_norm / norm
        garrs = [a * scale for a in garrs]
    t = state.step + 1
    new_m, new_v, new_p = [], [], []
    bias1 = 1.0 - ADAM_BETA1 ** t
    bias2 = 1.0 - ADAM_BETA2 ** t
    for param, grad, m1, v1 in zip(p.arrays(), garrs, state.m1, state.v1):
        m_new = ADAM_BETA1 * m1 + (1.0 - ADAM_BETA1) * grad
        v_new = ADAM_BETA2 * v1 + (1.0 - ADAM_BETA2) * grad * grad
        update = lr * (m_new / bias1) / (np.sqrt(v_new / bias2) + ADAM_EPS)
        new_m.append(m_new)
        new_v.append(v_new)
        new_p.append(param - update)
    return QParams(*new_p), AdamState(t, tuple(new_m), tuple(new_v))


def save(p: QParams, path) -> None:
    """Write a versioned little-endian checkpoint with a payload CRC."""
    payload = struct.pack("<III", CHECKPOINT_VERSION, p.m, FEATURE_DIM)
    for a in p.arrays():
        payload += np.ascontiguousarray(a, dtype="<f8").tobytes()
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(payload)
        f.write(struct.pack("<I", zlib.crc32(payload)))


def load(path) -> QParams:
    """Read a checkpoint written by :func:`save`, validating format."""
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < len(CHECKPOINT_MAGIC) + 12 + 4:
        raise ValueError(f"{path}: truncated checkpoint")
    if blob[:len(CHECKPOINT_MAGIC)] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: bad magic; not a checkpoint file")
    payload, (crc,) = blob[len(CHECKPOINT_MAGIC):-4], struct.unpack("<I", blob[-4:])
    if zlib.crc32(payload) != crc:
        raise ValueError(f"{path}: checksum mismatch; file corrupted")
    version, m, fdim = struct.unpack("<III", payload[:12])
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    if fdim != FEATURE_DIM:
        raise ValueError(f"{path}: feature dimension {fdim} does not match {FEATURE_DIM}")
    sizes = [(m, FEATURE_DIM), (m, m), (m, m), (2 * m,)]
    expected = 12 + 8 * sum(int(np.prod(s)) for s in sizes)
    if len(payload) != expected:
        raise ValueError(f"{path}: payload length {len(payload)} != expected {expected}")
    arrays = []
    offset = 12
    for shape in sizes:
        count = int(np.prod(shape))
        arr = np.frombuffer(payload, dtype="<f8", count=count, offset=offset)
        arrays.append(arr.astype(np.float64).reshape(shape))
        offset += 8 * count
    return QParams(*arrays)
