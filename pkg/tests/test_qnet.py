import numpy as np
import pytest

from flipmax import qnet
from flipmax.rng import make_rng


def reference_forward(p, features):
    """Straight-line scalar recomputation of the network, loops only."""
    n = len(features)
    m = p.m
    mu = []
    for e in range(n):
        h1 = [max(sum(p.th1[i][j] * features[e][j] for j in range(5)), 0.0)
              for i in range(m)]
        mu.append([max(sum(p.th2[i][j] * h1[j] for j in range(m)), 0.0)
                   for i in range(m)])
    pool = [sum(mu[e][i] for e in range(n)) / n for i in range(m)]
    pooled = [max(sum(p.th3[i][j] * pool[j] for j in range(m)), 0.0)
              for i in range(m)]
    shared = sum(p.th4[i] * pooled[i] for i in range(m))
    return [shared + sum(p.th4[m + i] * mu[e][i] for i in range(m))
            for e in range(n)]


def finite_difference(p, batch, h=1e-6):
    fds = []
    for arr in p.arrays():
        fd = np.zeros_like(arr)
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = arr[idx]
            arr[idx] = orig + h
            lp, _ = qnet.loss_and_grad(p, batch)
            arr[idx] = orig - h
            lm, _ = qnet.loss_and_grad(p, batch)
            arr[idx] = orig
            fd[idx] = (lp - lm) / (2 * h)
        fds.append(fd)
    return fds


def grad_close(analytic, fd, rel=1e-4, floor=1e-6):
    scale = max(abs(analytic), abs(fd))
    if scale < floor:
        return abs(analytic - fd) < floor
    return abs(analytic - fd) / scale < rel


class TestInit:
    def test_deterministic(self):
        assert qnet.init_params(8, 3) == qnet.init_params(8, 3)

    def test_glorot_bounds_per_matrix(self):
        p = qnet.init_params(16, 5)
        bounds = {
            "th1": np.sqrt(6.0 / (5 + 16)),
            "th2": np.sqrt(6.0 / 32),
            "th3": np.sqrt(6.0 / 32),
            "th4": np.sqrt(6.0 / 33),
        }
        for name, arr in zip(("th1", "th2", "th3", "th4"), p.arrays()):
            assert np.all(np.abs(arr) <= bounds[name])

    def test_default_width_readout_length(self):
        assert qnet.init_params(64, 0).th4.shape == (128,)

    def test_zero_width_rejected(self):
        with pytest.raises(ValueError):
            qnet.init_params(0, 0)


class TestForward:
    def test_zero_input_zero_output(self):
        p = qnet.init_params(12, 1)
        assert np.all(qnet.forward(p, np.zeros((9, 5))) == 0.0)

    def test_permutation_equivariance_exact(self):
        rng = make_rng(2)
        for trial in range(20):
            p = qnet.init_params(int(rng.integers(2, 10)), trial)
            f = rng.normal(size=(int(rng.integers(2, 12)), 5))
            perm = rng.permutation(f.shape[0])
            assert np.array_equal(qnet.forward(p, f)[perm], qnet.forward(p, f[perm]))

    def test_matches_straight_line_recomputation(self):
        rng = make_rng(4)
        for trial in range(10):
            p = qnet.init_params(3, 100 + trial)
            f = rng.normal(size=(int(rng.integers(1, 4)), 5))
            q = qnet.forward(p, f)
            ref = reference_forward(p, f.tolist())
            assert np.allclose(q, ref, rtol=1e-12, atol=1e-12)

    def test_dimension_mismatch(self):
        p = qnet.init_params(4, 0)
        with pytest.raises(ValueError):
            qnet.forward(p, np.zeros((3, 4)))

    def test_forward_many_matches_forward(self):
        # batched BLAS kernels may round the shared dot products a couple
        # of ulp differently from the single-matrix path
        rng = make_rng(6)
        p = qnet.init_params(5, 9)
        stack = rng.normal(size=(4, 7, 5))
        q = qnet.forward_many(p, stack)
        for b in range(4):
            assert np.allclose(q[b], qnet.forward(p, stack[b]), rtol=1e-12, atol=1e-14)

    def test_duplicate_row_shifts_only_pooled_mean(self):
        p = qnet.init_params(6, 10)
        rng = make_rng(11)
        f = rng.normal(size=(5, 5))
        f2 = np.vstack([f, f[2]])
        q1, q2 = qnet.forward(p, f), qnet.forward(p, f2)
        # per-element contribution is unchanged; only the shared term moves
        diff = q2[:5] - q1
        assert np.allclose(diff, diff[0], rtol=0, atol=1e-12)


class TestLossAndGrad:
    def test_perfect_targets_give_zero(self):
        p = qnet.init_params(5, 1)
        rng = make_rng(2)
        f = rng.normal(size=(6, 5))
        q = qnet.forward(p, f)
        loss, grads = qnet.loss_and_grad(p, [(f, 2, float(q[2]))])
        assert loss == 0.0
        assert all(np.all(a == 0.0) for a in grads.arrays())

    def test_gradients_match_finite_differences(self):
        rng = make_rng(3)
        for trial in range(8):
            p = qnet.init_params(int(rng.integers(2, 5)), 50 + trial)
            batch = []
            for _ in range(int(rng.integers(1, 4))):
                n = int(rng.integers(1, 7))
                f = rng.normal(size=(n, 5))
                batch.append((f, int(rng.integers(n)), float(rng.normal())))
            _, grads = qnet.loss_and_grad(p, batch)
            for analytic, fd in zip(grads.arrays(), finite_difference(p, batch)):
                for a, b in zip(analytic.ravel(), fd.ravel()):
                    assert grad_close(a, b)

    def test_duplicated_batch_is_invariant(self):
        rng = make_rng(5)
        p = qnet.init_params(4, 7)
        batch = [(rng.normal(size=(5, 5)), 1, 0.3), (rng.normal(size=(3, 5)), 0, -0.2)]
        l1, g1 = qnet.loss_and_grad(p, batch)
        l2, g2 = qnet.loss_and_grad(p, batch + batch)
        assert l1 == pytest.approx(l2, rel=1e-12)
        for a, b in zip(g1.arrays(), g2.arrays()):
            assert np.allclose(a, b, rtol=1e-12, atol=1e-15)

    def test_mixed_sizes_in_one_batch(self):
        rng = make_rng(8)
        p = qnet.init_params(4, 9)
        batch = [(rng.normal(size=(n, 5)), 0, 0.1) for n in (2, 5, 2, 7)]
        loss, _ = qnet.loss_and_grad(p, batch)
        per_item = [qnet.loss_and_grad(p, [item])[0] for item in batch]
        assert loss == pytest.approx(float(np.mean(per_item)), rel=1e-12)

    def test_empty_batch_rejected(self):
        with pytest.raises(ValueError):
            qnet.loss_and_grad(qnet.init_params(2, 0), [])

    def test_action_out_of_range(self):
        p = qnet.init_params(2, 0)
        with pytest.raises(ValueError):
            qnet.loss_and_grad(p, [(np.zeros((3, 5)), 3, 0.0)])


class TestAdam:
    def test_zero_gradient_keeps_params(self):
        p = qnet.init_params(3, 1)
        g = qnet.Gradients(*(np.zeros_like(a) for a in p.arrays()))
        p2, state = qnet.adam_step(p, g, qnet.AdamState.zeros(p), lr=0.01)
        assert p2 == p
        assert state.step == 1

    def test_first_step_matches_hand_formula(self):
        p = qnet.init_params(2, 2)
        rng = make_rng(3)
        garrs = [rng.normal(size=a.shape) for a in p.arrays()]
        norm = np.sqrt(sum(np.sum(a * a) for a in garrs))
        garrs = [a / (norm * 2.0) for a in garrs]  # keep below the clip
        g = qnet.Gradients(*garrs)
        p2, _ = qnet.adam_step(p, g, qnet.AdamState.zeros(p), lr=0.05)
        for before, grad, after in zip(p.arrays(), g.arrays(), p2.arrays()):
            expected = before - 0.05 * grad / (np.abs(grad) + 1e-8)
            assert np.allclose(after, expected, rtol=1e-9, atol=1e-12)

    def test_clipping_scales_large_gradients(self):
        p = qnet.init_params(2, 4)
        rng = make_rng(5)
        garrs = [rng.normal(size=a.shape) for a in p.arrays()]
        norm = np.sqrt(sum(np.sum(a * a) for a in garrs))
        big = qnet.Gradients(*(a * (10.0 / norm) for a in garrs))  # norm 10
        scaled = qnet.Gradients(*(a.copy() * (1.0 / 10.0) for a in big.arrays()))
        p_big, _ = qnet.adam_step(p, big, qnet.AdamState.zeros(p), lr=0.01)
        p_ref, _ = qnet.adam_step(p, scaled, qnet.AdamState.zeros(p), lr=0.01,
                                  clip_norm=None)
        for a, b in zip(p_big.arrays(), p_ref.arrays()):
            assert np.allclose(a, b, rtol=1e-12, atol=1e-15)


class TestSerialization:
    def test_round_trip_bit_exact(self, tmp_path):
        p = qnet.init_params(17, 23)
        path = tmp_path / "model.ckpt"
        qnet.save(p, path)
        assert qnet.load(path) == p

    def test_file_size_for_default_width(self, tmp_path):
        p = qnet.init_params(64, 0)
        path = tmp_path / "model.ckpt"
        qnet.save(p, path)
        n_params = 64 * 5 + 64 * 64 + 64 * 64 + 128
        assert path.stat().st_size == 8 + 12 + 8 * n_params + 4

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "model.ckpt"
        qnet.save(qnet.init_params(4, 0), path)
        blob = bytearray(path.read_bytes())
        blob[:8] = b"NOTAMODL"
        path.write_bytes(bytes(blob))
        with pytest.raises(ValueError, match="magic"):
            qnet.load(path)

    def test_truncated_file(self, tmp_path):
        path = tmp_path / "model.ckpt"
        qnet.save(qnet.init_params(4, 0), path)
        path.write_bytes(path.read_bytes()[:10])
        with pytest.raises(ValueError, match="truncated"):
            qnet.load(path)

    def test_corrupted_payload_fails_crc(self, tmp_path):
        path = tmp_path / "model.ckpt"
        qnet.save(qnet.init_params(4, 0), path)
        blob = bytearray(path.read_bytes())
        blob[40] ^= 0xFF
        path.write_bytes(bytes(blob))
        with pytest.raises(ValueError, match="checksum"):
            qnet.load(path)

    def test_feature_dimension_mismatch_rejected(self, tmp_path):
        import struct, zlib
        payload = struct.pack("<III", 1, 4, 7)  # claims 7 features
        payload += b"\x00" * (8 * (4 * 7 + 16 + 16 + 8))
        path = tmp_path / "model.ckpt"
        path.write_bytes(qnet.CHECKPOINT_MAGIC + payload +
                         struct.pack("<I", zlib.crc32(payload)))
        with pytest.raises(ValueError, match="feature dimension"):
            qnet.load(path)

    def test_version_mismatch_rejected(self, tmp_path):
        import struct, zlib
        payload = struct.pack("<III", 9, 4, 5)
        payload += b"\x00" * (8 * (4 * 5 + 16 + 16 + 8))
        path = tmp_path / "model.ckpt"
        path.write_bytes(qnet.CHECKPOINT_MAGIC + payload +
                         struct.pack("<I", zlib.crc32(payload)))
        with pytest.raises(ValueError, match="version"):
            qnet.load(path)
