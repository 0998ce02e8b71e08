"""Inspect the scoring network: exact symmetries and verified gradients.

The network is two bias-free feed-forward layers per element plus a
mean-pooled readout, all in float64 with hand-written backpropagation.
"""

import numpy as np

from flipmax import qnet
from flipmax.rng import make_rng

rng = make_rng(0)
params = qnet.init_params(m=16, seed=1)
features = rng.normal(size=(8, 5))

q = qnet.forward(params, features)
print("Q-values:", np.round(q, 4))

# Exact symmetries, not approximate ones:
perm = rng.permutation(8)
assert np.array_equal(qnet.forward(params, features[perm]), q[perm])
print("permutation equivariance: exact")
assert np.all(qnet.forward(params, np.zeros((8, 5))) == 0.0)
print("zero input -> zero output: exact (no bias terms anywhere)")

# Analytic gradients against central finite differences:
batch = [(features, 2, 0.5), (rng.normal(size=(5, 5)), 0, -0.1)]
loss, grads = qnet.loss_and_grad(params, batch)
print(f"\nbatch loss: {loss:.6f}")

h = 1e-6
worst = 0.0
for arr, g_arr in zip(params.arrays(), grads.arrays()):
    it = np.nditer(arr, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = arr[idx]
        arr[idx] = orig + h
        up, _ = qnet.loss_and_grad(params, batch)
        arr[idx] = orig - h
        down, _ = qnet.loss_and_grad(params, batch)
        arr[idx] = orig
        fd = (up - down) / (2 * h)
        worst = max(worst, abs(fd - g_arr[idx]) / max(abs(fd), abs(g_arr[idx]), 1e-4))
print(f"worst gradient error vs finite differences: {worst:.2e}")

# Checkpoints round-trip bit for bit.
qnet.save(params, "demo_model.ckpt")
assert qnet.load("demo_model.ckpt") == params
print("checkpoint round trip: bit-exact (demo_model.ckpt)")
