"""Step through the flip environment and watch the shaped reward.

An episode flips one element per step for 2k steps.  Rewards pay only
for improving on the best value seen so far, adds attempted at the
cardinality bound are penalized to zero, and the episode's answer is
the best feasible set observed, not the final one.
"""

import numpy as np

import flipmax as fm
from flipmax.env import FlipEnv, rollout, write_trace_csv

g = fm.gen_er(12, 0.3, fm.WeightScheme.SIGNED_UNIT, seed=34)
env = FlipEnv(fm.make_maxcut(g), k=4)

print(f"n = {env.n}, k = {env.k}, episode length = {env.episode_len}")
print(f"feature matrix shape: {env.features().shape} "
      "(membership, gain, age, feasible, distance-to-best)\n")

rng = np.random.default_rng(6)
while not env.done:
    action = int(rng.integers(env.n))
    reward, done = env.step(action)
    marker = " <- new best" if env.f_cur == env.f_best and reward > 0 else ""
    print(f"t={env.t:2d} flip {action:2d}  |V|={env.size}  "
          f"f={env.f_cur:+.2f}  best={env.f_best:+.2f}  r={reward:.4f}{marker}")

best_set, best_f = env.best()
print(f"\nbest feasible set: {best_set} with f = {best_f:.2f}")

# Traces export as CSV for debugging.
env.reset()
rows = rollout(env, lambda e: int(rng.integers(e.n)))
write_trace_csv(rows, "trace.csv")
print(f"wrote trace.csv with {len(rows)} rows")
