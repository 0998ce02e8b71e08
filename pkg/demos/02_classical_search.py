"""Compare greedy, reversible variants, and brute force on one instance.

Small enough that exhaustive enumeration gives the true optimum, so the
heuristics can be scored as a fraction of it.
"""

import flipmax as fm
from flipmax.search import (brute_force_opt, greedy, greedy_ls, greedy_rev,
                            reversible_local_search)

g = fm.gen_er(14, 0.3, fm.WeightScheme.SIGNED_UNIT, seed=21)
oracle = fm.make_maxcut(g)
k = 5

opt = brute_force_opt(oracle.clone(), k)
print(f"exhaustive optimum over subsets of size <= {k}: f = {opt.f:.3f}  V = {opt.V}")
print(f"(checked every subset with {opt.queries} oracle calls)\n")

for name, run in [
    ("greedy", lambda o: greedy(o, k)),
    ("greedy_rev", lambda o: greedy_rev(o, k)),
    ("greedy_ls", lambda o: greedy_ls(o, k)),
    ("reversible", lambda o: reversible_local_search(o, k, 1.0, 0.1)[0]),
]:
    sol = run(oracle.clone())
    print(f"{name:>11}: f = {sol.f:7.3f}  ({sol.f / opt.f:.3f} of optimum)  "
          f"|V| = {len(sol.V)}  queries = {sol.queries}")

# The reversible search exposes its per-step decisions for inspection.
sol, trace = reversible_local_search(oracle.clone(), k, 1.0, 0.1, collect_trace=True)
print(f"\nreversible search made {len(trace)} moves (2k); first five:")
for step in trace[:5]:
    kind = "evict" if step.evicted else "flip"
    print(f"  t={step.t}: {kind} element {step.applied} "
          f"(gain {step.deltas[step.applied]:+.3f}, age {step.ages[step.applied]:.0f})")
