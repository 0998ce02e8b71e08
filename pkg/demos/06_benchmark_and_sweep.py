"""Produce a ratio table and a budget sweep like the benchmark harness.

Uses an untrained network so it runs instantly; swap in a trained
checkpoint (demos/05 or the CLI) for meaningful model rows.
"""

import numpy as np

from flipmax import qnet
from flipmax.bench import (evaluate_model, ratio_table, run_baselines,
                           sweep_k, synth_instances, write_rows_csv)

instances = synth_instances("maxcov", 20, 30, seed=5, er_p=0.2)
k = 8

baseline_rows = run_baselines(instances, k, ["greedy", "greedy_rev", "greedy_ls"],
                              application="maxcov", dataset="er30")
params = qnet.init_params(m=64, seed=0)  # untrained stand-in
model_row = evaluate_model(params, instances, k, application="maxcov",
                           dataset="er30")

for row in baseline_rows + [model_row]:
    print(f"{row.method:>11}: mean f = {row.mean_f:8.3f}  "
          f"time/instance = {row.mean_time * 1e3:7.2f} ms  "
          f"queries = {row.mean_queries:8.0f}")

md, csv_text = ratio_table([model_row], baseline_rows)
print("\n" + md)

write_rows_csv(baseline_rows + [model_row], "bench_rows.csv")
print("wrote bench_rows.csv")

# Value/time curves over the budget k, one row per (method, k).
sweep_rows = sweep_k(instances[:5], ["greedy", "greedy_ls"], [4, 8, 12, 16],
                     application="maxcov", dataset="er30")
print("\nsweep over k:")
for row in sweep_rows:
    print(f"  k={row.k:2d} {row.method:>10}: f = {row.mean_f:8.3f}  "
          f"time = {row.mean_time * 1e3:7.2f} ms")
write_rows_csv(sweep_rows, "sweep_rows.csv")
print("wrote sweep_rows.csv")
