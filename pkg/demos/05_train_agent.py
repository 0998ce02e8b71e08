"""Train a small agent on cut instances and evaluate it against greedy.

This is a miniature of the full recipe (the real run uses n=40, k=30,
and hundreds of thousands of steps; see the README): every episode
draws a fresh signed random graph, behavior is epsilon-greedy, and
learning follows the double-Q rule with a periodically synced target.
"""

from flipmax.bench import evaluate_model, run_baselines, synth_instances
from flipmax.trainer import TrainConfig, train

cfg = TrainConfig(
    total_steps=20_000,   # a couple of minutes on one core
    app="maxcut",
    n=20,
    k=8,
    hidden=32,
    warmup=500,
    seed=3,
)

result = train(cfg, "runs/demo", quiet=False)
print(f"\ncheckpoint: {result.checkpoint}")
print(f"step log:   {result.log}")
print(f"mean best value over the last 50 training episodes: "
      f"{result.mean_recent_best:.3f}")

held_out = synth_instances("maxcut", 25, cfg.n, seed=999, er_p=cfg.er_p)
model_row = evaluate_model(result.params, held_out, k=cfg.k)
greedy_row = run_baselines(held_out, cfg.k, ["greedy"])[0]
print(f"\nheld-out instances: model {model_row.mean_f:.3f} "
      f"vs greedy {greedy_row.mean_f:.3f} "
      f"(ratio {model_row.mean_f / greedy_row.mean_f:.3f})")
