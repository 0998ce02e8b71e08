"""flipmax: cardinality-constrained set-function maximization.

A numpy library for maximizing set functions under a size bound with
reversible (flip-based) local search: four application objectives with
incremental gain oracles, classical greedy and local-search baselines,
an episodic flip environment, a small bias-free Q-network trained with
double Q-learning, and a benchmark harness.
"""

__version__ = "0.1.0"

from .graphs import (Graph, RatingsMatrix, WeightScheme, gen_ba, gen_er,
                     gen_ratings, load_edge_list, load_node_weights,
                     load_ratings, save_edge_list, save_ratings)
from .objectives import (InfExpOracle, MaxCovOracle, MaxCutOracle,
                         MovRecOracle, Oracle, make_infexp, make_maxcov,
                         make_maxcut, make_movrec, make_movrec_from_graph)
from .search import (Solution, brute_force_opt, greedy, greedy_ls, greedy_rev,
                     reversible_local_search)
from .env import FlipEnv, rollout, write_trace_csv
from .qnet import (AdamState, Gradients, QParams, adam_step, forward,
                   forward_many, init_params, load, loss_and_grad, save)
from .trainer import (ReplayBuffer, TrainConfig, Transition, compute_targets,
                      epsilon, load_config, train, training_oracle)
from .bench import (BenchRow, evaluate_model, make_oracle, q_policy,
                    ratio_table, run_baselines, sweep_k, synth_instances,
                    write_rows_csv)
