"""Benchmark harness: model evaluation, baselines, tables, and sweeps.

Every reported objective value is re-validated with a from-scratch
oracle evaluation before it is written anywhere, and each run carries
enough metadata (config hash, seeds, dataset hashes, code version) to
be reproduced exactly.  Instances execute serially; per-instance seeds
are derived from the run seed, so a future parallel runner would
produce identical numbers.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import qnet
from .env import FlipEnv
from .graphs import Graph, RatingsMatrix, WeightScheme, gen_ba, gen_er
from .objectives import (Oracle, make_infexp, make_maxcov, make_maxcut,
                         make_movrec, make_movrec_from_graph)
from .search import (Solution, brute_force_opt, greedy, greedy_ls, greedy_rev,
                     reversible_local_search)
from .rng import derive_seed
from .trainer import APPLICATIONS

STREAM_INSTANCE = 11

BASELINE_METHODS = ("greedy", "greedy_rev", "greedy_ls", "rls", "brute")
DEFAULT_TIMEOUT_SECS = 24 * 3600.0


def config_hash(obj) -> str:
    """Short stable hash of any JSON-serializable configuration."""
    blob = json.dumps(obj, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def make_oracle(app: str, data, seed: int = 0, movrec_lam: float = 5.0,
                maxcov_q: float = 6.0, infexp_shape: float = 2.0,
                infexp_scale: float = 1.0, node_weights=None) -> Oracle:
    """Build the oracle for `app` on a Graph or RatingsMatrix."""
    if app not in APPLICATIONS:
        raise ValueError(f"unknown application {app!r}")
    if app == "movrec":
        if isinstance(data, RatingsMatrix):
            return make_movrec(data, lam=movrec_lam)
        return make_movrec_from_graph(data, lam=movrec_lam)
    if not isinstance(data, Graph):
        raise ValueError(f"{app} requires a graph instance")
    if app == "maxcut":
        return make_maxcut(data)
    if app == "maxcov":
        return make_maxcov(data if data.directed else data.to_directed(),
                           q=maxcov_q, node_weights=node_weights)
    return make_infexp(data, shape=infexp_shape, scale=infexp_scale, seed=seed)


def default_scheme(app: str) -> WeightScheme:
    return {"maxcut": WeightScheme.SIGNED_UNIT,
            "maxcov": WeightScheme.UNIT,
            "movrec": WeightScheme.UNIFORM_REAL,
            "infexp": WeightScheme.UNIFORM_REAL}[app]


def synth_instances(app: str, count: int, n: int, seed: int,
                    kind: str = "er", er_p: float = 0.15, ba_m: int = 4,
                    scheme: WeightScheme | None = None, **oracle_kw) -> list[Oracle]:
    """Generate `count` synthetic oracles with per-instance derived seeds."""
    scheme = scheme or default_scheme(app)
    out = []
    for i in range(count):
        g_seed = derive_seed(seed, STREAM_INSTANCE, 2 * i)
        o_seed = derive_seed(seed, STREAM_INSTANCE, 2 * i + 1)
        if kind == "er":
            g = gen_er(n, er_p, scheme, g_seed)
        elif kind == "ba":
            g = gen_ba(n, ba_m, scheme, g_seed)
        else:
            raise ValueError(f"unknown graph kind {kind!r}")
        out.append(make_oracle(app, g, seed=o_seed, **oracle_kw))
    return out


@dataclass
class BenchRow:
    """Aggregate result of one method on one matched instance batch."""

    application: str
    dataset: str
    k: int
    method: str
    n_instances: int
    mean_f: float | None
    std_f: float | None
    mean_time: float
    mean_queries: float
    mean_size: float
    timed_out: bool
    seed: int
    config_hash: str
    values: list[float] = field(default_factory=list, repr=False)
    times: list[float] = field(default_factory=list, repr=False)
    sizes: list[int] = field(default_factory=list, repr=False)

    CSV_FIELDS = ["application", "dataset", "k", "method", "n_instances",
                  "mean_f", "std_f", "mean_time", "mean_queries", "mean_size",
                  "timed_out", "seed", "config_hash"]

    def csv_values(self) -> list:
        fmt = lambda v: "" if v is None else repr(float(v))
        return [self.application, self.dataset, self.k, self.method,
                self.n_instances, fmt(self.mean_f), fmt(self.std_f),
                fmt(self.mean_time), fmt(self.mean_queries), fmt(self.mean_size),
                int(self.timed_out), self.seed, self.config_hash]


def _aggregate(application, dataset, k, method, values, times, queries, sizes,
               timed_out, seed, cfg_hash) -> BenchRow:
    done = len(values)
    return BenchRow(
        application=application, dataset=dataset, k=k, method=method,
        n_instances=done,
        mean_f=None if timed_out else float(np.mean(values)) if values else None,
        std_f=None if timed_out or not values else float(np.std(values)),
        mean_time=float(np.mean(times)) if times else 0.0,
        mean_queries=float(np.mean(queries)) if queries else 0.0,
        mean_size=float(np.mean(sizes)) if sizes else 0.0,
        timed_out=timed_out, seed=seed, config_hash=cfg_hash,
        values=list(values), times=list(times), sizes=list(sizes))


def _validated_value(oracle: Oracle, sol_set, claimed: float) -> float:
    actual = oracle.value(sol_set)
    if abs(actual - claimed) > 1e-9 * max(1.0, abs(actual)):
        raise RuntimeError(
            f"reported value {claimed!r} disagrees with recomputation {actual!r}")
    return actual


def q_policy(params: qnet.QParams):
    """Greedy policy over network scores; ties go to the lowest element."""

    def policy(env: FlipEnv) -> int:
        return int(np.argmax(qnet.forward(params, env.features())))

    return policy


def evaluate_model(params, instances: list[Oracle], k: int,
                   episode_len: int | None = None, application: str = "",
                   dataset: str = "", seed: int = 0) -> BenchRow:
    """One greedy-policy episode per instance; reports best feasible values.

    `params` is a QParams or a checkpoint path.  Timing covers the episode
    loop only (checkpoint loading and instance construction are excluded);
    query counts come from the oracle.
    """
    if not isinstance(params, qnet.QParams):
        params = qnet.load(params)
    policy = q_policy(params)
    values, times, queries, sizes = [], [], [], []
    for inst in instances:
        oracle = inst.clone()
        q0 = oracle.queries
        t0 = time.perf_counter()
        env = FlipEnv(oracle, k, episode_len)
        while not env.done:
            env.step(policy(env))
        best_set, best_f = env.best()
        elapsed = time.perf_counter() - t0
        if len(best_set) > k:
            raise RuntimeError("best set exceeds the cardinality bound")
        values.append(_validated_value(oracle, best_set, best_f))
        times.append(elapsed)
        queries.append(oracle.queries - q0)
        sizes.append(len(best_set))
    cfg = {"k": k, "episode_len": episode_len, "m": params.m, "seed": seed}
    return _aggregate(application or getattr(instances[0], "name", ""), dataset,
                      k, "model", values, times, queries, sizes, False, seed,
                      config_hash(cfg))


def run_baselines(instances: list[Oracle], k: int, methods, application: str = "",
                  dataset: str = "", seed: int = 0,
                  rls_lam_gain: float = 1.0, rls_lam_age: float = 0.1,
                  greedy_ls_eps: float = 0.0,
                  timeout_secs: float = DEFAULT_TIMEOUT_SECS) -> list[BenchRow]:
    """Run each baseline over the instance batch with a per-method timeout."""
    rows = []
    for method in methods:
        if method not in BASELINE_METHODS:
            raise ValueError(f"unknown method {method!r}; choose from {BASELINE_METHODS}")
        values, times, queries, sizes = [], [], [], []
        timed_out = False
        spent = 0.0
        for inst in instances:
            oracle = inst.clone()
            sol = _run_method(method, oracle, k, rls_lam_gain, rls_lam_age,
                              greedy_ls_eps)
            values.append(_validated_value(oracle, sol.V, sol.f))
            times.append(sol.wall_time)
            queries.append(sol.queries)
            sizes.append(len(sol.V))
            spent += sol.wall_time
            if spent > timeout_secs:
                timed_out = True
                break
        cfg = {"k": k, "method": method, "rls": [rls_lam_gain, rls_lam_age],
               "eps": greedy_ls_eps, "timeout": timeout_secs, "seed": seed}
        rows.append(_aggregate(application, dataset, k, method, values, times,
                               queries, sizes, timed_out, seed, config_hash(cfg)))
    return rows


def _run_method(method: str, oracle: Oracle, k: int, lam_gain: float,
                lam_age: float, ls_eps: float) -> Solution:
    if method == "greedy":
        return greedy(oracle, k)
    if method == "greedy_rev":
        return greedy_rev(oracle, k)
    if method == "greedy_ls":
        return greedy_ls(oracle, k, eps=ls_eps)
    if method == "rls":
        return reversible_local_search(oracle, k, lam_gain, lam_age)[0]
    return brute_force_opt(oracle, k)


def ratio_table(model_rows: list[BenchRow], baseline_rows: list[BenchRow]
                ) -> tuple[str, str]:
    """Model-over-baseline ratios of mean values, as (markdown, csv) text.

    Rows are matched on (application, dataset, k).  A timed-out baseline
    renders "-"; a zero baseline mean renders "n/a".  The output is a
    pure function of the input rows.
    """
    by_key: dict[tuple, dict[str, BenchRow]] = {}
    for row in baseline_rows:
        by_key.setdefault((row.application, row.dataset, row.k), {})[row.method] = row
    methods = sorted({r.method for r in baseline_rows})
    md = ["| Application | Dataset | k | " +
          " | ".join(f"model/{m}" for m in methods) + " |",
          "|---" * (3 + len(methods)) + "|"]
    csv_lines = ["application,dataset,k,baseline,ratio"]
    for model in sorted(model_rows, key=lambda r: (r.application, r.dataset, r.k)):
        key = (model.application, model.dataset, model.k)
        cells = []
        for m in methods:
            base = by_key.get(key, {}).get(m)
            cell = _ratio_cell(model, base)
            cells.append(cell)
            csv_lines.append(f"{key[0]},{key[1]},{key[2]},{m},{cell}")
        md.append(f"| {key[0]} | {key[1]} | {key[2]} | " + " | ".join(cells) + " |")
    md.append("")
    md.append("Each cell is mean(model values) / mean(baseline values); "
              "'-' marks a timed-out baseline, 'n/a' a zero baseline mean.")
    return "\n".join(md) + "\n", "\n".join(csv_lines) + "\n"


def _ratio_cell(model: BenchRow, base: BenchRow | None) -> str:
    if base is None or base.timed_out or base.mean_f is None or model.mean_f is None:
        return "-"
    if base.mean_f == 0.0:
        return "n/a"
    return f"{model.mean_f / base.mean_f:.3f}"


def sweep_k(instances: list[Oracle], methods, k_list, application: str = "",
            dataset: str = "", seed: int = 0, model_params=None,
            episode_len: int | None = None,
            timeout_secs: float = DEFAULT_TIMEOUT_SECS,
            rls_lam_gain: float = 1.0, rls_lam_age: float = 0.1) -> list[BenchRow]:
    """Run every (method, k) pair; one aggregate row each."""
    rows = []
    for k in k_list:
        for method in methods:
            if method == "model":
                if model_params is None:
                    raise ValueError("sweep over 'model' needs model_params")
                rows.append(evaluate_model(model_params, instances, k,
                                           episode_len, application, dataset, seed))
            else:
                rows.extend(run_baselines(instances, k, [method], application,
                                          dataset, seed, rls_lam_gain,
                                          rls_lam_age, timeout_secs=timeout_secs))
    return rows


def write_rows_csv(rows: list[BenchRow], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write(",".join(BenchRow.CSV_FIELDS) + "\n")
        for row in rows:
            f.write(",".join(str(v) for v in row.csv_values()) + "\n")


def run_metadata(seed: int, config: dict, dataset_hashes: dict[str, str]) -> dict:
    from . import __version__
    return {"seed": seed, "config": config, "config_hash": config_hash(config),
            "dataset_hashes": dataset_hashes, "code_version": __version__}
