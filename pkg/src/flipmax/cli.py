"""Command-line entry point.

Subcommands: gen (synthetic datasets), train, eval (a checkpoint on
instances), bench (baselines vs model with a ratio table), sweep
(time/value curves over k), verify (small-instance brute-force audit).
Exit status: 0 success, 2 validation/usage error, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from . import qnet, trainer
from .graphs import (WeightScheme, gen_ba, gen_er, gen_ratings,
                     load_edge_list, load_node_weights, load_ratings,
                     save_edge_list, save_ratings)
from .rng import derive_seed
from .search import brute_force_opt
from .trainer import APPLICATIONS, TrainConfig

_SCHEMES = {s.value: s for s in WeightScheme}


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="run seed")
    parser.add_argument("--out-dir", default="out", help="output directory")
    parser.add_argument("--config", default=None,
                        help="config file (key=value or JSON); consumed by train")
    parser.add_argument("--timeout-secs", type=float,
                        default=bench_mod.DEFAULT_TIMEOUT_SECS,
                        help="per-method wall-clock ceiling")


def _instance_args(parser: argparse.ArgumentParser, require_k: bool = True) -> None:
    parser.add_argument("--app", required=True, choices=APPLICATIONS)
    parser.add_argument("--k", type=int, required=require_k, default=None)
    parser.add_argument("--graphs", default=None,
                        help="directory of .edges files to load as instances")
    parser.add_argument("--ratings", default=None,
                        help="ratings CSV (movrec only)")
    parser.add_argument("--directed", action="store_true",
                        help="treat loaded edge lists as directed")
    parser.add_argument("--node-weights", default=None,
                        help="optional 'node w' file for coverage costs")
    parser.add_argument("--reweight", choices=sorted(_SCHEMES), default=None,
                        help="redraw loaded edge weights from a scheme")
    parser.add_argument("--count", type=int, default=10,
                        help="synthetic instance count when --graphs is absent")
    parser.add_argument("--n", type=int, default=200)
    parser.add_argument("--kind", choices=["er", "ba"], default="er")
    parser.add_argument("--p", type=float, default=0.03, help="ER edge probability")
    parser.add_argument("--ba-m", type=int, default=4, help="BA attachment count")
    parser.add_argument("--episode-len", type=int, default=None)
    parser.add_argument("--movrec-lam", type=float, default=5.0)
    parser.add_argument("--maxcov-q", type=float, default=6.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flipmax", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate synthetic graphs or ratings")
    _common(p_gen)
    p_gen.add_argument("--kind", choices=["er", "ba", "ratings"], required=True)
    p_gen.add_argument("--n", type=int, default=40)
    p_gen.add_argument("--p", type=float, default=0.15)
    p_gen.add_argument("--ba-m", type=int, default=4)
    p_gen.add_argument("--weights", choices=sorted(_SCHEMES), default="unit")
    p_gen.add_argument("--count", type=int, default=1)
    p_gen.add_argument("--items", type=int, default=50)
    p_gen.add_argument("--users", type=int, default=20)
    p_gen.add_argument("--density", type=float, default=0.3)
    p_gen.set_defaults(func=cmd_gen)

    p_train = sub.add_parser("train", help="train the agent")
    _common(p_train)
    p_train.add_argument("--app", choices=APPLICATIONS, default=None)
    p_train.add_argument("--steps", type=int, default=None)
    p_train.add_argument("--k", type=int, default=None)
    p_train.add_argument("--n", type=int, default=None)
    p_train.add_argument("--p", type=float, default=None, dest="er_p")
    p_train.add_argument("--hidden", type=int, default=None)
    p_train.add_argument("--lr", type=float, default=None)
    p_train.add_argument("--verbose", action="store_true")
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint on instances")
    _common(p_eval)
    _instance_args(p_eval)
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.set_defaults(func=cmd_eval)

    p_bench = sub.add_parser("bench", help="run baselines (and optionally a model)")
    _common(p_bench)
    _instance_args(p_bench)
    p_bench.add_argument("--methods", default="greedy,greedy_rev,greedy_ls",
                         help="comma-separated baselines")
    p_bench.add_argument("--checkpoint", default=None,
                         help="include the model and emit a ratio table")
    p_bench.add_argument("--rls-lam-gain", type=float, default=1.0)
    p_bench.add_argument("--rls-lam-age", type=float, default=0.1)
    p_bench.set_defaults(func=cmd_bench)

    p_sweep = sub.add_parser("sweep", help="value/time curves over k")
    _common(p_sweep)
    _instance_args(p_sweep, require_k=False)
    p_sweep.add_argument("--k-list", default="25,50,100,200")
    p_sweep.add_argument("--methods", default="greedy,greedy_ls")
    p_sweep.add_argument("--checkpoint", default=None)
    p_sweep.set_defaults(func=cmd_sweep)

    p_verify = sub.add_parser("verify", help="audit all methods against brute force")
    _common(p_verify)
    p_verify.add_argument("--app", choices=APPLICATIONS, required=True)
    p_verify.add_argument("--n", type=int, default=10)
    p_verify.add_argument("--k", type=int, default=4)
    p_verify.add_argument("--trials", type=int, default=20)
    p_verify.add_argument("--p", type=float, default=0.3)
    p_verify.set_defaults(func=cmd_verify)
    return parser


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_gen(args) -> int:
    out = _out_dir(args)
    scheme = _SCHEMES[args.weights]
    manifest = {"kind": args.kind, "seed": args.seed, "files": {}}
    if args.kind == "ratings":
        m = gen_ratings(args.items, args.users, args.density, args.seed)
        path = out / "ratings.csv"
        save_ratings(m, path)
        manifest["files"][path.name] = m.content_hash()
    else:
        for i in range(args.count):
            seed_i = derive_seed(args.seed, bench_mod.STREAM_INSTANCE, i)
            if args.kind == "er":
                g = gen_er(args.n, args.p, scheme, seed_i)
                name = f"er_n{args.n}_p{args.p}_{args.weights}_{i:03d}.edges"
            else:
                g = gen_ba(args.n, args.ba_m, scheme, seed_i)
                name = f"ba_n{args.n}_m{args.ba_m}_{args.weights}_{i:03d}.edges"
            save_edge_list(g, out / name)
            manifest["files"][name] = g.content_hash()
    manifest["params"] = {k: v for k, v in vars(args).items()
                          if k not in ("func", "config")}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True),
                                       encoding="utf-8")
    print(f"wrote {len(manifest['files'])} file(s) to {out}")
    return 0


def cmd_train(args) -> int:
    cfg = trainer.load_config(args.config) if args.config else TrainConfig()
    overrides = {"seed": args.seed}
    if args.app is not None:
        overrides["app"] = args.app
    if args.steps is not None:
        overrides["total_steps"] = args.steps
    for name in ("k", "n", "er_p", "hidden", "lr"):
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    cfg = replace(cfg, **overrides)
    result = trainer.train(cfg, _out_dir(args), quiet=not args.verbose)
    print(f"checkpoint: {result.checkpoint}")
    print(f"log: {result.log}")
    print(f"episodes: {result.episodes}  mean_best_50: {result.mean_recent_best:.6g}")
    return 0


def _build_instances(args) -> tuple[list, str, dict[str, str]]:
    oracle_kw = {"movrec_lam": args.movrec_lam, "maxcov_q": args.maxcov_q}
    if args.ratings:
        if args.app != "movrec":
            raise ValueError("--ratings only applies to the movrec application")
        m = load_ratings(args.ratings)
        inst = bench_mod.make_oracle("movrec", m, **oracle_kw)
        return [inst], Path(args.ratings).stem, {Path(args.ratings).name: m.content_hash()}
    if args.graphs:
        reweight = _SCHEMES[args.reweight] if args.reweight else None
        paths = sorted(Path(args.graphs).glob("*.edges"))
        if not paths:
            raise ValueError(f"no .edges files under {args.graphs}")
        instances, hashes = [], {}
        for i, path in enumerate(paths):
            g = load_edge_list(path, directed=args.directed, reweight=reweight,
                               reweight_seed=derive_seed(args.seed, 7, i))
            hashes[path.name] = g.content_hash()
            node_w = (load_node_weights(args.node_weights, g.n)
                      if args.node_weights and args.app == "maxcov" else None)
            instances.append(bench_mod.make_oracle(
                args.app, g, seed=derive_seed(args.seed, 8, i),
                node_weights=node_w, **oracle_kw))
        dataset = Path(args.graphs).name
        if reweight:
            dataset += f"+rw-{args.reweight}"
        return instances, dataset, hashes
    instances = bench_mod.synth_instances(
        args.app, args.count, args.n, args.seed, kind=args.kind,
        er_p=args.p, ba_m=args.ba_m, **oracle_kw)
    dataset = (f"{args.kind}{args.n}" +
               (f"_p{args.p}" if args.kind == "er" else f"_m{args.ba_m}"))
    return instances, dataset, {"synthetic": dataset}


def _write_metadata(args, out: Path, dataset_hashes: dict, extra: dict) -> None:
    config = {k: v for k, v in vars(args).items() if k != "func"}
    config.update(extra)
    meta = bench_mod.run_metadata(args.seed, config, dataset_hashes)
    (out / "metadata.json").write_text(json.dumps(meta, indent=2, sort_keys=True),
                                       encoding="utf-8")


def cmd_eval(args) -> int:
    if not Path(args.checkpoint).exists():
        raise ValueError(f"checkpoint not found: {args.checkpoint}")
    params = qnet.load(args.checkpoint)
    out = _out_dir(args)
    instances, dataset, hashes = _build_instances(args)
    row = bench_mod.evaluate_model(params, instances, args.k, args.episode_len,
                                   args.app, dataset, args.seed)
    bench_mod.write_rows_csv([row], out / "eval_rows.csv")
    _write_metadata(args, out, hashes, {"checkpoint": str(args.checkpoint)})
    print(f"model on {dataset}: mean_f={row.mean_f:.6g} std={row.std_f:.6g} "
          f"mean_time={row.mean_time:.4g}s over {row.n_instances} instance(s)")
    print(f"rows: {out / 'eval_rows.csv'}")
    return 0


def cmd_bench(args) -> int:
    out = _out_dir(args)
    instances, dataset, hashes = _build_instances(args)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    rows = bench_mod.run_baselines(
        instances, args.k, methods, args.app, dataset, args.seed,
        rls_lam_gain=args.rls_lam_gain, rls_lam_age=args.rls_lam_age,
        timeout_secs=args.timeout_secs)
    extra = {}
    if args.checkpoint:
        if not Path(args.checkpoint).exists():
            raise ValueError(f"checkpoint not found: {args.checkpoint}")
        params = qnet.load(args.checkpoint)
        model_row = bench_mod.evaluate_model(params, instances, args.k,
                                             args.episode_len, args.app,
                                             dataset, args.seed)
        rows.append(model_row)
        md, csv_text = bench_mod.ratio_table([model_row],
                                             [r for r in rows if r.method != "model"])
        (out / "ratio_table.md").write_text(md, encoding="utf-8")
        (out / "ratio_table.csv").write_text(csv_text, encoding="utf-8")
        extra["checkpoint"] = str(args.checkpoint)
        print(md)
    bench_mod.write_rows_csv(rows, out / "bench_rows.csv")
    _write_metadata(args, out, hashes, extra)
    for row in rows:
        shown = "-" if row.mean_f is None else f"{row.mean_f:.6g}"
        print(f"{row.method:>10}: mean_f={shown} mean_time={row.mean_time:.4g}s "
              f"queries={row.mean_queries:.0f}")
    print(f"rows: {out / 'bench_rows.csv'}")
    return 0


def cmd_sweep(args) -> int:
    out = _out_dir(args)
    instances, dataset, hashes = _build_instances(args)
    k_list = [int(v) for v in args.k_list.split(",") if v.strip()]
    if any(k > instances[0].n for k in k_list):
        raise ValueError("every k must be at most n")
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    params = None
    if "model" in methods:
        if not args.checkpoint or not Path(args.checkpoint).exists():
            raise ValueError("sweep over 'model' needs an existing --checkpoint")
        params = qnet.load(args.checkpoint)
    rows = bench_mod.sweep_k(instances, methods, k_list, args.app, dataset,
                             args.seed, model_params=params,
                             episode_len=args.episode_len,
                             timeout_secs=args.timeout_secs)
    bench_mod.write_rows_csv(rows, out / "sweep.csv")
    _write_metadata(args, out, hashes, {"k_list": k_list})
    print(f"rows: {out / 'sweep.csv'}")
    return 0


def cmd_verify(args) -> int:
    if args.n > 24:
        raise ValueError("verification enumerates subsets; need n <= 24")
    methods = ["greedy", "greedy_rev", "greedy_ls", "rls"]
    instances = bench_mod.synth_instances(args.app, args.trials, args.n,
                                          args.seed, kind="er", er_p=args.p)
    ratios = {m: [] for m in methods}
    for inst in instances:
        opt = brute_force_opt(inst.clone(), args.k)
        rows = bench_mod.run_baselines([inst], args.k, methods,
                                       args.app, "verify", args.seed)
        for row in rows:
            if row.values[0] > opt.f + 1e-9 * max(1.0, abs(opt.f)):
                raise RuntimeError(f"{row.method} beat the exhaustive optimum")
            ratios[row.method].append(
                row.values[0] / opt.f if opt.f != 0 else float("nan"))
    print(f"{args.app}: method / optimum value ratio over "
          f"{args.trials} instances (n={args.n}, k={args.k})")
    for method in methods:
        arr = np.array(ratios[method])
        finite = arr[np.isfinite(arr)]
        mean = float(np.mean(finite)) if finite.size else float("nan")
        print(f"{method:>10}: mean ratio {mean:.4f}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
