"""Command-line entry point: simulate, train, evaluate, sweep, bench, rmps.

Every file-producing subcommand writes a run manifest next to its output
(``<out>.manifest.json``) holding the resolved config, input/output paths,
seeds, tool version and a config hash; outputs embed the manifest hash.
Manifests contain no timestamps, so identical invocations reproduce
byte-identical non-timing outputs.

Exit codes: 0 ok, 2 usage, 3 missing input, 4 config/parse error,
5 infeasible budget, 6 training diverged.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys

from . import __version__, bench, complexity as cx, search
from .errors import (AllTrialsDivergedError, ConfigError, DatasetError,
                     InfeasibleBudgetError, TrainingDivergedError)
from .neural import (ArchFamily, TrainConfig, evaluate_pair, family_from_name,
                     load_pair, save_pair, train_pair, unequalized_result)
from .txrx import dataset as dsm
from .txrx.fiber import FIBER_PRESETS, FiberParams, LinkConfig

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MISSING_INPUT = 3
EXIT_CONFIG = 4
EXIT_INFEASIBLE = 5
EXIT_DIVERGED = 6


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def write_manifest(subcommand: str, config: dict, inputs: list[str],
                   outputs: list[str], seed, out_path: str) -> str:
    """Write ``<out>.manifest.json``; returns the manifest hash."""
    manifest = {
        "tool": "eqlab",
        "version": __version__,
        "subcommand": subcommand,
        "config": config,
        "inputs": inputs,
        "outputs": outputs,
        "seed": seed,
        "config_hash": hashlib.sha256(_canonical(config).encode()).hexdigest()[:16],
    }
    manifest["manifest_hash"] = hashlib.sha256(
        _canonical(manifest).encode()).hexdigest()[:16]
    with open(out_path + ".manifest.json", "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return manifest["manifest_hash"]


def _require_file(path: str, what: str):
    if not os.path.exists(path):
        raise FileNotFoundError(f"{what} not found: {path}")


# -- rmps ---------------------------------------------------------------------


def cmd_rmps(args) -> int:
    _require_file(args.config, "model config")
    with open(args.config) as f:
        model = cx.model_from_json(f.read())
    report = cx.rmps_model(model)
    print(cx.report_table(report))
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK


# -- simulate -------------------------------------------------------------------


def _link_from_args(args) -> LinkConfig:
    preset = FIBER_PRESETS[args.fiber]
    fiber = FiberParams(
        alpha_db_km=args.alpha if args.alpha is not None else preset.alpha_db_km,
        dispersion_ps_nm_km=(args.dispersion if args.dispersion is not None
                             else preset.dispersion_ps_nm_km),
        gamma_w_km=args.gamma if args.gamma is not None else preset.gamma_w_km,
        span_length_km=args.span_km, span_count=args.spans)
    nf = -math.inf if args.nf is not None and args.nf <= -900 else args.nf
    return LinkConfig(
        fiber=fiber, launch_power_dbm=args.power_dbm,
        symbol_rate_gbd=args.symbol_rate, rrc_rolloff=args.rolloff,
        edfa_noise_figure_db=nf if nf is not None else 4.5,
        samples_per_symbol_sim=args.sps,
        steps_per_span_sim=args.steps_per_span, rng_seed=args.seed)


def cmd_simulate(args) -> int:
    link = _link_from_args(args)
    limit = None if args.xcorr_limit <= 0 else args.xcorr_limit
    ds = dsm.make_dataset(link, args.train_syms, args.test_syms,
                          train_seed=args.seed, test_seed=args.seed + 1,
                          guard=args.guard, xcorr_limit=limit)
    config = {"link": link.to_dict(), "train_syms": args.train_syms,
              "test_syms": args.test_syms, "guard": args.guard,
              "xcorr_limit": args.xcorr_limit}
    ds.manifest_hash = write_manifest("simulate", config, [], [args.out],
                                      args.seed, args.out)
    dsm.save_dataset(ds, args.out)
    print(f"wrote {args.out}: train {ds.train.n_symbols} syms, "
          f"test {ds.test.n_symbols if ds.test else 0} syms, "
          f"xcorr {ds.xcorr_max:.4f}")
    return EXIT_OK


# -- train ----------------------------------------------------------------------


def cmd_train(args) -> int:
    _require_file(args.dataset, "dataset")
    ds = dsm.load_dataset(args.dataset)
    family = family_from_name(args.family)
    try:
        hyper = {k: int(v) for k, v in json.loads(args.hyper).items()}
    except json.JSONDecodeError as e:
        raise ConfigError(f"--hyper is not valid JSON: {e.msg}") from None
    cfg = TrainConfig(learning_rate=args.lr, batch_size=args.batch,
                      epochs=args.epochs, seed=args.seed,
                      patience=args.patience)
    pair, curves = train_pair(family, args.memory, hyper, ds.train, cfg,
                              window_cap=args.window_cap)
    config = {"dataset": args.dataset, "family": family.value,
              "memory": args.memory, "hyper": hyper,
              "epochs": args.epochs, "lr": args.lr, "batch": args.batch,
              "window_cap": args.window_cap, "patience": args.patience}
    mhash = write_manifest("train", config, [args.dataset], [args.out],
                           args.seed, args.out)
    save_pair(pair, args.out, manifest_hash=mhash)
    final = {pol: c.train_loss[-1] for pol, c in curves.items()}
    print(f"wrote {args.out}: final train loss {final}")
    return EXIT_OK


# -- evaluate -------------------------------------------------------------------


def cmd_evaluate(args) -> int:
    _require_file(args.dataset, "dataset")
    _require_file(args.model, "model file")
    ds = dsm.load_dataset(args.dataset)
    if ds.test is None:
        raise DatasetError("dataset has no test split to evaluate on")
    pair = load_pair(args.model)
    baseline = unequalized_result(ds.test, pair.memory)
    result = evaluate_pair(pair, ds.test, baseline_q_db=baseline.q_db)
    config = {"dataset": args.dataset, "model": args.model}
    mhash = write_manifest("evaluate", config, [args.dataset, args.model],
                           [args.out], None, args.out)
    payload = {
        "schema": "eqlab-eval-v1",
        "manifest_hash": mhash,
        "equalized": result.to_dict(),
        "unequalized": baseline.to_dict(),
    }
    with open(args.out, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    print(json.dumps(payload["equalized"]))
    return EXIT_OK


# -- sweep ----------------------------------------------------------------------


def cmd_sweep(args) -> int:
    _require_file(args.dataset, "dataset")
    ds = dsm.load_dataset(args.dataset)
    families = [family_from_name(f) for f in args.families.split(",") if f]
    budgets = [search.Budget.parse(b) for b in args.budgets.split(",") if b]
    cfg = TrainConfig(learning_rate=args.lr, batch_size=args.batch,
                      epochs=args.epochs)
    rows, losses = search.sweep(families, budgets, ds, trials=args.trials,
                                seed=args.seed, memory=args.memory,
                                train_cfg=cfg, window_cap=args.window_cap)
    config = {"dataset": args.dataset, "families": args.families,
              "budgets": args.budgets, "trials": args.trials,
              "memory": args.memory, "epochs": args.epochs, "lr": args.lr,
              "batch": args.batch, "window_cap": args.window_cap}
    mhash = write_manifest("sweep", config, [args.dataset], [args.out],
                           args.seed, args.out)
    search.write_sweep_csv(rows, args.out, manifest_hash=mhash)
    with open(args.out + ".losses.json", "w") as f:
        json.dump(losses, f, sort_keys=True)
        f.write("\n")
    for r in rows:
        tag = "infeasible" if r.infeasible else (
            f"q_gain={r.q_gain_db:.2f} dB" if r.q_gain_db is not None else "")
        print(f"{r.family:12s} budget={r.budget or '-':6s} "
              f"rmps={r.rmps if r.rmps is not None else '-':>8} {tag}")
    print(f"wrote {args.out}")
    return EXIT_OK


# -- bench ----------------------------------------------------------------------


def cmd_bench(args) -> int:
    families = [family_from_name(f) for f in args.families.split(",") if f]
    decades = [search.Budget.parse(b) for b in args.decades.split(",") if b]
    batches = tuple(int(b) for b in args.batches.split(",") if b)
    rows, spearman = bench.latency_vs_rmps(
        families, decades, batches=batches, warmup=args.warmup,
        iters=args.iters, memory=args.memory, seed=args.seed)
    config = {"families": args.families, "decades": args.decades,
              "batches": args.batches, "warmup": args.warmup,
              "iters": args.iters, "memory": args.memory}
    mhash = write_manifest("bench", config, [], [args.out], args.seed,
                           args.out)
    bench.write_latency_csv(rows, args.out, manifest_hash=mhash)
    for (fam, batch), rho in sorted(spearman.items()):
        print(f"spearman[{fam}, B={batch}] = {rho:.3f}")
    print(f"wrote {args.out}")
    return EXIT_OK


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="eqlab",
        description="NN-equalizer performance/complexity workbench")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("rmps", help="multiplication count of a model config")
    q.add_argument("--config", required=True, help="model JSON path")
    q.set_defaults(fn=cmd_rmps)

    q = sub.add_parser("simulate", help="generate a train/test dataset")
    q.add_argument("--fiber", choices=sorted(FIBER_PRESETS), required=True)
    q.add_argument("--power-dbm", type=float, required=True)
    q.add_argument("--spans", type=int, required=True)
    q.add_argument("--train-syms", type=int, required=True)
    q.add_argument("--test-syms", type=int, required=True)
    q.add_argument("--seed", type=int, required=True)
    q.add_argument("--out", required=True)
    q.add_argument("--symbol-rate", type=float, default=34.4, help="GBd")
    q.add_argument("--rolloff", type=float, default=0.1)
    q.add_argument("--nf", type=float, default=None,
                   help="EDFA noise figure dB; <= -900 disables ASE")
    q.add_argument("--alpha", type=float, default=None, help="dB/km override")
    q.add_argument("--dispersion", type=float, default=None,
                   help="ps/(nm km) override")
    q.add_argument("--gamma", type=float, default=None, help="1/(W km) override")
    q.add_argument("--span-km", type=float, default=50.0)
    q.add_argument("--sps", type=int, default=8)
    q.add_argument("--steps-per-span", type=int, default=50)
    q.add_argument("--guard", type=int, default=dsm.DEFAULT_GUARD)
    q.add_argument("--xcorr-limit", type=float, default=dsm.XCORR_LIMIT,
                   help="independence gate; <= 0 records without enforcing")
    q.set_defaults(fn=cmd_simulate)

    q = sub.add_parser("train", help="train one equalizer pair")
    q.add_argument("--dataset", required=True)
    q.add_argument("--family", required=True)
    q.add_argument("--hyper", required=True, help='JSON, e.g. {"n1":32,...}')
    q.add_argument("--memory", type=int, default=41)
    q.add_argument("--epochs", type=int, default=15)
    q.add_argument("--lr", type=float, default=2e-3)
    q.add_argument("--batch", type=int, default=256)
    q.add_argument("--patience", type=int, default=None)
    q.add_argument("--window-cap", type=int, default=None)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out", required=True)
    q.set_defaults(fn=cmd_train)

    q = sub.add_parser("evaluate", help="BER/Q of a trained pair on a dataset")
    q.add_argument("--dataset", required=True)
    q.add_argument("--model", required=True)
    q.add_argument("--out", required=True)
    q.set_defaults(fn=cmd_evaluate)

    q = sub.add_parser("sweep", help="budget-constrained topology sweep")
    q.add_argument("--dataset", required=True)
    q.add_argument("--families", default="mlp,cnn-mlp,bilstm,cnn-bilstm")
    q.add_argument("--budgets", default="1e3,1e4,1e5,1e6")
    q.add_argument("--trials", type=int, default=20)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--memory", type=int, default=41)
    q.add_argument("--epochs", type=int, default=6)
    q.add_argument("--lr", type=float, default=2e-3)
    q.add_argument("--batch", type=int, default=512)
    q.add_argument("--window-cap", type=int, default=30000)
    q.add_argument("--out", required=True)
    q.set_defaults(fn=cmd_sweep)

    q = sub.add_parser("bench", help="latency vs multiplication count")
    q.add_argument("--families", default="mlp,cnn-mlp,bilstm,cnn-bilstm")
    q.add_argument("--decades", default="1e4,1e5,1e6,1e7")
    q.add_argument("--batches", default="1,256")
    q.add_argument("--warmup", type=int, default=5)
    q.add_argument("--iters", type=int, default=100)
    q.add_argument("--memory", type=int, default=41)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out", required=True)
    q.set_defaults(fn=cmd_bench)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except FileNotFoundError as e:
        print(f"eqlab: {e}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except InfeasibleBudgetError as e:
        print(f"eqlab: infeasible budget: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (TrainingDivergedError, AllTrialsDivergedError) as e:
        print(f"eqlab: {e}", file=sys.stderr)
        return EXIT_DIVERGED
    except (ConfigError, DatasetError, ValueError) as e:
        print(f"eqlab: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
