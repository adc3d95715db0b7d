"""Command-line harness: curve emission, gradient checking, sweeps, comparisons.

Every command is a deterministic function of (config, seed): re-running with
the same inputs reproduces every CSV/JSON/PNG byte-for-byte.  Wall-clock
timing is reported on stderr only, never inside output files.

Exit codes: 0 success, 1 check failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import copy
import json
import os
import sys
import time

from . import __version__
from .activations import AsauParams
from .curves import beta_sweep, build_curve_table, write_curve_csv, write_sweep_csv
from .experiments import (CLASSIFICATION_COLUMNS, SEGMENTATION_COLUMNS,
                          run_compare, rows_to_csv)
from .gradcheck import micro_network_report, scalar_gradient_suite
from .nn import save_checkpoint
from .plotting import plot_curve_table, plot_histories, plot_sweep
from .train import TrainConfig, write_history_csv

DEFAULTS = {
    "seed": 12345,
    "out_dir": "asaukit_out",
    "curves": {
        "grid": [-5.0, 5.0, 0.01],
        "alphas": [0.5, 1.0, 2.0],
        "betas": [1.0, 5.0, 20.0],
        "families": [
            {"label": "max", "a": 1.0, "b": 2.0},
            {"label": "leaky", "a": 0.01, "b": 1.0},
            {"label": "relu", "a": 0.0, "b": 1.0},
        ],
    },
    "sweep": {
        "grid": [-5.0, 5.0, 0.001],
        "a": 0.0, "b": 1.0, "alpha": 1.0,
        "betas": [1.0, 10.0, 100.0, 1000.0, 10000.0],
    },
    "gradcheck": {
        "samples": 1000, "rel_tol": 1e-6, "abs_tol": 1e-8,
        "network_tol": 1e-4, "h": 1e-5,
    },
    "compare": {
        "task": "classification",
        "roster": [{"name": "relu"}, {"name": "asau", "beta": 5.0}],
        "dataset": {},
        "train": {},
        "arch": {},
    },
}

# starting sharpness beta=5 keeps the trainable unit in its max-approximating
# regime; at beta=1 it can drift into a near-linear basin and underfit
TASK_TRAIN_DEFAULTS = {
    "classification": {"max_epochs": 200, "batch_size": 32, "lr": 0.01,
                       "patience": 50, "weight_decay": 1e-4},
    "segmentation": {"max_epochs": 40, "batch_size": 16, "lr": 0.003,
                     "patience": 50, "weight_decay": 1e-4},
}


class UsageError(Exception):
    pass


def _deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _apply_override(cfg: dict, item: str) -> None:
    if "=" not in item:
        raise UsageError(f"override {item!r} must look like key.path=value")
    path, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = cfg
    keys = path.split(".")
    for key in keys[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise UsageError(f"override path {path!r} crosses a non-object value")
    node[keys[-1]] = value


def load_config(args) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if args.config:
        try:
            with open(args.config) as f:
                user = json.load(f)
        except OSError as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {args.config} is not valid JSON: {exc}") from exc
        if not isinstance(user, dict):
            raise UsageError("config file must hold a JSON object")
        cfg = _deep_merge(cfg, user)
    for item in args.override or []:
        _apply_override(cfg, item)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.out is not None:
        cfg["out_dir"] = args.out
    return cfg


def _prepare_out_dir(cfg: dict) -> str:
    out = cfg["out_dir"]
    try:
        os.makedirs(out, exist_ok=True)
        probe = os.path.join(out, ".write_probe")
        with open(probe, "w") as f:
            f.write("")
        os.remove(probe)
    except OSError as exc:
        raise UsageError(f"output directory {out!r} is not writable: {exc}") from exc
    return out


def _dump_json(obj, path) -> None:
    with open(path, "w", newline="") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")


def _slug(label: str) -> str:
    return "".join(ch if ch.isalnum() else "_" for ch in label.lower())


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_curves(cfg: dict) -> int:
    out = _prepare_out_dir(cfg)
    section = cfg["curves"]
    grid = tuple(section["grid"])
    for family in section["families"]:
        a, b = float(family["a"]), float(family["b"])
        params = [AsauParams(a, b, alpha, beta)
                  for alpha in section["alphas"] for beta in section["betas"]]
        labels = [f"alpha={p.alpha:g} beta={p.beta:g}" for p in params]
        table = build_curve_table(grid, params, labels)
        stem = os.path.join(out, f"curves_{_slug(str(family['label']))}")
        write_curve_csv(table, stem + ".csv")
        plot_curve_table(table, stem + ".png",
                         f"smooth approximation of max({a:g}x, {b:g}x)")
        print(f"wrote {stem}.csv and {stem}.png")
    return 0


def cmd_sweep(cfg: dict) -> int:
    out = _prepare_out_dir(cfg)
    section = cfg["sweep"]
    base = AsauParams(float(section["a"]), float(section["b"]), float(section["alpha"]), 1.0)
    report = beta_sweep(base, [float(b) for b in section["betas"]], tuple(section["grid"]))
    write_sweep_csv(report, os.path.join(out, "sweep.csv"))
    plot_sweep(report, os.path.join(out, "sweep.png"),
               f"sup error vs beta for (a={base.a:g}, b={base.b:g})")
    print(f"wrote {os.path.join(out, 'sweep.csv')}")
    monotone = all(e2 < e1 for e1, e2 in zip(report.sup_errors, report.sup_errors[1:]))
    if not monotone:
        print("sweep FAILED: sup error is not strictly decreasing in beta", file=sys.stderr)
        return 1
    return 0


def cmd_gradcheck(cfg: dict) -> int:
    out = _prepare_out_dir(cfg)
    section = cfg["gradcheck"]
    samples = int(section["samples"])
    if samples <= 0:
        raise UsageError(f"gradcheck sample count must be positive, got {samples}")
    scalar = scalar_gradient_suite(samples, seed=int(cfg["seed"]),
                                   rel_tol=float(section["rel_tol"]),
                                   abs_tol=float(section["abs_tol"]))
    network = micro_network_report(h=float(section["h"]))
    net_tol = float(section["network_tol"])
    net_failures = network.failures(net_tol)
    report = {
        "scalar_suite": {
            "samples": scalar.samples,
            "rel_tol": scalar.rel_tol,
            "abs_tol": scalar.abs_tol,
            "worst_relative_error": scalar.worst_rel,
            "failures": [
                {"partial": f.partial, "point": list(f.point), "analytic": f.analytic,
                 "numeric": f.numeric, "error": f.error, "criterion": f.criterion}
                for f in scalar.failures
            ],
            "passed": scalar.passed,
        },
        "network_suite": {
            "tolerance": net_tol,
            "pooling_ties": network.pooling_ties,
            "worst": [
                {"name": e.name, "analytic": e.analytic, "numeric": e.numeric,
                 "rel_err": e.rel_err, "excluded": e.excluded}
                for e in network.worst(10)
            ],
            "failures": [e.name for e in net_failures],
            "passed": not net_failures,
        },
        "passed": scalar.passed and not net_failures,
    }
    _dump_json(report, os.path.join(out, "gradcheck_report.json"))
    if not report["passed"]:
        bad = sorted({f.partial for f in scalar.failures} | {e.name for e in net_failures})
        print(f"gradcheck FAILED: {', '.join(bad)}", file=sys.stderr)
        return 1
    print(f"gradcheck passed: {samples} scalar samples, "
          f"{len(network.entries)} network parameters")
    return 0


def cmd_compare(cfg: dict) -> int:
    out = _prepare_out_dir(cfg)
    section = cfg["compare"]
    task = section["task"]
    if task not in ("classification", "segmentation"):
        raise UsageError(f"compare task must be classification or segmentation, got {task!r}")
    roster = section["roster"]
    if len(roster) < 2:
        raise UsageError("compare needs a roster of at least two activations")
    seed = int(cfg["seed"])
    train_section = {**TASK_TRAIN_DEFAULTS[task], **section["train"]}
    config = TrainConfig(max_epochs=int(train_section["max_epochs"]),
                         batch_size=int(train_section["batch_size"]),
                         lr=float(train_section["lr"]),
                         seed=seed,
                         patience=int(train_section["patience"]))
    dataset_params = dict(section["dataset"])
    dataset_params.setdefault("seed", seed)
    arch = dict(section["arch"])
    arch.setdefault("weight_decay", train_section["weight_decay"])

    t0 = time.monotonic()
    rows = run_compare(task, roster, dataset_params, config, arch)
    elapsed = time.monotonic() - t0

    columns = CLASSIFICATION_COLUMNS if task == "classification" else SEGMENTATION_COLUMNS
    table_path = os.path.join(out, f"compare_{task}.csv")
    rows_to_csv(rows, columns, table_path)
    _dump_json({row.label: row.metrics for row in rows},
               os.path.join(out, f"metrics_{task}.json"))

    manifest_rows = []
    for row in rows:
        files = {}
        if not row.diverged:
            history_path = os.path.join(out, f"history_{_slug(row.label)}.csv")
            write_history_csv(row.history, history_path)
            ckpt_path = os.path.join(out, f"ckpt_{_slug(row.label)}.txt")
            save_checkpoint(row.net, ckpt_path)
            files = {"history": os.path.basename(history_path),
                     "checkpoint": os.path.basename(ckpt_path)}
        manifest_rows.append({"activation": row.label, "metrics": row.metrics,
                              "diverged": row.diverged, "files": files})
    manifest = {
        "tool_version": __version__,
        "command": "compare",
        "seed": seed,
        "config": {"task": task, "roster": roster, "dataset": dataset_params,
                   "train": train_section, "arch": arch},
        "rows": manifest_rows,
    }
    _dump_json(manifest, os.path.join(out, "manifest.json"))
    plot_histories({row.label: row.history for row in rows},
                   os.path.join(out, f"compare_{task}.png"),
                   "accuracy" if task == "classification" else "dice")
    print(f"wrote {table_path}", end=" ")
    print(f"({len(rows)} activations)")
    print(f"wall clock: {elapsed:.1f}s", file=sys.stderr)
    for row in rows:
        if row.diverged:
            print(f"warning: {row.label} diverged (NaN loss); row flagged", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="asaukit",
        description="Smooth-maximum activation toolkit: curves, gradient checks, "
                    "beta sweeps, and activation comparisons.")
    parser.add_argument("command", choices=["curves", "gradcheck", "compare", "sweep"])
    parser.add_argument("--config", help="JSON config file; merged over built-in defaults")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--out", help="override the output directory")
    parser.add_argument("--override", action="append", metavar="KEY=VALUE",
                        help="dotted-path config override, value parsed as JSON")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"curves": cmd_curves, "gradcheck": cmd_gradcheck,
                "compare": cmd_compare, "sweep": cmd_sweep}
    try:
        cfg = load_config(args)
        return handlers[args.command](cfg)
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
