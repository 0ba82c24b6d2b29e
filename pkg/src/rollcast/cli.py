"""Command-line driver for the full study: simulate records, train and
evaluate single cells, and run the feature-space ablation and the model
comparison grids.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
divergence. Every subcommand is a pure function of its config file, flags
and input files; all randomness is seeded.
"""

import argparse
import json
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import kernels
from .config import (
    dataset_label,
    kinematics,
    load_config,
    probes,
    roll_params,
    spectrum_params,
    train_config,
)
from .datapipe import FeatureScenario, make_windows, prepare_datasets, split, MinMaxScaler
from .errors import ConfigError, DataError, DivergenceError
from .evaluator import EvalReport, compare, emit_outputs, evaluate
from .models import ModelSpec, build
from .rollsurrogate import load_record, save_record, simulate_run
from .trainer import load_checkpoint, load_preprocess, save_checkpoint, train

GRID_SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# helpers

def _records_dir(cfg, override):
    base = Path(override) if override else Path(cfg["output_dir"]) / "records"
    return base


def _record_path(records_dir, index):
    return Path(records_dir) / f"dataset{int(index)}.csv"


def _load_dataset_record(records_dir, index):
    path = _record_path(records_dir, index)
    if not path.exists():
        raise DataError(
            f"record {path} not found; generate it with `rollcast simulate` first"
        )
    return load_record(path)


def _simulate_one(cfg, heading, seed, label):
    return simulate_run(
        spectrum_params(cfg),
        roll_params(cfg),
        kinematics(cfg, heading),
        probes(cfg),
        duration=float(cfg["simulation"]["duration"]),
        sim_dt=float(cfg["simulation"]["sim_dt"]),
        output_dt=float(cfg["simulation"]["output_dt"]),
        seed=seed,
        label=label,
    )


def _train_cell(cfg, record, label, scenario, horizon, model_kind, seed):
    """Train one grid cell; returns (model, history, report, train_ds)."""
    train_ds, val_ds = prepare_datasets(
        record, horizon, horizon, scenario, float(cfg["pipeline"]["ratio"])
    )
    spec = ModelSpec.for_kind(
        model_kind, d=horizon, p=horizon, channels=scenario.channels, seed=seed
    )
    model = build(spec)
    model, history = train(model, train_ds, val_ds, train_config(cfg, shuffle_seed=seed))
    report = evaluate(model, val_ds, train_ds.roll_scaler, dataset_label=label)
    return model, history, report, train_ds


def _run_grid_cell(task):
    """Worker for grid runs (top level so process pools can pickle it)."""
    cfg, record_path, label, scenario_name, horizon, model_kind, seed, cell_dir = task
    record = load_record(record_path)
    scenario = FeatureScenario.parse(scenario_name)
    _, history, report, _ = _train_cell(cfg, record, label, scenario, horizon, model_kind, seed)
    cell_dir = Path(cell_dir)
    cell_dir.mkdir(parents=True, exist_ok=True)
    history.to_csv(cell_dir / "history.csv")
    emit_outputs(report, cell_dir)
    return {
        "dataset": label,
        "scenario": scenario_name,
        "horizon": horizon,
        "model_kind": model_kind,
        "seed": seed,
        "average_rmse": report.average_rmse,
        "per_step_rmse": [float(v) for v in report.per_step_rmse],
        "epochs_run": history.epochs_run,
        "best_epoch": history.best_epoch,
    }


def _run_cells(tasks, jobs):
    if jobs <= 1:
        return [_run_grid_cell(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_grid_cell, tasks))


def _median(values):
    return float(statistics.median(values))


def _cell_dir(root, label, scenario, horizon, model_kind, seed):
    name = f"{label.replace('#', '')}_{scenario}_h{horizon}_{model_kind}_seed{seed}"
    return Path(root) / "cells" / name


def _write_json(path, payload):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True))


# ---------------------------------------------------------------------------
# subcommands

def cmd_simulate(args):
    cfg = load_config(args.config)
    out_dir = _records_dir(cfg, args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = int(cfg["simulation"]["seed"] if args.seed is None else args.seed)

    headings = list(cfg["kinematics"]["headings"])
    if args.heading is not None:
        if args.heading in headings:
            picks = [(headings.index(args.heading) + 1, args.heading)]
        else:
            picks = [(1, args.heading)]
    else:
        picks = list(enumerate(headings, start=1))

    for index, heading in picks:
        label = dataset_label(index)
        record = _simulate_one(cfg, heading, seed, label)
        path = _record_path(out_dir, index)
        save_record(record, path)
        peak = float(np.max(np.abs(record.roll)))
        print(f"{label}: heading {heading:g} deg, {len(record)} samples, "
              f"max |roll| {peak:.2f} deg -> {path}")
    return 0


def cmd_train(args):
    cfg = load_config(args.config)
    record = load_record(args.record)
    scenario = FeatureScenario.parse(args.scenario or cfg["pipeline"]["scenario"])
    horizon = int(args.horizon or cfg["pipeline"]["d"])
    seed = int(cfg["seeds"][0] if args.seed is None else args.seed)
    label = record.label or Path(args.record).stem

    model, history, report, train_ds = _train_cell(
        cfg, record, label, scenario, horizon, args.model, seed
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    preprocess = {
        "scenario": scenario.name,
        "d": horizon,
        "p": horizon,
        "ratio": float(cfg["pipeline"]["ratio"]),
        "scaler": train_ds.scaler.to_dict(),
        "record_dt": record.dt,
        "record_checksum": record.checksum(),
    }
    save_checkpoint(model, out_dir / "checkpoint", preprocess=preprocess)
    history.to_csv(out_dir / "history.csv")
    emit_outputs(report, out_dir)
    print(f"trained {args.model} on {label} ({scenario.name}, {horizon} steps, seed {seed}): "
          f"val MSE {min(history.val_mse):.3e} at epoch {history.best_epoch}/{history.epochs_run}, "
          f"average RMSE {report.average_rmse:.5f} deg")
    return 0


def cmd_evaluate(args):
    model = load_checkpoint(args.checkpoint)
    preprocess = load_preprocess(args.checkpoint)
    if preprocess is None:
        raise DataError(
            f"checkpoint {args.checkpoint} has no preprocessing sidecar; "
            "evaluate needs the training-time scaler"
        )
    record = load_record(args.record)
    scenario = FeatureScenario.parse(preprocess["scenario"])
    scaler = MinMaxScaler.from_dict(preprocess["scaler"])
    dataset = make_windows(record, int(preprocess["d"]), int(preprocess["p"]), scenario, scaler)
    _, val_ds = split(dataset, float(preprocess["ratio"]))
    report = evaluate(model, val_ds, scaler.select((0,)),
                      dataset_label=record.label or Path(args.record).stem)
    out_dir = Path(args.out)
    emit_outputs(report, out_dir)
    print(f"evaluated {model.spec.kind} on {report.dataset}: "
          f"average RMSE {report.average_rmse:.5f} deg over {report.n_eval_windows} windows")
    return 0


def cmd_predict(args):
    model = load_checkpoint(args.checkpoint)
    preprocess = load_preprocess(args.checkpoint)
    if preprocess is None:
        raise DataError(
            f"checkpoint {args.checkpoint} has no preprocessing sidecar; "
            "predict needs the training-time scaler"
        )
    record = load_record(args.window)
    d = int(preprocess["d"])
    if len(record) < d:
        raise DataError(f"window file has {len(record)} rows; model needs at least {d}")
    scenario = FeatureScenario.parse(preprocess["scenario"])
    scaler = MinMaxScaler.from_dict(preprocess["scaler"])

    matrix = np.column_stack([record.roll, record.wave])[-d:]
    normalized = scaler.transform(matrix)
    window = normalized[:, list(scenario.channel_indices)]
    pred_norm = model.forward(window)
    roll_scale = scaler.maxs[0] - scaler.mins[0]
    pred_deg = pred_norm * roll_scale + scaler.mins[0]

    t_last = record.t[-1]
    lines = ["step,t,roll_pred_deg"]
    for k, value in enumerate(pred_deg, start=1):
        lines.append(f"{k},{t_last + k * record.dt:.17g},{float(value):.17g}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
        print(f"wrote {model.spec.p}-step forecast to {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_ablate(args):
    cfg = load_config(args.config)
    records_dir = _records_dir(cfg, args.records)
    out_root = Path(args.out) if args.out else Path(cfg["output_dir"]) / "ablation"
    block = cfg["ablation"]
    seeds = [int(s) for s in cfg["seeds"]]

    tasks = []
    for index in block["datasets"]:
        path = _record_path(records_dir, index)
        if not path.exists():
            raise DataError(
                f"record {path} not found; generate it with `rollcast simulate` first"
            )
        label = dataset_label(index)
        for scenario in block["scenarios"]:
            for horizon in block["horizons"]:
                for seed in seeds:
                    cell = _cell_dir(out_root, label, scenario, horizon, "lstm_only", seed)
                    tasks.append((cfg, str(path), label, scenario, int(horizon),
                                  "lstm_only", seed, str(cell)))
    results = _run_cells(tasks, args.jobs)

    cells = []
    for index in block["datasets"]:
        label = dataset_label(index)
        for scenario in block["scenarios"]:
            for horizon in block["horizons"]:
                group = [r for r in results
                         if r["dataset"] == label and r["scenario"] == scenario
                         and r["horizon"] == int(horizon)]
                cells.append({
                    "dataset": label,
                    "scenario": scenario,
                    "horizon": int(horizon),
                    "per_seed_average_rmse": {str(r["seed"]): r["average_rmse"] for r in group},
                    "median_average_rmse": _median([r["average_rmse"] for r in group]),
                })
    grid = {
        "schema_version": GRID_SCHEMA_VERSION,
        "protocol": {
            "learner": "lstm_only",
            "datasets": [dataset_label(i) for i in block["datasets"]],
            "scenarios": list(block["scenarios"]),
            "horizons": [int(h) for h in block["horizons"]],
            "seeds": seeds,
        },
        "cells": cells,
    }
    _write_json(out_root / "grid.json", grid)

    header = ["dataset"] + [
        f"{scenario}_{h}step" for h in block["horizons"] for scenario in block["scenarios"]
    ]
    lines = [",".join(header)]
    for index in block["datasets"]:
        label = dataset_label(index)
        row = [label]
        for horizon in block["horizons"]:
            for scenario in block["scenarios"]:
                med = next(c["median_average_rmse"] for c in cells
                           if c["dataset"] == label and c["scenario"] == scenario
                           and c["horizon"] == int(horizon))
                row.append(repr(med))
        lines.append(",".join(row))
    (out_root / "grid.csv").write_text("\n".join(lines) + "\n")

    print(f"ablation grid: {len(results)} cells -> {out_root}")
    for cell in cells:
        print(f"  {cell['dataset']} {cell['scenario']:>13} {cell['horizon']:>2} steps: "
              f"median average RMSE {cell['median_average_rmse']:.5f} deg")
    return 0


def cmd_compare(args):
    cfg = load_config(args.config)
    records_dir = _records_dir(cfg, args.records)
    out_root = Path(args.out) if args.out else Path(cfg["output_dir"]) / "comparison"
    block = cfg["comparison"]
    seeds = [int(s) for s in cfg["seeds"]]
    horizon = int(block["horizon"])
    scenario = block["scenario"]

    tasks = []
    for index in block["datasets"]:
        path = _record_path(records_dir, index)
        if not path.exists():
            raise DataError(
                f"record {path} not found; generate it with `rollcast simulate` first"
            )
        label = dataset_label(index)
        for model_kind in block["models"]:
            for seed in seeds:
                cell = _cell_dir(out_root, label, scenario, horizon, model_kind, seed)
                tasks.append((cfg, str(path), label, scenario, horizon,
                              model_kind, seed, str(cell)))
    results = _run_cells(tasks, args.jobs)

    cells = []
    rankings = {}
    for index in block["datasets"]:
        label = dataset_label(index)
        medians = {}
        for model_kind in block["models"]:
            group = [r for r in results if r["dataset"] == label and r["model_kind"] == model_kind]
            med = _median([r["average_rmse"] for r in group])
            medians[model_kind] = med
            per_step = np.median(np.stack([r["per_step_rmse"] for r in group]), axis=0)
            cells.append({
                "dataset": label,
                "model_kind": model_kind,
                "horizon": horizon,
                "scenario": scenario,
                "per_seed_average_rmse": {str(r["seed"]): r["average_rmse"] for r in group},
                "median_average_rmse": med,
                "median_per_step_rmse": [float(v) for v in per_step],
            })
        rankings[label] = sorted(
            ({"model_kind": k, "median_average_rmse": v} for k, v in medians.items()),
            key=lambda row: (row["median_average_rmse"], row["model_kind"]),
        )
    grid = {
        "schema_version": GRID_SCHEMA_VERSION,
        "protocol": {
            "datasets": [dataset_label(i) for i in block["datasets"]],
            "models": list(block["models"]),
            "horizon": horizon,
            "scenario": scenario,
            "seeds": seeds,
        },
        "cells": cells,
        "rankings": rankings,
    }
    _write_json(out_root / "grid.json", grid)

    lines = [",".join(["dataset"] + list(block["models"]))]
    for index in block["datasets"]:
        label = dataset_label(index)
        row = [label]
        for model_kind in block["models"]:
            med = next(c["median_average_rmse"] for c in cells
                       if c["dataset"] == label and c["model_kind"] == model_kind)
            row.append(repr(med))
        lines.append(",".join(row))
    (out_root / "grid.csv").write_text("\n".join(lines) + "\n")

    for index in block["datasets"]:
        label = dataset_label(index)
        curves = {c["model_kind"]: c["median_per_step_rmse"] for c in cells if c["dataset"] == label}
        _emit_comparison_plot(out_root / f"per_step_{label.replace('#', '')}.svg",
                              label, horizon, curves)

    print(f"comparison grid: {len(results)} cells -> {out_root}")
    for label, rows in rankings.items():
        order = " < ".join(f"{r['model_kind']} ({r['median_average_rmse']:.5f})" for r in rows)
        print(f"  {label}: {order}")
    return 0


def _emit_comparison_plot(path, label, horizon, curves):
    from .evaluator import _plot_lines

    steps = np.arange(1, horizon + 1)
    series = {kind: (steps, values, "-o") for kind, values in sorted(curves.items())}
    _plot_lines(path, series, f"{label}: median RMSE by prediction step",
                "prediction step", "RMSE [deg]")


# ---------------------------------------------------------------------------
# parser

def build_parser():
    parser = argparse.ArgumentParser(
        prog="rollcast",
        description="Irregular-sea roll datasets and multi-step roll forecasting "
                    f"(numeric backend: {kernels.BACKEND})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate roll/wave records for the configured headings")
    p.add_argument("--config", help="experiment config file (JSON or TOML)")
    p.add_argument("--heading", type=float, help="simulate a single heading [deg]")
    p.add_argument("--seed", type=int, help="override the simulation seed")
    p.add_argument("--out", help="records directory (default <output_dir>/records)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="train one forecaster on a record")
    p.add_argument("--config", help="experiment config file")
    p.add_argument("--record", required=True, help="input record CSV")
    p.add_argument("--model", required=True, choices=["convlstmp", "lstm_only", "cnn_only"])
    p.add_argument("--scenario", choices=[s.name for s in FeatureScenario])
    p.add_argument("--horizon", type=int, help="lag/prediction steps (d = p)")
    p.add_argument("--seed", type=int, help="model/shuffle seed")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint on a record's validation split")
    p.add_argument("--checkpoint", required=True, help="checkpoint directory")
    p.add_argument("--record", required=True, help="record CSV")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="forecast p steps ahead of a window CSV")
    p.add_argument("--checkpoint", required=True, help="checkpoint directory")
    p.add_argument("--window", required=True, help="CSV with at least d rows (record format)")
    p.add_argument("--out", help="output CSV (default stdout)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("ablate", help="feature-space ablation grid with the LSTM learner")
    p.add_argument("--config", help="experiment config file")
    p.add_argument("--records", help="records directory (default <output_dir>/records)")
    p.add_argument("--out", help="grid output directory (default <output_dir>/ablation)")
    p.add_argument("--jobs", type=int, default=1, help="concurrent grid cells")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("compare", help="model comparison grid (CNN vs LSTM vs hybrid)")
    p.add_argument("--config", help="experiment config file")
    p.add_argument("--records", help="records directory (default <output_dir>/records)")
    p.add_argument("--out", help="grid output directory (default <output_dir>/comparison)")
    p.add_argument("--jobs", type=int, default=1, help="concurrent grid cells")
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except DivergenceError as exc:
        print(f"numeric divergence: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
