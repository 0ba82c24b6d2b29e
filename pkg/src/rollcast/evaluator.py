"""Forecast evaluation in physical degrees.

RMSE is computed separately at every horizon step across all validation
windows; the headline "average RMSE" is the mean of those per-step
values (not the RMSE of the pooled error matrix — the pooled variant is
available behind a flag for sensitivity checks). Predictions and targets
are inverse-transformed through the training roll scaler before any
metric, so reported numbers are degrees.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, ShapeError
from .trainer import predict_batched

REPORT_SCHEMA_VERSION = 1
N_TRACE_WINDOWS = 4


def rmse(pred, truth):
    """Root of the mean squared error."""
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape or pred.size == 0:
        raise ShapeError(f"rmse wants equal nonzero shapes, got {pred.shape} and {truth.shape}")
    diff = pred - truth
    return float(np.sqrt(np.mean(diff * diff)))


@dataclass
class EvalReport:
    """Per-step and average RMSE [deg] for one (dataset, scenario, model) cell."""

    per_step_rmse: np.ndarray
    average_rmse: float
    dataset: str
    scenario: str
    model_kind: str
    seed: int
    n_eval_windows: int
    pooled_rmse: float = 0.0
    traces: list = field(default_factory=list)

    @property
    def horizon(self):
        return len(self.per_step_rmse)

    def to_dict(self):
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "per_step_rmse": [float(v) for v in self.per_step_rmse],
            "average_rmse": float(self.average_rmse),
            "pooled_rmse": float(self.pooled_rmse),
            "dataset": self.dataset,
            "scenario": self.scenario,
            "model_kind": self.model_kind,
            "seed": int(self.seed),
            "n_eval_windows": int(self.n_eval_windows),
            "traces": self.traces,
        }

    @classmethod
    def from_dict(cls, data):
        if data.get("schema_version") != REPORT_SCHEMA_VERSION:
            raise DataError(f"unsupported report schema {data.get('schema_version')!r}")
        return cls(
            per_step_rmse=np.asarray(data["per_step_rmse"], dtype=np.float64),
            average_rmse=float(data["average_rmse"]),
            pooled_rmse=float(data.get("pooled_rmse", 0.0)),
            dataset=data["dataset"],
            scenario=data["scenario"],
            model_kind=data["model_kind"],
            seed=int(data["seed"]),
            n_eval_windows=int(data["n_eval_windows"]),
            traces=data.get("traces", []),
        )

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


def evaluate(model, dataset, roll_scaler, dataset_label="", capture_traces=True):
    """Score ``model`` on every window of ``dataset`` in degrees."""
    if dataset.n < 1:
        raise DataError("evaluation dataset is empty")
    pred_norm = predict_batched(model, dataset.inputs)
    pred_norm = pred_norm.reshape(dataset.n, model.spec.p)
    scale = roll_scaler.maxs[0] - roll_scaler.mins[0]
    offset = roll_scaler.mins[0]
    pred_deg = pred_norm * scale + offset
    truth_deg = dataset.targets * scale + offset

    per_step = np.sqrt(np.mean((pred_deg - truth_deg) ** 2, axis=0))
    average = float(np.mean(per_step))
    pooled = float(np.sqrt(np.mean((pred_deg - truth_deg) ** 2)))

    traces = []
    if capture_traces:
        n_traces = min(N_TRACE_WINDOWS, dataset.n)
        for idx in np.unique(np.linspace(0, dataset.n - 1, n_traces).round().astype(int)):
            traces.append({
                "window_index": int(idx),
                "truth_deg": [float(v) for v in truth_deg[idx]],
                "pred_deg": [float(v) for v in pred_deg[idx]],
            })
    return EvalReport(
        per_step_rmse=per_step,
        average_rmse=average,
        pooled_rmse=pooled,
        dataset=dataset_label,
        scenario=dataset.scenario.name,
        model_kind=model.spec.kind,
        seed=model.spec.seed,
        n_eval_windows=dataset.n,
        traces=traces,
    )


def compare(reports):
    """Rank reports by average RMSE (ascending; ties break on model kind).

    All reports must share the dataset label and horizon. Each row also
    counts the horizon steps where that model's per-step RMSE is lowest.
    """
    if not reports:
        raise DataError("nothing to compare")
    horizons = {r.horizon for r in reports}
    if len(horizons) != 1:
        raise DataError(f"cannot compare mixed horizons {sorted(horizons)}")
    datasets = {r.dataset for r in reports}
    if len(datasets) != 1:
        raise DataError(f"cannot compare mixed datasets {sorted(datasets)}")

    matrix = np.stack([r.per_step_rmse for r in reports])
    winners = np.argmin(matrix, axis=0)
    rows = []
    for i, r in enumerate(reports):
        rows.append({
            "model_kind": r.model_kind,
            "average_rmse": float(r.average_rmse),
            "step_wins": int(np.sum(winners == i)),
            "seed": int(r.seed),
        })
    rows.sort(key=lambda row: (row["average_rmse"], row["model_kind"]))
    return rows


# ---------------------------------------------------------------------------
# artifact emission

def _plot_lines(path, series, title, xlabel, ylabel):
    """One SVG line plot; deterministic output (fixed hash salt, no date)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "rollcast"
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    for label, (x, y, style) in series.items():
        ax.plot(x, y, style, label=label, linewidth=1.2)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def emit_outputs(report, out_dir):
    """Write report.json, per_step_rmse.csv and the two SVG plots.

    Returns the list of written paths.
    """
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create output directory {out_dir}: {exc}") from exc
    written = []

    report_path = out_dir / "report.json"
    report.save(report_path)
    written.append(report_path)

    csv_path = out_dir / "per_step_rmse.csv"
    lines = ["step,rmse_deg"]
    for k, v in enumerate(report.per_step_rmse, start=1):
        lines.append(f"{k},{float(v)!r}")
    csv_path.write_text("\n".join(lines) + "\n")
    written.append(csv_path)

    steps = np.arange(1, report.horizon + 1)
    rmse_path = out_dir / "per_step_rmse.svg"
    _plot_lines(
        rmse_path,
        {report.model_kind: (steps, report.per_step_rmse, "-o")},
        f"{report.dataset} {report.scenario}: RMSE by prediction step",
        "prediction step",
        "RMSE [deg]",
    )
    written.append(rmse_path)

    if report.traces:
        traces_path = out_dir / "traces.svg"
        series = {}
        for tr in report.traces:
            idx = tr["window_index"]
            series[f"true w{idx}"] = (steps, tr["truth_deg"], "-")
            series[f"pred w{idx}"] = (steps, tr["pred_deg"], "--")
        _plot_lines(
            traces_path,
            series,
            f"{report.dataset} {report.scenario}: predicted vs true roll",
            "prediction step",
            "roll [deg]",
        )
        written.append(traces_path)
    return written
