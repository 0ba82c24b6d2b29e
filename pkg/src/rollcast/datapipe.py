"""From motion records to supervised sliding-window datasets.

Channel order is fixed everywhere: [roll, wave1, wave2, wave3], filtered
down by the feature scenario (roll_only keeps channel 0, wave_only keeps
1..3, roll_and_wave keeps all four). Windows slide with stride 1: window
j reads inputs from samples [j, j+d) and predicts roll at [j+d, j+d+p).

Normalization is min-max into (0, 1), fitted on the training portion only
so validation extremes cannot leak into the scaling; validation values
may therefore fall outside [0, 1], which downstream code accepts. The
split is chronological — a random split would leak near-duplicate
stride-1 windows across the boundary.
"""

import enum
import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, DegenerateChannelError, ShapeError, StateError
from .rollsurrogate import MotionRecord

CHANNEL_NAMES = ("roll", "wave1", "wave2", "wave3")


class FeatureScenario(enum.Enum):
    """Which channels feed the model."""

    roll_only = "roll_only"
    wave_only = "wave_only"
    roll_and_wave = "roll_and_wave"

    @property
    def channel_indices(self):
        return {
            FeatureScenario.roll_only: (0,),
            FeatureScenario.wave_only: (1, 2, 3),
            FeatureScenario.roll_and_wave: (0, 1, 2, 3),
        }[self]

    @property
    def channels(self):
        return len(self.channel_indices)

    @classmethod
    def parse(cls, name):
        try:
            return cls[str(name)]
        except KeyError:
            raise ConfigError(
                f"unknown feature scenario {name!r}; expected one of "
                f"{[s.name for s in cls]}"
            ) from None


class MinMaxScaler:
    """Per-channel affine map x -> (x - min) / (max - min)."""

    def __init__(self, names=CHANNEL_NAMES):
        self.names = tuple(names)
        self.mins = None
        self.maxs = None

    @property
    def fitted(self):
        return self.mins is not None

    def fit(self, data):
        data = np.asarray(data, dtype=np.float64)
        if data.ndim != 2 or data.shape[1] != len(self.names):
            raise ShapeError(f"scaler wants [n, {len(self.names)}], got {data.shape}")
        mins = data.min(axis=0)
        maxs = data.max(axis=0)
        for idx, name in enumerate(self.names):
            if not maxs[idx] > mins[idx]:
                raise DegenerateChannelError(
                    f"channel {name!r} is constant at {mins[idx]}; cannot normalize"
                )
        self.mins = mins
        self.maxs = maxs
        return self

    def _check(self, data):
        if not self.fitted:
            raise StateError("scaler used before fit")
        data = np.asarray(data, dtype=np.float64)
        if data.shape[-1] != len(self.names):
            raise ShapeError(f"expected last axis {len(self.names)}, got {data.shape}")
        return data

    def transform(self, data):
        data = self._check(data)
        return (data - self.mins) / (self.maxs - self.mins)

    def inverse_transform(self, data):
        data = self._check(data)
        return data * (self.maxs - self.mins) + self.mins

    def select(self, indices):
        """Sub-scaler over a subset of channels (shares fitted constants)."""
        sub = MinMaxScaler(tuple(self.names[i] for i in indices))
        if self.fitted:
            sub.mins = self.mins[list(indices)].copy()
            sub.maxs = self.maxs[list(indices)].copy()
        return sub

    def to_dict(self):
        return {
            "names": list(self.names),
            "mins": None if self.mins is None else self.mins.tolist(),
            "maxs": None if self.maxs is None else self.maxs.tolist(),
        }

    @classmethod
    def from_dict(cls, data):
        scaler = cls(tuple(data["names"]))
        if data.get("mins") is not None:
            scaler.mins = np.asarray(data["mins"], dtype=np.float64)
            scaler.maxs = np.asarray(data["maxs"], dtype=np.float64)
        return scaler


@dataclass
class WindowedDataset:
    """Supervised pairs: normalized inputs [n, d, C] and roll targets [n, p]."""

    inputs: np.ndarray
    targets: np.ndarray
    scaler: MinMaxScaler
    d: int
    p: int
    scenario: FeatureScenario
    source_checksum: str = ""

    @property
    def n(self):
        return self.inputs.shape[0]

    @property
    def roll_scaler(self):
        return self.scaler.select((0,))

    def slice(self, start, stop):
        return replace(self, inputs=self.inputs[start:stop], targets=self.targets[start:stop])

    def save(self, directory):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / "inputs.bin").write_bytes(
            np.ascontiguousarray(self.inputs, dtype="<f8").tobytes()
        )
        (directory / "targets.bin").write_bytes(
            np.ascontiguousarray(self.targets, dtype="<f8").tobytes()
        )
        meta = {
            "format_version": 1,
            "inputs_shape": list(self.inputs.shape),
            "targets_shape": list(self.targets.shape),
            "d": self.d,
            "p": self.p,
            "scenario": self.scenario.name,
            "scaler": self.scaler.to_dict(),
            "source_checksum": self.source_checksum,
        }
        (directory / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True))

    @classmethod
    def load(cls, directory):
        directory = Path(directory)
        try:
            meta = json.loads((directory / "meta.json").read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read dataset metadata in {directory}: {exc}") from exc
        inputs = np.frombuffer((directory / "inputs.bin").read_bytes(), dtype="<f8")
        targets = np.frombuffer((directory / "targets.bin").read_bytes(), dtype="<f8")
        ishape = tuple(meta["inputs_shape"])
        tshape = tuple(meta["targets_shape"])
        if inputs.size != int(np.prod(ishape)) or targets.size != int(np.prod(tshape)):
            raise DataError(f"dataset blobs in {directory} do not match recorded shapes")
        return cls(
            inputs=inputs.reshape(ishape).copy(),
            targets=targets.reshape(tshape).copy(),
            scaler=MinMaxScaler.from_dict(meta["scaler"]),
            d=int(meta["d"]),
            p=int(meta["p"]),
            scenario=FeatureScenario.parse(meta["scenario"]),
            source_checksum=meta.get("source_checksum", ""),
        )


def channel_matrix(record):
    """[n, 4] matrix in the fixed channel order [roll, wave1..wave3]."""
    if record.wave.shape[1] != 3:
        raise DataError(f"record must carry three wave probes, got {record.wave.shape[1]}")
    return np.column_stack([record.roll, record.wave])


def resample(record, target_dt):
    """Decimate to every k-th sample (no filtering); k = target_dt/dt."""
    ratio = target_dt / record.dt
    k = int(round(ratio))
    if k < 1 or abs(ratio - k) > 1e-9:
        raise ConfigError(
            f"target_dt {target_dt} is not an integer multiple of record dt {record.dt}"
        )
    if k == 1:
        return record
    return MotionRecord(
        t=record.t[::k].copy(),
        roll=record.roll[::k].copy(),
        wave=record.wave[::k].copy(),
        dt=record.dt * k,
        heading=record.heading,
        seed=record.seed,
        label=record.label,
        meta=dict(record.meta),
    )


def fit_scaler(record, split_boundary):
    """Fit the 4-channel min-max scaler on samples [0, split_boundary)."""
    if not 0 < split_boundary <= len(record):
        raise ConfigError(
            f"split_boundary {split_boundary} outside record of {len(record)} samples"
        )
    return MinMaxScaler().fit(channel_matrix(record)[:split_boundary])


def make_windows(record, d, p, scenario, scaler):
    """Cut stride-1 windows: n = len(record) - d - p + 1 supervised pairs."""
    if d < 1 or p < 1:
        raise ConfigError(f"d and p must be >= 1, got d={d}, p={p}")
    n_samples = len(record)
    n = n_samples - d - p + 1
    if n < 1:
        raise DataError(f"series of {n_samples} samples too short for d={d}, p={p}")
    normalized = scaler.transform(channel_matrix(record))
    cols = list(scenario.channel_indices)
    series = np.ascontiguousarray(normalized[:, cols])
    roll = np.ascontiguousarray(normalized[:, 0])

    windows = np.lib.stride_tricks.sliding_window_view(series, d, axis=0)  # [n+p-1, C, d]
    inputs = np.ascontiguousarray(np.swapaxes(windows[:n], 1, 2))  # [n, d, C]
    targets = np.ascontiguousarray(
        np.lib.stride_tricks.sliding_window_view(roll[d:], p, axis=0)[:n]
    )
    return WindowedDataset(
        inputs=inputs,
        targets=targets,
        scaler=scaler,
        d=int(d),
        p=int(p),
        scenario=scenario,
        source_checksum=record.checksum(),
    )


def split(dataset, ratio):
    """Chronological split: first floor(n * ratio) windows train."""
    if not 0.0 < ratio < 1.0:
        raise ConfigError(f"split ratio must lie in (0, 1), got {ratio}")
    n_train = int(np.floor(dataset.n * ratio))
    if n_train < 1 or n_train >= dataset.n:
        raise DataError(f"split of {dataset.n} windows at ratio {ratio} leaves an empty side")
    return dataset.slice(0, n_train), dataset.slice(n_train, dataset.n)


def train_sample_boundary(n_samples, d, p, ratio):
    """Last raw-sample index (exclusive) touched by any training window."""
    n = n_samples - d - p + 1
    if n < 1:
        raise DataError(f"series of {n_samples} samples too short for d={d}, p={p}")
    n_train = int(np.floor(n * ratio))
    return n_train + d + p - 1


def prepare_datasets(record, d, p, scenario, ratio):
    """Full pipeline: fit scaler on the training portion, window, split.

    Pure function of (record, d, p, scenario, ratio).
    """
    boundary = train_sample_boundary(len(record), d, p, ratio)
    scaler = fit_scaler(record, boundary)
    dataset = make_windows(record, d, p, scenario, scaler)
    return split(dataset, ratio)
