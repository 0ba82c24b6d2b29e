"""Experiment configuration: one human-editable file, full defaults.

Every constant of the shipped study — sea state (0.284 m, 2.15 s, 240
components), headings, run length (80 s at 0.005 s, recorded at 0.1 s),
the 8:2 split, the d = p horizons {10, 20}, layer sizes and the training
budget — lives in the default tree below. A config file (JSON, or TOML on
Python >= 3.11 / with tomli installed) overrides any subset; unknown keys
are hard errors. CLI flags override file values.
"""

import copy
import json
from pathlib import Path

from .datapipe import FeatureScenario
from .errors import ConfigError
from .rollsurrogate import DEFAULT_EXCITATION_GAIN, RollParams
from .seastate import Probe, SeaKinematics, SpectrumParams
from .trainer import TrainConfig

DEFAULTS = {
    "spectrum": {
        "significant_wave_height": 0.284,
        "peak_period": 2.15,
        "n_components": 240,
        "omega_min": None,
        "omega_max": None,
        "gravity": 9.81,
    },
    "roll": {
        "natural_period": 1.7,
        "linear_damping_ratio": 0.05,
        "quadratic_damping": 0.4,
        "cubic_restoring": 0.6,
        "excitation_gain": DEFAULT_EXCITATION_GAIN,
    },
    "kinematics": {
        "ship_speed": 2.196,
        "headings": [150.0, 120.0, 90.0],
    },
    "probes": [[3.4, 0.3], [3.6, 0.0], [3.4, -0.3]],
    "simulation": {
        "duration": 80.0,
        "sim_dt": 0.005,
        "output_dt": 0.1,
        "seed": 7,
    },
    "pipeline": {
        "d": 10,
        "p": 10,
        "scenario": "roll_and_wave",
        "ratio": 0.8,
    },
    "ablation": {
        "datasets": [1, 2, 3],
        "scenarios": ["roll_only", "wave_only", "roll_and_wave"],
        "horizons": [10, 20],
    },
    "comparison": {
        "datasets": [1, 2],
        "models": ["cnn_only", "lstm_only", "convlstmp"],
        "horizon": 20,
        "scenario": "roll_and_wave",
    },
    "train": {
        "epochs": 500,
        "batch_size": 32,
        "learning_rate": 1e-3,
        "optimizer": "adam",
        "beta1": 0.9,
        "beta2": 0.999,
        "eps": 1e-8,
        "patience": 50,
    },
    "seeds": [1, 2, 3, 4, 5],
    "output_dir": "runs",
}

# list-valued leaves are replaced wholesale rather than merged
_LIST_LEAVES = {"headings", "probes", "datasets", "scenarios", "horizons", "models", "seeds"}


def default_config():
    return copy.deepcopy(DEFAULTS)


def _merge(base, override, path=""):
    for key, value in override.items():
        here = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown config key {here!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key {here!r} must be a table, got {type(value).__name__}")
            _merge(base[key], value, here)
        else:
            base[key] = value
    return base


def _read_file(path):
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text()
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ImportError:
            import tomli as tomllib
        try:
            return tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: invalid TOML: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc


def load_config(path=None):
    """Defaults overlaid with an optional config file, then validated."""
    cfg = default_config()
    if path is not None:
        _merge(cfg, _read_file(path))
    validate_config(cfg)
    return cfg


def validate_config(cfg):
    pipe = cfg["pipeline"]
    if pipe["d"] != pipe["p"]:
        raise ConfigError(f"pipeline d={pipe['d']} must equal p={pipe['p']}")
    if not 0.0 < pipe["ratio"] < 1.0:
        raise ConfigError(f"pipeline ratio must lie in (0, 1), got {pipe['ratio']}")
    FeatureScenario.parse(pipe["scenario"])
    for s in cfg["ablation"]["scenarios"]:
        FeatureScenario.parse(s)
    FeatureScenario.parse(cfg["comparison"]["scenario"])
    if not cfg["seeds"]:
        raise ConfigError("seeds list must not be empty")
    if len(cfg["kinematics"]["headings"]) < 1:
        raise ConfigError("at least one heading is required")
    for block, keys in (("ablation", ("datasets",)), ("comparison", ("datasets",))):
        for key in keys:
            for idx in cfg[block][key]:
                if not 1 <= int(idx) <= len(cfg["kinematics"]["headings"]):
                    raise ConfigError(
                        f"{block}.{key} references dataset #{idx} but only "
                        f"{len(cfg['kinematics']['headings'])} headings are configured"
                    )
    # constructing the domain objects runs their own invariant checks
    spectrum_params(cfg)
    roll_params(cfg)
    probes(cfg)
    train_config(cfg)
    for heading in cfg["kinematics"]["headings"]:
        kinematics(cfg, heading)


def _wrap(build, what):
    try:
        return build()
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid {what}: {exc}") from exc


def spectrum_params(cfg):
    s = cfg["spectrum"]
    return _wrap(lambda: SpectrumParams(
        significant_wave_height=float(s["significant_wave_height"]),
        peak_period=float(s["peak_period"]),
        n_components=int(s["n_components"]),
        omega_min=None if s["omega_min"] is None else float(s["omega_min"]),
        omega_max=None if s["omega_max"] is None else float(s["omega_max"]),
        gravity=float(s["gravity"]),
    ), "spectrum block")


def roll_params(cfg):
    r = cfg["roll"]
    return _wrap(lambda: RollParams(
        natural_period=float(r["natural_period"]),
        linear_damping_ratio=float(r["linear_damping_ratio"]),
        quadratic_damping=float(r["quadratic_damping"]),
        cubic_restoring=float(r["cubic_restoring"]),
        excitation_gain=float(r["excitation_gain"]),
    ), "roll block")


def kinematics(cfg, heading):
    return _wrap(lambda: SeaKinematics(
        heading_angle=float(heading),
        ship_speed=float(cfg["kinematics"]["ship_speed"]),
    ), "kinematics block")


def probes(cfg):
    return _wrap(lambda: [Probe(x=float(x), y=float(y)) for x, y in cfg["probes"]], "probes")


def train_config(cfg, shuffle_seed=0):
    t = cfg["train"]
    return _wrap(lambda: TrainConfig(
        epochs=int(t["epochs"]),
        batch_size=int(t["batch_size"]),
        learning_rate=float(t["learning_rate"]),
        optimizer=str(t["optimizer"]),
        beta1=float(t["beta1"]),
        beta2=float(t["beta2"]),
        eps=float(t["eps"]),
        shuffle_seed=int(shuffle_seed),
        patience=None if t["patience"] is None else int(t["patience"]),
    ), "train block")


def dataset_label(index):
    """1-based dataset number -> label, matching the published run naming."""
    return f"dataset#{int(index)}"
