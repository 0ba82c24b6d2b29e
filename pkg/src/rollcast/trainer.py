"""Mini-batch training of a forecaster on a windowed dataset.

Every source of randomness is a seeded PCG64 stream, so a (model seed,
data, config) triple reproduces the same loss history bit for bit on one
platform. The loop shuffles window order each epoch, accumulates exact
analytic gradients per batch, steps the optimizer, records train and
validation MSE (normalized units squared), and finally restores the
parameters of the best-validation epoch.
"""

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CheckpointError, ConfigError, DivergenceError, ShapeError
from .gradcore import load_params, make_rng, save_params
from .models import Forecaster, ModelSpec, build

CHECKPOINT_SPEC = "spec.json"
CHECKPOINT_PREPROCESS = "preprocess.json"
HISTORY_HEADER = "epoch,train_mse,val_mse"


@dataclass(frozen=True)
class TrainConfig:
    """Optimization settings; defaults suit the desk-scale study grids."""

    epochs: int = 500
    batch_size: int = 32
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    shuffle_seed: int = 0
    patience: int = 50

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.optimizer not in ("adam", "sgd"):
            raise ConfigError(f"optimizer must be 'adam' or 'sgd', got {self.optimizer!r}")
        if self.patience is not None and self.patience < 1:
            raise ConfigError(f"patience must be >= 1 or None, got {self.patience}")


@dataclass
class TrainHistory:
    """Per-epoch losses plus wall time for the whole fit."""

    train_mse: list = field(default_factory=list)
    val_mse: list = field(default_factory=list)
    wall_time: float = 0.0
    best_epoch: int = 0

    @property
    def epochs_run(self):
        return len(self.train_mse)

    def to_csv(self, path):
        lines = [HISTORY_HEADER]
        for e, (tr, va) in enumerate(zip(self.train_mse, self.val_mse), start=1):
            lines.append(f"{e},{tr!r},{va!r}")
        Path(path).write_text("\n".join(lines) + "\n")


def mse_loss(pred, target):
    """Mean of squared errors over every scalar entry."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeError(f"prediction {pred.shape} and target {target.shape} differ")
    diff = pred - target
    return float(np.mean(diff * diff))


def mse_grad(pred, target):
    """Gradient of ``mse_loss`` w.r.t. the predictions: 2 (pred - target) / n."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeError(f"prediction {pred.shape} and target {target.shape} differ")
    return 2.0 * (pred - target) / pred.size


class Adam:
    """Bias-corrected adaptive-moment optimizer."""

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.value) for p in self.params]
        self.v = [np.zeros_like(p.value) for p in self.params]

    def step(self):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for i, p in enumerate(self.params):
            g = p.grad
            if not np.all(np.isfinite(g)):
                raise DivergenceError(f"non-finite gradient in {p.name}")
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * g
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * g * g
            m_hat = self.m[i] / (1.0 - b1 ** self.t)
            v_hat = self.v[i] / (1.0 - b2 ** self.t)
            p.value -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class Sgd:
    """Plain gradient descent, kept for ablations."""

    def __init__(self, params, lr=1e-3):
        self.params = list(params)
        self.lr = lr

    def step(self):
        for p in self.params:
            if not np.all(np.isfinite(p.grad)):
                raise DivergenceError(f"non-finite gradient in {p.name}")
            p.value -= self.lr * p.grad


def make_optimizer(params, config):
    if config.optimizer == "adam":
        return Adam(params, lr=config.learning_rate, beta1=config.beta1,
                    beta2=config.beta2, eps=config.eps)
    return Sgd(params, lr=config.learning_rate)


def _check_compat(model, dataset, label):
    spec = model.spec
    want = (spec.d, spec.channels)
    got = dataset.inputs.shape[1:]
    if got != want:
        raise ConfigError(f"{label} windows {got} do not match model spec {want}")
    if dataset.targets.shape[1] != spec.p:
        raise ConfigError(
            f"{label} targets [{dataset.targets.shape[1]}] do not match horizon p={spec.p}"
        )


def predict_batched(model, inputs, chunk=512):
    """Inference over many windows in fixed-size chunks (fixed order)."""
    outputs = [model.forward(inputs[s:s + chunk]) for s in range(0, inputs.shape[0], chunk)]
    return outputs[0] if len(outputs) == 1 else np.concatenate(outputs, axis=0)


def train(model, train_set, val_set, config):
    """Fit ``model``; returns (model, TrainHistory).

    Stops early when validation MSE has not improved for ``patience``
    epochs, and always restores the best-validation parameters.
    """
    _check_compat(model, train_set, "train")
    _check_compat(model, val_set, "validation")

    rng = make_rng(config.shuffle_seed)
    optimizer = make_optimizer(model.params, config)
    history = TrainHistory()
    best_val = np.inf
    best_state = [p.value.copy() for p in model.params]
    since_best = 0
    start = time.perf_counter()

    n = train_set.n
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        sq_sum = 0.0
        for s in range(0, n, config.batch_size):
            idx = order[s:s + config.batch_size]
            xb = np.ascontiguousarray(train_set.inputs[idx])
            yb = np.ascontiguousarray(train_set.targets[idx])
            pred = model.forward(xb)
            loss = mse_loss(pred, yb)
            if not np.isfinite(loss):
                raise DivergenceError(
                    f"training loss diverged in epoch {epoch}; "
                    f"last finite epoch: {epoch - 1}"
                )
            sq_sum += loss * pred.size
            model.zero_grads()
            model.backward(mse_grad(pred, yb))
            optimizer.step()
        train_mse = sq_sum / (n * train_set.targets.shape[1])

        val_pred = predict_batched(model, val_set.inputs)
        val_mse = mse_loss(val_pred, val_set.targets)
        if not np.isfinite(val_mse):
            raise DivergenceError(
                f"validation loss diverged in epoch {epoch}; last finite epoch: {epoch - 1}"
            )
        history.train_mse.append(train_mse)
        history.val_mse.append(val_mse)

        if val_mse < best_val:
            best_val = val_mse
            best_state = [p.value.copy() for p in model.params]
            history.best_epoch = epoch
            since_best = 0
        else:
            since_best += 1
            if config.patience is not None and since_best >= config.patience:
                break

    for p, v in zip(model.params, best_state):
        p.value[...] = v
    history.wall_time = time.perf_counter() - start
    return model, history


# ---------------------------------------------------------------------------
# checkpoints: model spec JSON + gradcore parameter format (+ preprocessing)

def save_checkpoint(model, directory, preprocess=None):
    """Write spec.json, manifest.json and params.bin (and optionally the
    preprocessing constants needed to run the model on raw data)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / CHECKPOINT_SPEC).write_text(
        json.dumps(model.spec.to_dict(), indent=2, sort_keys=True)
    )
    save_params(model.params, directory)
    if preprocess is not None:
        (directory / CHECKPOINT_PREPROCESS).write_text(
            json.dumps(preprocess, indent=2, sort_keys=True)
        )


def load_checkpoint(directory):
    """Rebuild the Forecaster; validates every shape against the spec."""
    directory = Path(directory)
    spec_path = directory / CHECKPOINT_SPEC
    try:
        spec = ModelSpec.from_dict(json.loads(spec_path.read_text()))
    except (OSError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"cannot read model spec at {spec_path}: {exc}") from exc
    model = build(spec)
    stored = {p.name: p for p in load_params(directory)}
    expected = model.params
    missing = [p.name for p in expected if p.name not in stored]
    extra = sorted(set(stored) - {p.name for p in expected})
    if missing or extra:
        raise CheckpointError(
            f"checkpoint parameters do not match spec: missing {missing}, unexpected {extra}"
        )
    for p in expected:
        value = stored[p.name].value
        if value.shape != p.value.shape:
            raise CheckpointError(
                f"parameter {p.name} has shape {value.shape}, spec derives {p.value.shape}"
            )
        p.value[...] = value
    return model


def load_preprocess(directory):
    """Read the preprocessing sidecar, or None when absent."""
    path = Path(directory) / CHECKPOINT_PREPROCESS
    if not path.exists():
        return None
    return json.loads(path.read_text())
