"""Array plumbing for the forecasters: parameters, primitives with exact
gradients, initialization, and a finite-difference oracle.

Arrays are plain C-order float64 numpy ndarrays throughout; 32-bit floats
cannot meet the 1e-4 gradient-check tolerances used by the test suite.
Gradients accumulate: backward passes add into ``Parameter.grad`` and the
training loop zeroes them explicitly.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CheckpointError, ConfigError, ShapeError, StateError

PARAM_MANIFEST = "manifest.json"
PARAM_BLOB = "params.bin"


def as_array(x):
    """Coerce to a C-contiguous float64 ndarray."""
    return np.ascontiguousarray(np.asarray(x, dtype=np.float64))


def make_rng(seed):
    """Seedable deterministic generator (PCG64); same seed, same stream,
    on every platform."""
    return np.random.Generator(np.random.PCG64(int(seed)))


@dataclass
class Parameter:
    """A named value array paired with its accumulated gradient."""

    value: np.ndarray
    grad: np.ndarray = field(repr=False)
    name: str = ""

    @classmethod
    def create(cls, value, name):
        v = as_array(value)
        return cls(value=v, grad=np.zeros_like(v), name=name)

    def zero_grad(self):
        self.grad[...] = 0.0


# ---------------------------------------------------------------------------
# elementwise activations

def sigmoid(x):
    z = np.exp(-np.abs(x))
    return np.where(np.asarray(x) >= 0.0, 1.0 / (1.0 + z), z / (1.0 + z))


def sigmoid_grad(y):
    """Derivative from the forward output: sigma' = y (1 - y)."""
    return y * (1.0 - y)


def tanh_act(x):
    return np.tanh(x)


def tanh_grad(y):
    """Derivative from the forward output: tanh' = 1 - y^2."""
    return 1.0 - y * y


def relu(x):
    return np.maximum(x, 0.0)


def relu_grad(x):
    """Derivative from the forward input: 1 where x > 0 else 0."""
    return (np.asarray(x) > 0.0).astype(np.float64)


# ---------------------------------------------------------------------------
# affine primitive

class Affine:
    """Fully connected map y = W x + b with cached input.

    Accepts a single vector [in] or a batch [B, in]. ``backward`` adds into
    the parameter gradients and returns the gradient on the input.
    """

    def __init__(self, w, b, name="affine"):
        w = as_array(w)
        b = as_array(b)
        if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0]:
            raise ShapeError(f"affine wants W [out,in] and b [out], got {w.shape} and {b.shape}")
        self.w = Parameter.create(w, f"{name}.W")
        self.b = Parameter.create(b, f"{name}.b")
        self._cache = None

    @property
    def params(self):
        return [self.w, self.b]

    def forward(self, x):
        x = as_array(x)
        squeeze = x.ndim == 1
        xb = x[None, :] if squeeze else x
        if xb.ndim != 2 or xb.shape[1] != self.w.value.shape[1]:
            raise ShapeError(
                f"affine input shape {x.shape} does not match W {self.w.value.shape}"
            )
        self._cache = (xb, squeeze)
        y = xb @ self.w.value.T + self.b.value
        return y[0] if squeeze else y

    def backward(self, dy):
        if self._cache is None:
            raise StateError("affine backward called before forward")
        xb, squeeze = self._cache
        dy = as_array(dy)
        dyb = dy[None, :] if squeeze else dy
        if dyb.shape != (xb.shape[0], self.w.value.shape[0]):
            raise ShapeError(
                f"affine upstream shape {dy.shape} does not match output [{self.w.value.shape[0]}]"
            )
        self.w.grad += dyb.T @ xb
        self.b.grad += dyb.sum(axis=0)
        dx = dyb @ self.w.value
        return dx[0] if squeeze else dx


# ---------------------------------------------------------------------------
# flatten / concat

def concat_flatten(parts):
    """Row-major flatten of each part, concatenated in list order."""
    if not parts:
        raise ValueError("concat_flatten needs at least one part")
    return np.concatenate([as_array(p).reshape(-1) for p in parts])


def concat_flatten_backward(dvec, shapes):
    """Route a flat gradient back to parts of the given shapes (the exact
    adjoint of ``concat_flatten``)."""
    dvec = as_array(dvec)
    sizes = [int(np.prod(s)) for s in shapes]
    if dvec.shape != (sum(sizes),):
        raise ShapeError(f"gradient length {dvec.shape} != total part size {sum(sizes)}")
    out = []
    start = 0
    for s, n in zip(shapes, sizes):
        out.append(dvec[start:start + n].reshape(s))
        start += n
    return out


# ---------------------------------------------------------------------------
# initialization

def glorot_limit(shape):
    if len(shape) == 1:
        fan_in = fan_out = shape[0]
    elif len(shape) == 2:
        fan_out, fan_in = shape
    elif len(shape) == 3:
        # conv kernels [out, in, k]: receptive field scales both fans
        fan_out = shape[0] * shape[2]
        fan_in = shape[1] * shape[2]
    else:
        raise ConfigError(f"no fan rule for {len(shape)}-d shape {shape}")
    return np.sqrt(6.0 / (fan_in + fan_out))


def init_params(shape, scheme, rng=None):
    """Draw an initial value array: 'glorot_uniform', 'zeros' or 'ones'."""
    shape = tuple(int(s) for s in shape)
    if scheme == "zeros":
        return np.zeros(shape)
    if scheme == "ones":
        return np.ones(shape)
    if scheme == "glorot_uniform":
        if rng is None:
            raise ConfigError("glorot_uniform needs an rng")
        lim = glorot_limit(shape)
        return rng.uniform(-lim, lim, size=shape)
    raise ConfigError(f"unknown init scheme {scheme!r}")


# ---------------------------------------------------------------------------
# finite-difference oracle

def finite_diff_grad(loss_fn, params, h=1e-5):
    """Central-difference gradient of ``loss_fn()`` w.r.t. each parameter.

    ``loss_fn`` takes no arguments and must read the parameter values at
    call time; entries are perturbed in place and restored.
    """
    grads = []
    for p in params:
        g = np.zeros_like(p.value)
        flat_v = p.value.reshape(-1)
        flat_g = g.reshape(-1)
        for i in range(flat_v.size):
            orig = flat_v[i]
            flat_v[i] = orig + h
            f_plus = float(loss_fn())
            flat_v[i] = orig - h
            f_minus = float(loss_fn())
            flat_v[i] = orig
            flat_g[i] = (f_plus - f_minus) / (2.0 * h)
        grads.append(g)
    return grads


def max_rel_error(a, b, floor=1e-8):
    """max |a-b| / max(|a|, |b|, floor), elementwise."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom)) if a.size else 0.0


# ---------------------------------------------------------------------------
# parameter serialization: JSON manifest + little-endian float64 blob

def save_params(params, directory):
    """Write a parameter set as ``manifest.json`` plus ``params.bin``.

    The blob concatenates each value row-major as little-endian float64 in
    manifest order; round trips are bit-exact.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    names = [p.name for p in params]
    if len(set(names)) != len(names):
        raise CheckpointError(f"duplicate parameter names: {sorted(names)}")
    manifest = {
        "format_version": 1,
        "params": [{"name": p.name, "shape": list(p.value.shape)} for p in params],
    }
    (directory / PARAM_MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True))
    blob = b"".join(np.ascontiguousarray(p.value, dtype="<f8").tobytes() for p in params)
    (directory / PARAM_BLOB).write_bytes(blob)


def load_params(directory):
    """Read a parameter set saved by ``save_params``."""
    directory = Path(directory)
    try:
        manifest = json.loads((directory / PARAM_MANIFEST).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"cannot read parameter manifest in {directory}: {exc}") from exc
    if manifest.get("format_version") != 1:
        raise CheckpointError(f"unsupported manifest version {manifest.get('format_version')!r}")
    entries = manifest["params"]
    names = [e["name"] for e in entries]
    if len(set(names)) != len(names):
        raise CheckpointError("manifest lists a parameter name more than once")
    blob = (directory / PARAM_BLOB).read_bytes()
    total = sum(int(np.prod(e["shape"])) for e in entries)
    if len(blob) != total * 8:
        raise CheckpointError(
            f"parameter blob holds {len(blob)} bytes, manifest expects {total * 8}"
        )
    params = []
    offset = 0
    for e in entries:
        n = int(np.prod(e["shape"]))
        arr = np.frombuffer(blob, dtype="<f8", count=n, offset=offset * 8)
        params.append(Parameter.create(arr.reshape(e["shape"]), e["name"]))
        offset += n
    return params
