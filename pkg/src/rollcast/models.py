"""The three forecaster architectures behind a single contract.

* ``convlstmp`` — LSTM (64 hidden) and a two-stage 1-D conv stack
  (32 then 64 filters, kernel 3, ReLU) run in parallel over the same
  window; their flattened outputs are concatenated (conv features first)
  and decoded by fully connected layers 100 -> 50 -> p.
* ``lstm_only`` — a 100-unit LSTM; the whole hidden sequence feeds the
  same head.
* ``cnn_only`` — two conv layers with 64 filters each into the same head.

Heads use ReLU on the two hidden layers and a linear output, since
normalized targets may sit anywhere in (0, 1) and beyond. All weights are
glorot-uniform and biases zero, drawn in a fixed order from the spec
seed, so a spec fully determines the parameter set.
"""

from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import ConfigError, ShapeError, StateError
from .gradcore import Affine, as_array, init_params, make_rng, relu, relu_grad
from .layers import Conv1dLayer, LstmLayer

MODEL_KINDS = ("convlstmp", "lstm_only", "cnn_only")

_KIND_DEFAULTS = {
    "convlstmp": {"lstm_hidden": 64, "conv_filters": (32, 64)},
    "lstm_only": {"lstm_hidden": 100, "conv_filters": ()},
    "cnn_only": {"lstm_hidden": 0, "conv_filters": (64, 64)},
}


@dataclass(frozen=True)
class ModelSpec:
    """Architecture hyperparameters; everything a checkpoint needs to
    rebuild parameter shapes."""

    kind: str
    d: int
    p: int
    channels: int
    seed: int = 0
    lstm_hidden: int = 0
    conv_filters: tuple = ()
    kernel_size: int = 3
    head_units: tuple = (100, 50)
    lstm_head_mode: str = "all"

    def __post_init__(self):
        object.__setattr__(self, "conv_filters", tuple(int(f) for f in self.conv_filters))
        object.__setattr__(self, "head_units", tuple(int(u) for u in self.head_units))
        if self.kind not in MODEL_KINDS:
            raise ConfigError(f"unknown model kind {self.kind!r}; expected one of {MODEL_KINDS}")
        if self.d != self.p:
            raise ConfigError(f"lag length d={self.d} must equal horizon p={self.p}")
        if self.d < 3:
            raise ConfigError(f"lag length d={self.d} must be >= 3")
        if self.channels < 1:
            raise ConfigError(f"channels must be >= 1, got {self.channels}")
        if self.conv_filters:
            min_d = len(self.conv_filters) * (self.kernel_size - 1) + 1
            if self.d < min_d:
                raise ConfigError(
                    f"d={self.d} too short for {len(self.conv_filters)} valid convolutions "
                    f"with kernel {self.kernel_size}; need d >= {min_d}"
                )
        if self.lstm_head_mode not in ("all", "last"):
            raise ConfigError(f"lstm_head_mode must be 'all' or 'last', got {self.lstm_head_mode!r}")
        if len(self.head_units) != 2:
            raise ConfigError(f"head_units must list two hidden widths, got {self.head_units}")
        if self.kind != "cnn_only" and self.lstm_hidden < 1:
            raise ConfigError(f"{self.kind} needs lstm_hidden >= 1, got {self.lstm_hidden}")

    @classmethod
    def for_kind(cls, kind, d, p, channels, seed=0, **overrides):
        """Spec with the published layer-size defaults for ``kind``."""
        fields = dict(_KIND_DEFAULTS.get(kind, {}))
        fields.update(overrides)
        return cls(kind=kind, d=d, p=p, channels=channels, seed=seed, **fields)

    @property
    def has_lstm(self):
        return self.kind in ("convlstmp", "lstm_only")

    @property
    def has_conv(self):
        return bool(self.conv_filters)

    @property
    def conv_out_len(self):
        length = self.d
        for _ in self.conv_filters:
            length = length - self.kernel_size + 1
        return length

    @property
    def feature_width(self):
        """Width of the concatenated feature vector feeding the head."""
        width = 0
        if self.has_conv:
            width += self.conv_out_len * self.conv_filters[-1]
        if self.has_lstm:
            width += self.lstm_hidden * (self.d if self.lstm_head_mode == "all" else 1)
        return width

    def to_dict(self):
        out = asdict(self)
        out["conv_filters"] = list(self.conv_filters)
        out["head_units"] = list(self.head_units)
        return out

    @classmethod
    def from_dict(cls, data):
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown model spec fields: {sorted(unknown)}")
        return cls(**data)


@dataclass
class Forecaster:
    """A built model: spec plus the named parameter set and layer objects."""

    spec: ModelSpec
    lstm: LstmLayer = None
    convs: list = field(default_factory=list)
    head: list = field(default_factory=list)
    _cache: dict = field(default=None, repr=False)

    @property
    def params(self):
        out = []
        if self.lstm is not None:
            out.extend(self.lstm.params)
        for conv in self.convs:
            out.extend(conv.params)
        for fc in self.head:
            out.extend(fc.params)
        return out

    def param(self, name):
        for p in self.params:
            if p.name == name:
                return p
        raise KeyError(name)

    def zero_grads(self):
        for p in self.params:
            p.zero_grad()

    # ------------------------------------------------------------------
    def _lift(self, window):
        x = as_array(window)
        squeeze = x.ndim == 2
        xb = x[None] if squeeze else x
        if xb.ndim != 3 or xb.shape[1:] != (self.spec.d, self.spec.channels):
            raise ShapeError(
                f"window shape {x.shape} does not match spec "
                f"[d={self.spec.d}, channels={self.spec.channels}]"
            )
        return xb, squeeze

    def branch_features(self, xb):
        """Forward both branches; returns (conv_flat, lstm_flat) with
        caches for backward. Either entry is None when the branch is absent."""
        bsz = xb.shape[0]
        conv_flat = lstm_flat = None
        conv_pre = []
        if self.spec.has_conv:
            a = xb
            for conv in self.convs:
                y = conv.forward(a)
                conv_pre.append(y)
                a = relu(y)
            conv_flat = a.reshape(bsz, -1)
        if self.spec.has_lstm:
            h_seq = self.lstm.forward(xb)
            if self.spec.lstm_head_mode == "all":
                lstm_flat = h_seq.reshape(bsz, -1)
            else:
                lstm_flat = np.ascontiguousarray(h_seq[:, -1, :])
        return conv_flat, lstm_flat, conv_pre

    def forward(self, window):
        """Predict the next p normalized roll values for each window.

        window: [d, C] -> [p], or [B, d, C] -> [B, p].
        """
        xb, squeeze = self._lift(window)
        bsz = xb.shape[0]
        conv_flat, lstm_flat, conv_pre = self.branch_features(xb)
        feats = [f for f in (conv_flat, lstm_flat) if f is not None]
        z = feats[0] if len(feats) == 1 else np.concatenate(feats, axis=1)

        fc1, fc2, fc3 = self.head
        u1 = fc1.forward(z)
        r1 = relu(u1)
        u2 = fc2.forward(r1)
        r2 = relu(u2)
        out = fc3.forward(r2)
        self._cache = {
            "batch": bsz,
            "squeeze": squeeze,
            "conv_pre": conv_pre,
            "conv_width": 0 if conv_flat is None else conv_flat.shape[1],
            "u1": u1,
            "u2": u2,
        }
        return out[0] if squeeze else out

    def backward(self, dprediction):
        """Exact adjoint of ``forward``; adds into parameter grads and
        returns the gradient on the input window(s)."""
        if self._cache is None:
            raise StateError("model backward called before forward")
        cache = self._cache
        dp = as_array(dprediction)
        dpb = dp[None] if cache["squeeze"] else dp
        if dpb.shape != (cache["batch"], self.spec.p):
            raise ShapeError(f"upstream {dp.shape} does not match prediction [{self.spec.p}]")

        fc1, fc2, fc3 = self.head
        dr2 = fc3.backward(dpb)
        du2 = dr2 * relu_grad(cache["u2"])
        dr1 = fc2.backward(du2)
        du1 = dr1 * relu_grad(cache["u1"])
        dz = fc1.backward(du1)

        w = cache["conv_width"]
        dconv = dz[:, :w] if self.spec.has_conv else None
        dlstm = dz[:, w:] if self.spec.has_lstm else None

        dx = None
        if dlstm is not None:
            bsz = cache["batch"]
            if self.spec.lstm_head_mode == "all":
                dh = dlstm.reshape(bsz, self.spec.d, self.spec.lstm_hidden)
            else:
                dh = np.zeros((bsz, self.spec.d, self.spec.lstm_hidden))
                dh[:, -1, :] = dlstm
            dx = self.lstm.backward(dh)
        if dconv is not None:
            bsz = cache["batch"]
            da = dconv.reshape(bsz, self.spec.conv_out_len, self.spec.conv_filters[-1])
            for conv, pre in zip(reversed(self.convs), reversed(cache["conv_pre"])):
                da = conv.backward(da * relu_grad(pre))
            dx = da if dx is None else dx + da
        return dx[0] if cache["squeeze"] else dx


def build(spec):
    """Construct a Forecaster with seeded glorot weights and zero biases."""
    rng = make_rng(spec.seed)
    lstm = None
    if spec.has_lstm:
        lstm = LstmLayer(spec.channels, spec.lstm_hidden, rng=rng, name="lstm")
    convs = []
    c_in = spec.channels
    for idx, n_filters in enumerate(spec.conv_filters, start=1):
        convs.append(Conv1dLayer(c_in, n_filters, spec.kernel_size, rng=rng, name=f"conv{idx}"))
        c_in = n_filters
    head = []
    widths = [spec.feature_width, *spec.head_units, spec.p]
    for idx in range(3):
        w = init_params((widths[idx + 1], widths[idx]), "glorot_uniform", rng)
        head.append(Affine(w, np.zeros(widths[idx + 1]), name=f"fc{idx + 1}"))
    return Forecaster(spec=spec, lstm=lstm, convs=convs, head=head)


def forward(model, window):
    """Functional form of ``Forecaster.forward``."""
    return model.forward(window)


def backward(model, dprediction):
    """Functional form of ``Forecaster.backward``."""
    return model.backward(dprediction)
