"""Feature-extraction layers: a full-sequence LSTM and a valid 1-D
convolution, each with an exact backward pass.

Both layers accept a single window ([d, C] in, [d, H] / [L, F] out) or a
batch with a leading batch axis. Forward caches what backward needs;
backward accumulates into the parameter gradients and returns the
gradient on the inputs. The convolution is a cross-correlation (no kernel
flip) with no padding and no pooling, so the output length is
d - kernel_size + 1.
"""

import numpy as np

from . import kernels
from .errors import ShapeError, StateError
from .gradcore import Parameter, as_array, init_params, sigmoid

GATE_ORDER = ("f", "i", "o", "c")


class LstmLayer:
    """LSTM returning the whole hidden-state sequence, not just the last
    state — downstream heads read all d hidden vectors."""

    def __init__(self, input_size, hidden_size, rng=None, name="lstm"):
        self.input_size = int(input_size)
        self.hidden_size = int(hidden_size)
        self.name = name

        def weight(shape):
            if rng is None:
                return np.zeros(shape)
            return init_params(shape, "glorot_uniform", rng)

        h, c = self.hidden_size, self.input_size
        self._wh = {}
        self._wx = {}
        self._b = {}
        for g in GATE_ORDER:
            self._wh[g] = Parameter.create(weight((h, h)), f"{name}.W_{g}h")
            self._wx[g] = Parameter.create(weight((h, c)), f"{name}.W_{g}x")
            self._b[g] = Parameter.create(np.zeros(h), f"{name}.b_{g}")
        self._cache = None

    # per-gate views, handy in tests
    def weight_h(self, gate):
        return self._wh[gate]

    def weight_x(self, gate):
        return self._wx[gate]

    def bias(self, gate):
        return self._b[gate]

    @property
    def params(self):
        out = []
        for g in GATE_ORDER:
            out.extend([self._wh[g], self._wx[g]])
        out.extend(self._b[g] for g in GATE_ORDER)
        return out

    def _stacked(self):
        wx = np.concatenate([self._wx[g].value for g in GATE_ORDER], axis=0)
        wh = np.concatenate([self._wh[g].value for g in GATE_ORDER], axis=0)
        b = np.concatenate([self._b[g].value for g in GATE_ORDER])
        return wx, wh, b

    def cell(self, x_t, h_prev, c_prev):
        """Single recurrence step (no cache): returns (h_t, c_t)."""
        x_t = as_array(x_t)
        h_prev = as_array(h_prev)
        c_prev = as_array(c_prev)
        if x_t.shape != (self.input_size,) or h_prev.shape != (self.hidden_size,):
            raise ShapeError(
                f"cell wants x [{self.input_size}] and h [{self.hidden_size}], "
                f"got {x_t.shape} and {h_prev.shape}"
            )
        gates = {}
        for g in GATE_ORDER:
            z = self._wh[g].value @ h_prev + self._wx[g].value @ x_t + self._b[g].value
            gates[g] = np.tanh(z) if g == "c" else sigmoid(z)
        c_t = gates["f"] * c_prev + gates["i"] * gates["c"]
        h_t = gates["o"] * np.tanh(c_t)
        return h_t, c_t

    def forward(self, x):
        """Run the recurrence from (h0, c0) = (0, 0) over d steps.

        x: [d, C] or [B, d, C] -> hidden sequence [d, H] or [B, d, H].
        """
        x = as_array(x)
        squeeze = x.ndim == 2
        xb = x[None] if squeeze else x
        if xb.ndim != 3 or xb.shape[2] != self.input_size:
            raise ShapeError(f"lstm wants [..., d, {self.input_size}], got {x.shape}")
        if xb.shape[1] < 1:
            raise ShapeError("lstm needs at least one timestep")
        xt = np.ascontiguousarray(np.swapaxes(xb, 0, 1))  # [d, B, C]
        wx, wh, b = self._stacked()
        h_seq, gates, c_seq, tanh_c = kernels.lstm_forward(xt, wx, wh, b)
        self._cache = (xt, wx, wh, gates, c_seq, tanh_c, h_seq, squeeze)
        out = np.swapaxes(h_seq, 0, 1)
        return np.ascontiguousarray(out[0] if squeeze else out)

    def backward(self, dh):
        """BPTT through the cached forward; returns gradient on inputs."""
        if self._cache is None:
            raise StateError("lstm backward called before forward")
        xt, wx, wh, gates, c_seq, tanh_c, h_seq, squeeze = self._cache
        dh = as_array(dh)
        dhb = dh[None] if squeeze else dh
        d, bsz = xt.shape[0], xt.shape[1]
        if dhb.shape != (bsz, d, self.hidden_size):
            raise ShapeError(f"upstream {dh.shape} does not match hidden sequence")
        dht = np.ascontiguousarray(np.swapaxes(dhb, 0, 1))
        dx, dwx, dwh, db = kernels.lstm_backward(dht, xt, wx, wh, gates, c_seq, tanh_c, h_seq)
        h = self.hidden_size
        for k, g in enumerate(GATE_ORDER):
            self._wx[g].grad += dwx[k * h:(k + 1) * h]
            self._wh[g].grad += dwh[k * h:(k + 1) * h]
            self._b[g].grad += db[k * h:(k + 1) * h]
        out = np.swapaxes(dx, 0, 1)
        return np.ascontiguousarray(out[0] if squeeze else out)


class Conv1dLayer:
    """Valid cross-correlation over the time axis with per-filter bias."""

    def __init__(self, in_channels, out_channels, kernel_size, rng=None, name="conv"):
        self.in_channels = int(in_channels)
        self.out_channels = int(out_channels)
        self.kernel_size = int(kernel_size)
        if self.kernel_size < 1:
            raise ShapeError(f"kernel_size must be >= 1, got {kernel_size}")
        shape = (self.out_channels, self.in_channels, self.kernel_size)
        w = init_params(shape, "glorot_uniform", rng) if rng is not None else np.zeros(shape)
        self.w = Parameter.create(w, f"{name}.w")
        self.b = Parameter.create(np.zeros(self.out_channels), f"{name}.b")
        self._cache = None

    @property
    def params(self):
        return [self.w, self.b]

    def forward(self, x):
        """x: [d, Cin] or [B, d, Cin] -> [d-K+1, F] or [B, d-K+1, F]."""
        x = as_array(x)
        squeeze = x.ndim == 2
        xb = x[None] if squeeze else x
        if xb.ndim != 3 or xb.shape[2] != self.in_channels:
            raise ShapeError(f"conv wants [..., d, {self.in_channels}], got {x.shape}")
        if xb.shape[1] < self.kernel_size:
            raise ShapeError(
                f"window length {xb.shape[1]} is shorter than kernel size {self.kernel_size}"
            )
        y = kernels.conv1d_forward(np.ascontiguousarray(xb), self.w.value, self.b.value)
        self._cache = (np.ascontiguousarray(xb), squeeze)
        return y[0] if squeeze else y

    def backward(self, dy):
        if self._cache is None:
            raise StateError("conv backward called before forward")
        xb, squeeze = self._cache
        dy = as_array(dy)
        dyb = dy[None] if squeeze else dy
        out_len = xb.shape[1] - self.kernel_size + 1
        if dyb.shape != (xb.shape[0], out_len, self.out_channels):
            raise ShapeError(f"upstream {dy.shape} does not match conv output")
        dx, dw, db = kernels.conv1d_backward(np.ascontiguousarray(dyb), xb, self.w.value)
        self.w.grad += dw
        self.b.grad += db
        return dx[0] if squeeze else dx


def lstm_cell(x_t, h_prev, c_prev, layer):
    """Functional form of one LSTM step on ``layer``'s parameters."""
    return layer.cell(x_t, h_prev, c_prev)


def lstm_sequence(inputs, layer):
    """Functional form of the cached full-sequence forward."""
    return layer.forward(inputs)


def conv1d_forward(x, layer):
    """Functional form of the cached convolution forward."""
    return layer.forward(x)
