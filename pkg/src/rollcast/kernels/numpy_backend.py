"""Pure-numpy reference implementations of the hot kernels.

Every function here has a signature-identical twin in ``numba_backend``;
the active set is chosen once at import time (see ``kernels.__init__``).
All arrays are C-contiguous float64. Reduction orders are fixed so that
repeated calls with identical inputs are bitwise reproducible.
"""

import numpy as np

NAME = "numpy"


def sigmoid(x):
    # exp(-|x|) keeps both branches overflow-free
    z = np.exp(-np.abs(x))
    return np.where(x >= 0.0, 1.0 / (1.0 + z), z / (1.0 + z))


def lstm_forward(x, wx, wh, b):
    """Run an LSTM over a batch of windows, keeping every hidden state.

    Parameters
    ----------
    x : [d, B, C] time-major inputs
    wx : [4H, C] stacked input weights, gate row order (forget, input,
        output, candidate)
    wh : [4H, H] stacked recurrent weights, same order
    b : [4H] stacked biases

    Returns
    -------
    h_seq : [d, B, H] hidden states for all d steps
    gates : [d, B, 4H] post-activation gate values (cached for backward)
    c_seq : [d, B, H] cell states
    tanh_c : [d, B, H] tanh of cell states
    """
    d, bsz, _ = x.shape
    hid = wh.shape[1]
    wx_t = np.ascontiguousarray(wx.T)
    wh_t = np.ascontiguousarray(wh.T)

    h_seq = np.empty((d, bsz, hid))
    c_seq = np.empty((d, bsz, hid))
    tanh_c = np.empty((d, bsz, hid))
    gates = np.empty((d, bsz, 4 * hid))

    h = np.zeros((bsz, hid))
    c = np.zeros((bsz, hid))
    for t in range(d):
        z = x[t] @ wx_t + h @ wh_t + b
        f = sigmoid(z[:, :hid])
        i = sigmoid(z[:, hid:2 * hid])
        o = sigmoid(z[:, 2 * hid:3 * hid])
        g = np.tanh(z[:, 3 * hid:])
        c = f * c + i * g
        tc = np.tanh(c)
        h = o * tc
        gates[t, :, :hid] = f
        gates[t, :, hid:2 * hid] = i
        gates[t, :, 2 * hid:3 * hid] = o
        gates[t, :, 3 * hid:] = g
        c_seq[t] = c
        tanh_c[t] = tc
        h_seq[t] = h
    return h_seq, gates, c_seq, tanh_c


def lstm_backward(dh_seq, x, wx, wh, gates, c_seq, tanh_c, h_seq):
    """Exact adjoint of ``lstm_forward`` (backpropagation through time).

    ``dh_seq`` is the upstream gradient on every hidden state, [d, B, H].
    Returns (dx, dwx, dwh, db) with the stacked-gate layouts of the
    forward arguments.
    """
    d, bsz, cin = x.shape
    hid = wh.shape[1]

    dz_seq = np.empty((d, bsz, 4 * hid))
    dh = np.zeros((bsz, hid))
    dc = np.zeros((bsz, hid))
    for t in range(d - 1, -1, -1):
        f = gates[t, :, :hid]
        i = gates[t, :, hid:2 * hid]
        o = gates[t, :, 2 * hid:3 * hid]
        g = gates[t, :, 3 * hid:]
        tc = tanh_c[t]
        c_prev = c_seq[t - 1] if t > 0 else np.zeros((bsz, hid))

        dh = dh + dh_seq[t]
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc * tc)
        df = dc * c_prev
        di = dc * g
        dg = dc * i

        dz_seq[t, :, :hid] = df * f * (1.0 - f)
        dz_seq[t, :, hid:2 * hid] = di * i * (1.0 - i)
        dz_seq[t, :, 2 * hid:3 * hid] = do * o * (1.0 - o)
        dz_seq[t, :, 3 * hid:] = dg * (1.0 - g * g)

        dh = dz_seq[t] @ wh
        dc = dc * f

    h_prev = np.concatenate([np.zeros((1, bsz, hid)), h_seq[:-1]], axis=0)
    dz_flat = dz_seq.reshape(d * bsz, 4 * hid)
    dx = (dz_flat @ wx).reshape(d, bsz, cin)
    dwx = dz_flat.T @ x.reshape(d * bsz, cin)
    dwh = dz_flat.T @ h_prev.reshape(d * bsz, hid)
    db = dz_flat.sum(axis=0)
    return dx, dwx, dwh, db


def conv1d_forward(x, w, b):
    """Valid cross-correlation along the time axis.

    x : [B, d, Cin], w : [F, Cin, K], b : [F] -> y : [B, d-K+1, F]
    """
    k = w.shape[2]
    win = np.lib.stride_tricks.sliding_window_view(x, k, axis=1)  # [B, L, Cin, K]
    y = np.tensordot(win, w, axes=([2, 3], [1, 2]))
    return y + b


def conv1d_backward(dy, x, w):
    """Adjoint of ``conv1d_forward``: returns (dx, dw, db)."""
    k = w.shape[2]
    out_len = dy.shape[1]
    win = np.lib.stride_tricks.sliding_window_view(x, k, axis=1)
    dw = np.tensordot(dy, win, axes=([0, 1], [0, 1]))
    db = dy.sum(axis=(0, 1))
    dx = np.zeros_like(x)
    contrib = np.tensordot(dy, w, axes=([2], [0]))  # [B, L, Cin, K]
    for a in range(k):
        dx[:, a:a + out_len, :] += contrib[:, :, :, a]
    return dx, dw, db


def harmonic_sum(t, amps, omega, phases):
    """sum_i amps[i] * cos(phases[i] - omega[i] * t) for each t.

    t : [n], amps/omega/phases : [m] -> [n]
    """
    arg = phases[None, :] - np.outer(t, omega)
    return np.cos(arg) @ amps


def rk4_roll(m_half, dt, omega0, zeta, beta_q, gamma_c, phi0, phidot0, stride):
    """Integrate the nonlinear roll oscillator with classical RK4.

    phi_ddot = m(t) - 2*zeta*omega0*phi_dot - beta_q*phi_dot*|phi_dot|
               - omega0^2 * (phi + gamma_c*phi^3)

    ``m_half`` holds the forcing on the half-step lattice t_j = j*dt/2,
    j = 0..2n, so each step reads m at t, t+dt/2 and t+dt. Outputs are
    decimated to every ``stride``-th step (including step 0).

    Returns (phi_out, phidot_out, blow_step) where blow_step is the index
    of the first non-finite step, or -1 when the run stayed finite.
    """
    n_steps = (m_half.shape[0] - 1) // 2
    n_out = n_steps // stride + 1
    phi_out = np.empty(n_out)
    phidot_out = np.empty(n_out)

    two_zw = 2.0 * zeta * omega0
    w2 = omega0 * omega0

    phi = phi0
    phidot = phidot0
    phi_out[0] = phi
    phidot_out[0] = phidot
    out_idx = 1
    for j in range(n_steps):
        m0 = m_half[2 * j]
        m1 = m_half[2 * j + 1]
        m2 = m_half[2 * j + 2]

        a1 = m0 - two_zw * phidot - beta_q * phidot * abs(phidot) - w2 * (phi + gamma_c * phi ** 3)
        k1p, k1v = phidot, a1

        p = phi + 0.5 * dt * k1p
        v = phidot + 0.5 * dt * k1v
        a2 = m1 - two_zw * v - beta_q * v * abs(v) - w2 * (p + gamma_c * p ** 3)
        k2p, k2v = v, a2

        p = phi + 0.5 * dt * k2p
        v = phidot + 0.5 * dt * k2v
        a3 = m1 - two_zw * v - beta_q * v * abs(v) - w2 * (p + gamma_c * p ** 3)
        k3p, k3v = v, a3

        p = phi + dt * k3p
        v = phidot + dt * k3v
        a4 = m2 - two_zw * v - beta_q * v * abs(v) - w2 * (p + gamma_c * p ** 3)
        k4p, k4v = v, a4

        phi = phi + dt * (k1p + 2.0 * k2p + 2.0 * k3p + k4p) / 6.0
        phidot = phidot + dt * (k1v + 2.0 * k2v + 2.0 * k3v + k4v) / 6.0

        if not (np.isfinite(phi) and np.isfinite(phidot)):
            return phi_out, phidot_out, j + 1
        if (j + 1) % stride == 0:
            phi_out[out_idx] = phi
            phidot_out[out_idx] = phidot
            out_idx += 1
    return phi_out, phidot_out, -1
