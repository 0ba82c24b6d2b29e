"""Roll-motion datasets from a forced nonlinear 1-DOF oscillator.

The ship is reduced to a single roll degree of freedom,

    phi_ddot = m(t) - 2 zeta w0 phi_dot - beta phi_dot |phi_dot|
               - w0^2 (phi + gamma phi^3)

driven by an effective wave-slope moment built from the same component
waves that produce the probe elevations:

    m(t) = gain * w0^2 * sin(chi) * sum_i k_i a_i
           cos(k_i x_ref cos(chi) - w_e_i t + eps_i)

with the moment reference at midship, x_ref = (0, 0). The sin(chi) factor
kills roll excitation in pure following/head seas and makes beam seas the
most severe heading. Integration is classical RK4 on a fine step; records
keep every ``output_dt`` sample with roll converted to degrees.

The default ``excitation_gain`` was calibrated once so that the shipped
sea-state-7 beam-sea run peaks in the 20-30 degree range, and is frozen
here and in ``configs/default.json``.
"""

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import kernels
from .errors import DataError, DivergenceError
from .seastate import SeaKinematics, discretize_spectrum, encounter_omegas

# frozen result of the one-off beam-sea amplitude calibration
DEFAULT_EXCITATION_GAIN = 0.62

RECORD_HEADER = "t,roll_deg,wave1,wave2,wave3"


@dataclass(frozen=True)
class RollParams:
    """Oscillator coefficients; none claim to match a real hull."""

    natural_period: float = 1.7
    linear_damping_ratio: float = 0.05
    quadratic_damping: float = 0.4
    cubic_restoring: float = 0.6
    excitation_gain: float = DEFAULT_EXCITATION_GAIN

    def __post_init__(self):
        if self.natural_period <= 0:
            raise ValueError(f"natural_period must be > 0, got {self.natural_period}")
        if self.linear_damping_ratio < 0:
            raise ValueError(f"linear_damping_ratio must be >= 0, got {self.linear_damping_ratio}")
        if self.quadratic_damping < 0:
            raise ValueError(f"quadratic_damping must be >= 0, got {self.quadratic_damping}")
        if self.excitation_gain < 0:
            raise ValueError(f"excitation_gain must be >= 0, got {self.excitation_gain}")

    @property
    def omega0(self):
        return 2.0 * math.pi / self.natural_period


@dataclass(frozen=True)
class RollState:
    """Integrator state: roll angle [rad] and roll rate [rad/s]."""

    phi: float = 0.0
    phi_dot: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.phi) and math.isfinite(self.phi_dot)):
            raise ValueError(f"state must be finite, got ({self.phi}, {self.phi_dot})")


@dataclass
class MotionRecord:
    """Uniformly sampled roll angle [deg] plus three wave-probe elevations [m]."""

    t: np.ndarray
    roll: np.ndarray
    wave: np.ndarray
    dt: float
    heading: float
    seed: int
    label: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=np.float64)
        self.roll = np.asarray(self.roll, dtype=np.float64)
        self.wave = np.asarray(self.wave, dtype=np.float64)
        n = self.t.shape[0]
        if self.roll.shape != (n,) or self.wave.shape[0] != n:
            raise DataError(
                f"record arrays disagree: t {self.t.shape}, roll {self.roll.shape}, wave {self.wave.shape}"
            )
        if self.dt <= 0:
            raise DataError(f"dt must be > 0, got {self.dt}")
        if n > 1:
            gaps = np.diff(self.t)
            if np.max(np.abs(gaps - self.dt)) > 1e-9 * max(1.0, self.dt):
                raise DataError("record time axis is not uniformly spaced at dt")

    def __len__(self):
        return self.t.shape[0]

    def checksum(self):
        h = hashlib.sha256()
        for arr in (self.t, self.roll, self.wave):
            h.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        return h.hexdigest()


def excitation_moment(waves, kin, params, t):
    """Normalized roll moment [rad/s^2] at time(s) ``t``."""
    chi = kin.heading_rad
    scale = params.excitation_gain * params.omega0 ** 2 * math.sin(chi)
    amps = scale * waves.wavenumbers * waves.amplitudes
    # moment reference is midship (0, 0): no spatial phase offset survives
    omega_e = encounter_omegas(waves, kin)
    t_arr = np.atleast_1d(np.asarray(t, dtype=np.float64))
    m = kernels.harmonic_sum(t_arr, amps, omega_e, waves.phases.copy())
    return float(m[0]) if np.isscalar(t) else m


def roll_rhs(state, m, params):
    """Time derivative of (phi, phi_dot) under moment ``m``.

    ``state`` may be a RollState or a plain (phi, phi_dot) pair.
    """
    phi, phi_dot = (state.phi, state.phi_dot) if isinstance(state, RollState) else state
    w0 = params.omega0
    phi_ddot = (
        m
        - 2.0 * params.linear_damping_ratio * w0 * phi_dot
        - params.quadratic_damping * phi_dot * abs(phi_dot)
        - w0 ** 2 * (phi + params.cubic_restoring * phi ** 3)
    )
    return phi_dot, phi_ddot


def step_rk4(state, t, dt, forcing, params):
    """One classical RK4 step; ``forcing`` is evaluated at t, t+dt/2, t+dt."""
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    m0 = forcing(t)
    m1 = forcing(t + 0.5 * dt)
    m2 = forcing(t + dt)

    k1p, k1v = roll_rhs(state, m0, params)
    s = (state.phi + 0.5 * dt * k1p, state.phi_dot + 0.5 * dt * k1v)
    k2p, k2v = roll_rhs(s, m1, params)
    s = (state.phi + 0.5 * dt * k2p, state.phi_dot + 0.5 * dt * k2v)
    k3p, k3v = roll_rhs(s, m1, params)
    s = (state.phi + dt * k3p, state.phi_dot + dt * k3v)
    k4p, k4v = roll_rhs(s, m2, params)

    phi = state.phi + dt * (k1p + 2.0 * k2p + 2.0 * k3p + k4p) / 6.0
    phi_dot = state.phi_dot + dt * (k1v + 2.0 * k2v + 2.0 * k3v + k4v) / 6.0
    if not (math.isfinite(phi) and math.isfinite(phi_dot)):
        raise DivergenceError(f"roll integration blew up at t = {t + dt:.6g} s")
    return RollState(phi=phi, phi_dot=phi_dot)


def mechanical_energy(phi, phi_dot, params):
    """Energy proxy phi_dot^2/2 + w0^2 (phi^2/2 + gamma phi^4/4)."""
    w0 = params.omega0
    return phi_dot ** 2 / 2.0 + w0 ** 2 * (phi ** 2 / 2.0 + params.cubic_restoring * phi ** 4 / 4.0)


def simulate_run(
    spectrum_params,
    roll_params,
    kin,
    probes,
    duration=80.0,
    sim_dt=0.005,
    output_dt=0.1,
    seed=0,
    label="",
):
    """Integrate one sea realization into a MotionRecord.

    The oscillator starts at rest, advances at ``sim_dt``, and is recorded
    every ``output_dt`` (which must be an integer multiple of ``sim_dt``)
    together with the probe elevations at the record times.
    """
    ratio = output_dt / sim_dt
    stride = int(round(ratio))
    if stride < 1 or abs(ratio - stride) > 1e-9:
        raise ValueError(f"output_dt {output_dt} is not an integer multiple of sim_dt {sim_dt}")

    waves = discretize_spectrum(spectrum_params, seed)
    n_steps = int(math.floor(duration / output_dt + 1e-9)) * stride

    # forcing on the half-step lattice so RK4 sees t, t+dt/2 and t+dt
    t_half = np.arange(2 * n_steps + 1) * (0.5 * sim_dt)
    chi = kin.heading_rad
    scale = roll_params.excitation_gain * roll_params.omega0 ** 2 * math.sin(chi)
    amps = scale * waves.wavenumbers * waves.amplitudes
    omega_e = encounter_omegas(waves, kin)
    m_half = kernels.harmonic_sum(t_half, amps, omega_e, waves.phases.copy())

    phi, _, blow = kernels.rk4_roll(
        m_half,
        sim_dt,
        roll_params.omega0,
        roll_params.linear_damping_ratio,
        roll_params.quadratic_damping,
        roll_params.cubic_restoring,
        0.0,
        0.0,
        stride,
    )
    if blow >= 0:
        raise DivergenceError(f"roll integration blew up at t = {blow * sim_dt:.6g} s")

    t_out = np.arange(phi.shape[0]) * output_dt
    wave = np.empty((t_out.shape[0], len(probes)))
    for j, probe in enumerate(probes):
        spatial = waves.wavenumbers * (probe.x * math.cos(chi) + probe.y * math.sin(chi))
        wave[:, j] = kernels.harmonic_sum(t_out, waves.amplitudes, omega_e, spatial + waves.phases)

    meta = {
        "spectrum": {
            "significant_wave_height": spectrum_params.significant_wave_height,
            "peak_period": spectrum_params.peak_period,
            "n_components": spectrum_params.n_components,
            "omega_min": spectrum_params.omega_min,
            "omega_max": spectrum_params.omega_max,
            "gravity": spectrum_params.gravity,
        },
        "roll": {
            "natural_period": roll_params.natural_period,
            "linear_damping_ratio": roll_params.linear_damping_ratio,
            "quadratic_damping": roll_params.quadratic_damping,
            "cubic_restoring": roll_params.cubic_restoring,
            "excitation_gain": roll_params.excitation_gain,
        },
        "kinematics": {"heading_angle": kin.heading_angle, "ship_speed": kin.ship_speed},
        "probes": [[p.x, p.y] for p in probes],
        "simulation": {"duration": duration, "sim_dt": sim_dt, "output_dt": output_dt, "seed": int(seed)},
    }
    return MotionRecord(
        t=t_out,
        roll=np.degrees(phi),
        wave=wave,
        dt=output_dt,
        heading=kin.heading_angle,
        seed=int(seed),
        label=label,
        meta=meta,
    )


# ---------------------------------------------------------------------------
# record CSV + metadata sidecar; also the ingestion contract for external data

def record_paths(path):
    path = Path(path)
    return path, path.with_name(path.stem + ".meta.json")


def save_record(record, path):
    """Write ``t,roll_deg,wave1,wave2,wave3`` CSV plus a JSON sidecar."""
    csv_path, meta_path = record_paths(path)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    lines = [RECORD_HEADER]
    for k in range(len(record)):
        vals = [record.t[k], record.roll[k], *record.wave[k]]
        lines.append(",".join(f"{v:.17g}" for v in vals))
    csv_path.write_text("\n".join(lines) + "\n")
    meta = {
        "label": record.label,
        "heading": record.heading,
        "seed": record.seed,
        "dt": record.dt,
        "n_samples": len(record),
        "checksum": record.checksum(),
        "parameters": record.meta,
    }
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True))


def load_record(path):
    """Read a record CSV (and its sidecar when present)."""
    csv_path, meta_path = record_paths(path)
    if not csv_path.exists():
        raise DataError(f"record file not found: {csv_path}")
    lines = csv_path.read_text().splitlines()
    if not lines or lines[0].strip() != RECORD_HEADER:
        raise DataError(f"{csv_path}: expected header {RECORD_HEADER!r}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 5:
            raise DataError(f"{csv_path}: line {lineno}: expected 5 fields, got {len(parts)}")
        try:
            rows.append([float(v) for v in parts])
        except ValueError as exc:
            raise DataError(f"{csv_path}: line {lineno}: {exc}") from exc
    if len(rows) < 2:
        raise DataError(f"{csv_path}: need at least 2 data rows")
    data = np.asarray(rows)
    meta = {}
    if meta_path.exists():
        meta = json.loads(meta_path.read_text())
    dt = meta.get("dt", float(data[1, 0] - data[0, 0]))
    return MotionRecord(
        t=data[:, 0],
        roll=data[:, 1],
        wave=data[:, 2:5],
        dt=dt,
        heading=float(meta.get("heading", 0.0)),
        seed=int(meta.get("seed", 0)),
        label=str(meta.get("label", csv_path.stem)),
        meta=meta.get("parameters", {}),
    )
