"""Long-crested irregular sea surface from a two-parameter wave spectrum.

The spectral density is the two-parameter ITTC form

    S(w) = A / w^5 * exp(-B / w^4),  A = 173 Hs^2 / T1^4,  B = 691 / T1^4

with the characteristic period T1 tied to the peak period by
T1 = Tp / 1.296 (so the density peaks at 2*pi/Tp). The sea is realized as
a superposition of regular component waves at equal frequency intervals
with random phases from a seeded PCG64 generator, which makes every
realization reproducible from (params, seed).

Deep-water dispersion k = w^2/g is assumed, and a ship moving at speed U
with heading chi sees each component at its encounter frequency
w_e = w - k U cos(chi) (180 deg = head waves, 90 deg = port beam).
"""

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .errors import ShapeError
from .gradcore import make_rng

DEFAULT_GRAVITY = 9.81

# default discretization band as multiples of the peak frequency; captures
# more than 99% of the zeroth spectral moment
OMEGA_LO_FACTOR = 0.25
OMEGA_HI_FACTOR = 4.0


@dataclass(frozen=True)
class SpectrumParams:
    """Sea-state description: Hs [m], Tp [s], and the discretization band.

    ``omega_min``/``omega_max`` default to 0.25 and 4 times the peak
    frequency 2*pi/Tp when not given.
    """

    significant_wave_height: float
    peak_period: float
    n_components: int = 240
    omega_min: float = None
    omega_max: float = None
    gravity: float = DEFAULT_GRAVITY

    def __post_init__(self):
        if self.significant_wave_height <= 0:
            raise ValueError(f"significant_wave_height must be > 0, got {self.significant_wave_height}")
        if self.peak_period <= 0:
            raise ValueError(f"peak_period must be > 0, got {self.peak_period}")
        if self.n_components < 1:
            raise ValueError(f"n_components must be >= 1, got {self.n_components}")
        wp = 2.0 * math.pi / self.peak_period
        if self.omega_min is None:
            object.__setattr__(self, "omega_min", OMEGA_LO_FACTOR * wp)
        if self.omega_max is None:
            object.__setattr__(self, "omega_max", OMEGA_HI_FACTOR * wp)
        if not (0.0 < self.omega_min < self.omega_max):
            raise ValueError(f"need 0 < omega_min < omega_max, got ({self.omega_min}, {self.omega_max})")

    @property
    def peak_omega(self):
        return 2.0 * math.pi / self.peak_period


@dataclass(frozen=True)
class Probe:
    """Wave-probe location in the ship-fixed horizontal plane [m]."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"probe coordinates must be finite, got ({self.x}, {self.y})")


@dataclass(frozen=True)
class SeaKinematics:
    """Wave heading [deg] and forward speed [m/s] of the ship."""

    heading_angle: float
    ship_speed: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.heading_angle < 360.0):
            raise ValueError(f"heading_angle must lie in [0, 360), got {self.heading_angle}")
        if self.ship_speed < 0:
            raise ValueError(f"ship_speed must be >= 0, got {self.ship_speed}")

    @property
    def heading_rad(self):
        return math.radians(self.heading_angle)


@dataclass(frozen=True)
class ComponentWaveSet:
    """Discretized spectrum: one regular wave per frequency bin."""

    omegas: np.ndarray
    amplitudes: np.ndarray
    phases: np.ndarray
    wavenumbers: np.ndarray
    source_params: SpectrumParams
    seed: int = field(default=0)

    def __len__(self):
        return self.omegas.shape[0]


def spectral_density(omega, params):
    """ITTC two-parameter spectral density S(omega) in m^2 s.

    Accepts a scalar or an array of angular frequencies [rad/s]; every
    frequency must be positive.
    """
    omega_arr = np.asarray(omega, dtype=np.float64)
    if np.any(omega_arr <= 0.0):
        raise ValueError("spectral_density needs omega > 0")
    t1 = params.peak_period / 1.296
    a = 173.0 * params.significant_wave_height ** 2 / t1 ** 4
    b = 691.0 / t1 ** 4
    s = (a / omega_arr ** 5) * np.exp(-b / omega_arr ** 4)
    return float(s) if np.isscalar(omega) else s


def discretize_spectrum(params, seed):
    """Split the spectrum into equally spaced component waves.

    Frequencies sit at bin midpoints, amplitudes carry the bin energy
    (a_i = sqrt(2 S(w_i) dw)), and phases are i.i.d. uniform on [0, 2*pi)
    from a PCG64 stream seeded with ``seed``.
    """
    n = params.n_components
    delta = (params.omega_max - params.omega_min) / n
    omegas = params.omega_min + (np.arange(n) + 0.5) * delta
    amplitudes = np.sqrt(2.0 * spectral_density(omegas, params) * delta)
    phases = make_rng(seed).uniform(0.0, 2.0 * math.pi, size=n)
    wavenumbers = omegas ** 2 / params.gravity
    return ComponentWaveSet(
        omegas=omegas,
        amplitudes=amplitudes,
        phases=phases,
        wavenumbers=wavenumbers,
        source_params=params,
        seed=int(seed),
    )


def encounter_omegas(waves, kin):
    """Encounter frequencies w_e = w - k U cos(chi) for every component."""
    return waves.omegas - waves.wavenumbers * kin.ship_speed * math.cos(kin.heading_rad)


def probe_elevation(waves, probe, kin, t):
    """Surface elevation [m] at a ship-fixed probe for time(s) ``t``.

    eta(t) = sum_i a_i cos(k_i (x cos chi + y sin chi) - w_e_i t + eps_i)
    """
    chi = kin.heading_rad
    spatial = waves.wavenumbers * (probe.x * math.cos(chi) + probe.y * math.sin(chi))
    omega_e = encounter_omegas(waves, kin)
    t_arr = np.atleast_1d(np.asarray(t, dtype=np.float64))
    eta = kernels.harmonic_sum(t_arr, waves.amplitudes, omega_e, spatial + waves.phases)
    return float(eta[0]) if np.isscalar(t) else eta


def synthesize_probe_series(waves, probes, kin, duration, dt):
    """Tabulate elevations at several probes on a uniform time grid.

    Returns (t, table) where ``t`` has floor(duration/dt)+1 entries and
    ``table`` is [n_steps x n_probes], one column per probe.
    """
    if duration <= 0 or dt <= 0:
        raise ValueError(f"duration and dt must be > 0, got {duration}, {dt}")
    if not probes:
        raise ValueError("at least one probe is required")
    # tiny slack so exact multiples like 80/0.1 do not floor one short
    n_steps = int(math.floor(duration / dt + 1e-9)) + 1
    t = np.arange(n_steps) * dt
    table = np.empty((n_steps, len(probes)))
    for j, probe in enumerate(probes):
        table[:, j] = probe_elevation(waves, probe, kin, t)
    return t, table


def band_energy(params, n_grid=20001):
    """Trapezoid integral of S over the discretization band [m^2].

    Independent check value for the component energy sum a_i^2 / 2.
    """
    grid = np.linspace(params.omega_min, params.omega_max, n_grid)
    return float(np.trapezoid(spectral_density(grid, params), grid))


def zeroth_moment(params):
    """m0 = (Hs/4)^2, the target elevation variance [m^2]."""
    return (params.significant_wave_height / 4.0) ** 2


def save_elevation_csv(path, t, table):
    """Write ``t,probe1,...,probeN`` rows at 17 significant digits."""
    t = np.asarray(t, dtype=np.float64)
    table = np.asarray(table, dtype=np.float64)
    if table.ndim != 2 or table.shape[0] != t.shape[0]:
        raise ShapeError(f"elevation table {table.shape} does not match {t.shape[0]} times")
    header = "t," + ",".join(f"probe{j + 1}" for j in range(table.shape[1]))
    lines = [header]
    for k in range(t.shape[0]):
        row = [f"{t[k]:.17g}"] + [f"{v:.17g}" for v in table[k]]
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")
