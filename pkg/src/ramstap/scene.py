"""Airborne ULA clutter scene: steering vectors, clutter patches, snapshots and covariances.

Frequencies are normalized (cycles per pulse for Doppler, cycles per element
for space) and wrapped into (-0.5, 0.5]. Space-time vectors are time-major:
``s = kron(s_doppler, s_spatial)``, so the Doppler index varies slowest.

Random draws use numpy's PCG64 bit generator (``np.random.default_rng``), so a
given seed reproduces the same snapshots on any platform.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from ._validation import check_count, check_positive


def wrap_frequency(f):
    """Wrap normalized frequencies into (-0.5, 0.5]."""
    f = np.asarray(f, dtype=float)
    out = f - np.ceil(f - 0.5)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class RadarConfig:
    """Platform, array and waveform parameters.

    Defaults are the simulation values used for the benchmark scenes
    (8 elements, 8 pulses, half-wavelength spacing, 300 Hz PRF, 40 dB CNR).
    ``crab_angle`` is in radians: 0 is sidelooking, pi/2 forward-looking.
    """

    num_pulses: int = 8
    num_elements: int = 8
    element_spacing: float = 0.3335
    wavelength: float = 0.667
    prf: float = 300.0
    platform_speed: float = 50.0
    platform_height: float = 9000.0
    crab_angle: float = 0.0
    noise_power: float = 1.0
    cnr_db: float = 40.0
    num_patches: int = 360
    range: float = 20000.0
    range_resolution: float = 37.5

    def __post_init__(self):
        check_count(self.num_pulses, "num_pulses")
        check_count(self.num_elements, "num_elements")
        check_count(self.num_patches, "num_patches")
        check_positive(self.element_spacing, "element_spacing")
        check_positive(self.wavelength, "wavelength")
        check_positive(self.prf, "prf")
        check_positive(self.noise_power, "noise_power")
        check_positive(self.platform_speed, "platform_speed", strict=False)
        check_positive(self.platform_height, "platform_height", strict=False)
        check_positive(self.range_resolution, "range_resolution")
        if not self.range > self.platform_height:
            raise ValueError(
                f"range ({self.range}) must exceed platform_height ({self.platform_height})")
        if not math.isfinite(self.crab_angle):
            raise ValueError("crab_angle must be finite")
        if math.isnan(self.cnr_db) or self.cnr_db == math.inf:
            raise ValueError(f"cnr_db must be finite or -inf, got {self.cnr_db}")

    @property
    def dof(self):
        return self.num_pulses * self.num_elements

    @property
    def elevation(self):
        """Flat-earth depression angle of the range ring, arcsin(H / R0)."""
        return math.asin(self.platform_height / self.range)

    @property
    def doppler_scale(self):
        """2 v_p / (lambda f_r): Doppler of a patch straight ahead at zero elevation."""
        return 2.0 * self.platform_speed / (self.wavelength * self.prf)

    @property
    def clutter_power(self):
        """Total clutter power per space-time channel."""
        if self.cnr_db == -math.inf:
            return 0.0
        return self.noise_power * 10.0 ** (self.cnr_db / 10.0)


@dataclass(frozen=True)
class ClutterPatch:
    azimuth: float
    elevation: float
    doppler_freq: float
    spatial_freq: float
    power: float


@dataclass
class SnapshotSet:
    """K training snapshots stacked as the columns of ``data`` (shape NM x K)."""

    data: np.ndarray
    num_pulses: int
    num_elements: int
    seed: object = field(default=None)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        if data.ndim == 1:
            data = data[:, np.newaxis]
        check_count(self.num_pulses, "num_pulses")
        check_count(self.num_elements, "num_elements")
        nm = self.num_pulses * self.num_elements
        if data.ndim != 2 or data.shape[0] != nm:
            raise ValueError(f"snapshot data must have shape ({nm}, K), got {data.shape}")
        if data.shape[1] == 0:
            raise ValueError("a SnapshotSet needs at least one snapshot")
        self.data = data

    @property
    def num_snapshots(self):
        return self.data.shape[1]

    @property
    def dims(self):
        return self.num_pulses, self.num_elements

    def __len__(self):
        return self.num_snapshots

    def __iter__(self):
        return iter(self.data.T)

    def permuted(self, order):
        return SnapshotSet(self.data[:, list(order)], self.num_pulses, self.num_elements, self.seed)


def time_steering(f_d, N):
    N = check_count(N, "N")
    return np.exp(2j * np.pi * np.arange(N) * f_d)


def space_steering(f_s, M):
    M = check_count(M, "M")
    return np.exp(2j * np.pi * np.arange(M) * f_s)


def space_time_steering(f_d, f_s, N, M):
    return np.kron(time_steering(f_d, N), space_steering(f_s, M))


def steering_matrix(doppler, spatial, N, M):
    """Columns are space_time_steering(doppler[i], spatial[i], N, M)."""
    doppler = np.atleast_1d(np.asarray(doppler, dtype=float))
    spatial = np.atleast_1d(np.asarray(spatial, dtype=float))
    n = np.arange(check_count(N, "N"))
    m = np.arange(check_count(M, "M"))
    phase = (n[:, None, None] * doppler + m[None, :, None] * spatial).reshape(N * M, -1)
    return np.exp(2j * np.pi * phase)


def patch_frequencies(config, azimuth):
    """Normalized (Doppler, spatial) frequency of ground at ``azimuth`` on the range ring.

    Azimuth is measured from the flight direction. The spatial term carries the
    d / lambda scale and the elevation factor.
    """
    cos_el = math.cos(config.elevation)
    f_d = config.doppler_scale * np.cos(azimuth) * cos_el
    f_s = config.element_spacing / config.wavelength * cos_el * np.cos(azimuth - config.crab_angle)
    return wrap_frequency(f_d), wrap_frequency(f_s)


def boresight_azimuth(config):
    """Azimuth of the array normal on the illuminated side (crab angle minus 90 degrees)."""
    return config.crab_angle - math.pi / 2


def make_clutter_scenario(config):
    """Clutter patches evenly spread over the half-space in front of the array.

    Patch azimuths sit at the centres of ``num_patches`` equal bins spanning
    +-90 degrees around the array boresight, and the total clutter power is
    split evenly so the per-channel CNR equals ``config.cnr_db``.
    """
    n = config.num_patches
    offsets = -math.pi / 2 + (np.arange(n) + 0.5) * math.pi / n
    azimuths = boresight_azimuth(config) + offsets
    f_d, f_s = patch_frequencies(config, azimuths)
    power = config.clutter_power / n
    el = config.elevation
    return [
        ClutterPatch(float(a), el, float(d), float(s), power)
        for a, d, s in zip(azimuths, np.atleast_1d(f_d), np.atleast_1d(f_s))
    ]


def _scenario_arrays(scenario):
    f_d = np.array([p.doppler_freq for p in scenario], dtype=float)
    f_s = np.array([p.spatial_freq for p in scenario], dtype=float)
    power = np.array([p.power for p in scenario], dtype=float)
    return f_d, f_s, power


def draw_snapshots(scenario, config, L, seed):
    """Draw L i.i.d. clutter-plus-noise snapshots.

    Patch amplitudes are redrawn for every snapshot as circular complex
    Gaussians of variance ``patch.power``; noise is white with variance
    ``config.noise_power`` per element.
    """
    L = check_count(L, "L")
    N, M = config.num_pulses, config.num_elements
    rng = np.random.default_rng(seed)
    f_d, f_s, power = _scenario_arrays(scenario)
    amp = np.sqrt(power / 2.0)[:, None] * (
        rng.standard_normal((len(power), L)) + 1j * rng.standard_normal((len(power), L)))
    noise = math.sqrt(config.noise_power / 2.0) * (
        rng.standard_normal((N * M, L)) + 1j * rng.standard_normal((N * M, L)))
    if len(power):
        clutter = steering_matrix(f_d, f_s, N, M) @ amp
    else:
        clutter = 0.0
    return SnapshotSet(clutter + noise, N, M, seed=seed)


def exact_ccm(scenario, config):
    """Clutter-plus-noise covariance sum_i p_i s_i s_i^H + sigma^2 I."""
    N, M = config.num_pulses, config.num_elements
    R = config.noise_power * np.eye(N * M, dtype=complex)
    if scenario:
        f_d, f_s, power = _scenario_arrays(scenario)
        S = steering_matrix(f_d, f_s, N, M)
        R += (S * power) @ S.conj().T
    return R


def smi_ccm(snapshots):
    """Sample covariance (1/L) sum_l x_l x_l^H."""
    X = snapshots.data if isinstance(snapshots, SnapshotSet) else np.asarray(snapshots, dtype=complex)
    if X.ndim != 2 or X.shape[1] == 0:
        raise ValueError("smi_ccm needs a non-empty NM x L snapshot matrix")
    R = X @ X.conj().T / X.shape[1]
    return (R + R.conj().T) / 2


def brennan_rank(config):
    """Brennan's clutter-rank estimate N + (M - 1) * beta for a sidelooking array."""
    beta = 2.0 * config.platform_speed / (config.element_spacing * config.prf)
    return int(round(config.num_pulses + (config.num_elements - 1) * beta))
