"""STAP weights and figures of merit: SINR loss, eigenspectra, Capon maps."""

from dataclasses import dataclass
import math

import numpy as np

from ._validation import check_hermitian
from .scene import boresight_azimuth, patch_frequencies, steering_matrix
from .ongrid import uniform_grid

EIG_FLOOR_DB = -320.0


@dataclass
class SinrLossCurve:
    doppler_grid: np.ndarray
    loss_db: np.ndarray


@dataclass
class SpectrumMap:
    doppler_grid: np.ndarray
    spatial_grid: np.ndarray
    power: np.ndarray


def default_doppler_grid(points=101):
    """``points`` uniform frequencies ending at 0.5, i.e. covering (-0.5, 0.5]."""
    return np.linspace(-0.5, 0.5, points + 1)[1:]


def target_spatial_frequency(config):
    """Spatial frequency of the array boresight (zero for an ideal ULA)."""
    return patch_frequencies(config, boresight_azimuth(config))[1]


def notch_center(config):
    """Doppler of the mainbeam clutter, where the SINR-loss notch sits."""
    return patch_frequencies(config, boresight_azimuth(config))[0]


def stap_weight(R_hat, s, loading=0.0):
    """w = (R_hat + loading I)^-1 s."""
    R = np.asarray(R_hat, dtype=complex)
    A = R + loading * np.eye(R.shape[0])
    try:
        w = np.linalg.solve(A, s)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("covariance is singular after diagonal loading") from exc
    if not np.all(np.isfinite(w)):
        raise np.linalg.LinAlgError("covariance is singular after diagonal loading")
    return w


def sinr_loss(w, R_exact, s, noise_power):
    """10 log10( sigma^2 |w^H s|^2 / (s^H s  w^H R w) )."""
    w = np.asarray(w, dtype=complex)
    s = np.asarray(s, dtype=complex)
    denom = np.real(np.vdot(s, s)) * np.real(np.vdot(w, R_exact @ w))
    if not denom > 0:
        raise ValueError("w^H R w is zero; SINR loss is undefined")
    ratio = noise_power * abs(np.vdot(w, s)) ** 2 / denom
    return 10.0 * math.log10(ratio)


def sinr_loss_curve(R_hat, R_exact, config, doppler_grid=None, target_spatial_freq=None,
                    loading=0.0):
    if doppler_grid is None:
        doppler_grid = default_doppler_grid()
    doppler_grid = np.asarray(doppler_grid, dtype=float)
    if doppler_grid.size == 0:
        raise ValueError("doppler_grid is empty")
    if target_spatial_freq is None:
        target_spatial_freq = target_spatial_frequency(config)
    N, M = config.num_pulses, config.num_elements
    S = steering_matrix(doppler_grid, np.full(doppler_grid.shape, target_spatial_freq), N, M)
    A = np.asarray(R_hat, dtype=complex) + loading * np.eye(N * M)
    Wt = np.linalg.solve(A, S)
    if not np.all(np.isfinite(Wt)):
        raise np.linalg.LinAlgError("covariance is singular after diagonal loading")
    num = config.noise_power * np.abs(np.sum(Wt.conj() * S, axis=0)) ** 2
    den = (N * M) * np.real(np.sum(Wt.conj() * (R_exact @ Wt), axis=0))
    return SinrLossCurve(doppler_grid, 10.0 * np.log10(num / den))


def mean_loss_outside_notch(curve, center, half_width=0.1):
    """Mean loss (dB) over grid points more than ``half_width`` from the notch, circularly."""
    dist = np.abs((curve.doppler_grid - center + 0.5) % 1.0 - 0.5)
    mask = dist > half_width
    return float(np.mean(curve.loss_db[mask]))


def eigenspectrum(R_hat):
    """Eigenvalues in dB, sorted descending, with zeros floored at -320 dB."""
    R = check_hermitian(R_hat, "R_hat", atol=1e-6)
    w = np.linalg.eigvalsh((R + R.conj().T) / 2)[::-1]
    with np.errstate(divide="ignore"):
        db = 10.0 * np.log10(np.clip(w, 0.0, None))
    return np.maximum(db, EIG_FLOOR_DB)


def cutoff_index(eig_db, noise_power=1.0, margin_db=3.0):
    """Number of eigenvalues more than ``margin_db`` above the noise floor.

    With the default 3 dB margin this counts modes whose clutter power is at
    least the noise power.
    """
    floor = 10.0 * math.log10(noise_power)
    return int(np.sum(np.asarray(eig_db) > floor + margin_db))


def capon_spectrum(R_hat, N, M, doppler_grid=None, spatial_grid=None, loading=0.0):
    """Minimum-variance power 1 / (s^H (R + loading I)^-1 s) on a Doppler x spatial grid."""
    if doppler_grid is None:
        doppler_grid = uniform_grid(101)
    if spatial_grid is None:
        spatial_grid = uniform_grid(101)
    doppler_grid = np.asarray(doppler_grid, dtype=float)
    spatial_grid = np.asarray(spatial_grid, dtype=float)
    R = np.asarray(R_hat, dtype=complex) + loading * np.eye(N * M)
    Rinv = np.linalg.inv(R)
    Rinv = (Rinv + Rinv.conj().T) / 2
    dd, ss = np.meshgrid(doppler_grid, spatial_grid, indexing="ij")
    S = steering_matrix(dd.ravel(), ss.ravel(), N, M)
    quad = np.real(np.sum(S.conj() * (Rinv @ S), axis=0))
    power = (1.0 / quad).reshape(dd.shape)
    return SpectrumMap(doppler_grid, spatial_grid, power)


def optimal_sinr_loss(R_exact, s, noise_power):
    """Loss of the clairvoyant weight R^-1 s; an upper bound for every other weight."""
    return sinr_loss(np.linalg.solve(R_exact, s), R_exact, s, noise_power)

