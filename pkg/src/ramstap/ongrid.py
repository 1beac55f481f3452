"""On-grid sparse-recovery baseline: steering dictionary, FOCUSS, covariance rebuild."""

from dataclasses import dataclass, field
import logging

import numpy as np

from ._validation import check_count, check_positive
from .scene import SnapshotSet, steering_matrix, wrap_frequency

LOG = logging.getLogger(__name__)


@dataclass(frozen=True)
class SteeringDictionary:
    """Space-time steering vectors on a uniform angle-Doppler grid.

    Column ``p * len(spatial_grid) + q`` is the atom at
    ``(doppler_grid[p], spatial_grid[q])``, matching ``kron(S_d, S_s)``.
    """

    atoms: np.ndarray
    doppler_grid: np.ndarray
    spatial_grid: np.ndarray
    rho_d: int
    rho_s: int

    @property
    def num_atoms(self):
        return self.atoms.shape[1]

    def grid_point(self, column):
        p, q = divmod(int(column), len(self.spatial_grid))
        return self.doppler_grid[p], self.spatial_grid[q]


@dataclass
class AngleDopplerProfile:
    """Recovered complex amplitudes, one row per grid point and one column per snapshot."""

    coefficients: np.ndarray
    iterations: int = 0
    converged: bool = True
    objective_history: list = field(default_factory=list)

    @property
    def magnitudes(self):
        return np.abs(self.coefficients)

    @property
    def row_power(self):
        """Per-grid-point power averaged over snapshots."""
        return np.mean(np.abs(self.coefficients) ** 2, axis=1)


def uniform_grid(n):
    """n evenly spaced frequencies in (-0.5, 0.5], sorted, always containing 0."""
    return np.sort(wrap_frequency(np.arange(n) / n))


def build_dictionary(config, rho_s=6, rho_d=6):
    rho_s = check_count(rho_s, "rho_s")
    rho_d = check_count(rho_d, "rho_d")
    N, M = config.num_pulses, config.num_elements
    f_d = uniform_grid(rho_d * N)
    f_s = uniform_grid(rho_s * M)
    dd, ss = np.meshgrid(f_d, f_s, indexing="ij")
    atoms = steering_matrix(dd.ravel(), ss.ravel(), N, M)
    return SteeringDictionary(atoms, f_d, f_s, rho_d, rho_s)


def focuss_objective(dictionary, X, A, reg, p):
    """||Psi A - X||_F^2 + (2 reg / p) sum_i ||A_i,:||^p, which each FOCUSS step does not increase."""
    fit = np.linalg.norm(dictionary.atoms @ A - X) ** 2
    rows = np.linalg.norm(A, axis=1)
    return float(fit + 2.0 * reg / p * np.sum(rows[rows > 0] ** p))


def focuss_solve(dictionary, snapshots, reg=1e-4, p=0.8, max_iter=30, tol=1e-4):
    """Regularized (M-)FOCUSS.

    Each step solves a weighted ridge problem
    ``A = W Psi_W^H (Psi_W Psi_W^H + reg I)^-1 X`` with ``Psi_W = Psi W`` and
    ``W = diag(||A_i,:||^(1 - p/2))`` from the previous iterate. Row norms are
    shared across snapshots, so all columns keep a common support. The start
    is the matched filter ``Psi^H X``.
    """
    X = snapshots.data if isinstance(snapshots, SnapshotSet) else np.asarray(snapshots, dtype=complex)
    if X.ndim == 1:
        X = X[:, np.newaxis]
    Psi = dictionary.atoms
    if X.shape[0] != Psi.shape[0]:
        raise ValueError(
            f"snapshots have length {X.shape[0]}, dictionary atoms have {Psi.shape[0]}")
    if not 0 < p <= 1:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    reg = check_positive(reg, "reg", strict=False)
    max_iter = check_count(max_iter, "max_iter")

    nm = Psi.shape[0]
    A = Psi.conj().T @ X / nm
    history = [focuss_objective(dictionary, X, A, reg, p)]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        w = np.linalg.norm(A, axis=1) ** (1.0 - p / 2.0)
        Psi_w = Psi * w
        G = Psi_w @ Psi_w.conj().T + reg * np.eye(nm)
        try:
            B = np.linalg.solve(G, X)
        except np.linalg.LinAlgError:
            B = np.linalg.lstsq(G, X, rcond=None)[0]
        A_new = w[:, None] * (Psi_w.conj().T @ B)
        change = np.linalg.norm(A_new - A) / max(np.linalg.norm(A), 1e-300)
        A = A_new
        history.append(focuss_objective(dictionary, X, A, reg, p))
        if change < tol:
            converged = True
            break
    if not converged:
        LOG.debug("FOCUSS hit max_iter=%d", max_iter)
    return AngleDopplerProfile(A, iterations=it, converged=converged, objective_history=history)


def ongrid_ccm(profile, dictionary, noise_power, truncate=1e-6):
    """Covariance rebuilt from the profile: Psi diag(mean_k |a_ik|^2) Psi^H + sigma^2 I.

    Grid points whose power is below ``truncate`` times the strongest one
    are dropped.
    """
    noise_power = check_positive(noise_power, "noise_power", strict=False)
    power = profile.row_power
    keep = power > truncate * power.max(initial=0.0)
    Psi = dictionary.atoms[:, keep]
    R = (Psi * power[keep]) @ Psi.conj().T
    R = (R + R.conj().T) / 2
    return R + noise_power * np.eye(dictionary.atoms.shape[0])
