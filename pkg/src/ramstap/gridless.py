"""Gridless clutter recovery: atomic norm (ANM) and reweighted atomic norm (RAM).

RAM minimizes the log-det surrogate ``ln|S(T(u)) + zeta I| + tr(Phi)`` by
majorization-minimization. Every step linearizes the log-det at the current
iterate and solves the weighted SDP in :mod:`ramstap.sdp` with weight
``W = (S(T(u_i)) + zeta I)^-1``. The first step uses ``W = I``, which is
plain ANM, so ANM is RAM stopped after one iteration.
"""

from dataclasses import dataclass, field
import logging
import math

import numpy as np

from ._validation import check_count, check_positive
from .scene import SnapshotSet, smi_ccm
from .sdp import SdpProblem, SolverSettings, solve_weighted_subproblem
from .toeplitz import TwoLevelToeplitzCoeffs, assemble, hermitian_eigh

LOG = logging.getLogger(__name__)


def epsilon_default(noise_power, N, M, K):
    """Fidelity radius: mean squared noise norm plus two standard deviations, times K."""
    noise_power = check_positive(noise_power, "noise_power", strict=False)
    nm = check_count(N, "N") * check_count(M, "M")
    return check_count(K, "K") * noise_power * (nm + 2.0 * math.sqrt(nm))


@dataclass
class RamSettings:
    """Options for :func:`ram_solve`.

    ``zeta=None`` uses the noise power. ``epsilon=None`` uses
    :func:`epsilon_default`; otherwise it is the total radius for all K
    snapshots. The inner solves default to a relative tolerance of 1e-5:
    reweighted subproblems are degenerate and ADMM's tail is slow, while
    tightening further changes the recovered covariance by far less than
    the Monte Carlo scatter.
    """

    zeta: float = None
    max_mm_iterations: int = 12
    mm_tolerance: float = 1e-3
    epsilon: float = None
    sdp: SolverSettings = field(default_factory=lambda: SolverSettings(tolerance=1e-5))

    def __post_init__(self):
        if self.zeta is not None:
            check_positive(self.zeta, "zeta")
        check_count(self.max_mm_iterations, "max_mm_iterations")
        check_positive(self.mm_tolerance, "mm_tolerance", strict=False)
        if self.epsilon is not None:
            check_positive(self.epsilon, "epsilon", strict=False)


@dataclass(frozen=True)
class MMStep:
    surrogate: float
    sdp_objective: float
    sdp_iterations: int
    primal_residual: float
    dual_residual: float
    sdp_converged: bool
    relative_change: float


@dataclass
class RamResult:
    u: TwoLevelToeplitzCoeffs
    x_c: np.ndarray
    phi: np.ndarray
    surrogate_objectives: list
    mm_iterations: int
    steps: list
    zeta: float
    epsilon: float
    converged: bool

    @property
    def toeplitz(self):
        return assemble(self.u.values, self.u.N, self.u.M)


@dataclass
class CcmEstimate:
    matrix: np.ndarray
    clutter_rank_estimate: int
    noise_power_used: float


def _as_snapshot_set(snapshots):
    if not isinstance(snapshots, SnapshotSet):
        raise TypeError("expected a SnapshotSet (it carries the N, M dimensions)")
    return snapshots


def _clipped_eigh(S):
    w, U = hermitian_eigh(S)
    return np.clip(w, 0.0, None), U


def log_det_surrogate(S, phi, zeta):
    """ln|S + zeta I| + tr(Phi), with S clipped to the PSD cone."""
    w, _ = _clipped_eigh(S)
    return float(np.sum(np.log(w + zeta)) + np.real(np.trace(phi)))


def _reweight(S, zeta):
    w, U = _clipped_eigh(S)
    W = (U / (w + zeta)) @ U.conj().T
    return (W + W.conj().T) / 2


def ram_solve(snapshots, noise_power, settings=None):
    """Reweighted atomic norm minimization over K jointly sparse snapshots.

    Stops when the relative change of u drops below ``mm_tolerance`` or after
    ``max_mm_iterations`` steps. If an SDP step fails to converge the loop
    stops and the lowest-surrogate converged iterate is returned with
    ``converged=False``.
    """
    snapshots = _as_snapshot_set(snapshots)
    settings = settings or RamSettings()
    noise_power = check_positive(noise_power, "noise_power", strict=False)
    N, M = snapshots.dims
    X = snapshots.data
    K = X.shape[1]

    zeta = settings.zeta
    if zeta is None:
        if noise_power == 0:
            raise ValueError("zeta must be given explicitly when noise_power is 0")
        zeta = noise_power
    eps = settings.epsilon
    if eps is None:
        eps = epsilon_default(noise_power, N, M, K)

    W = np.eye(N * M, dtype=complex)
    previous = None
    surrogates = []
    steps = []
    accepted = []
    failed = None
    mm_converged = False
    for i in range(settings.max_mm_iterations):
        problem = SdpProblem(W, X, eps, N, M)
        sol = solve_weighted_subproblem(problem, settings.sdp, warm_start=previous)
        S = sol.toeplitz
        surrogate = log_det_surrogate(S, sol.phi, zeta)
        if previous is None:
            change = math.inf
        else:
            change = (sol.u - previous.u).norm() / max(previous.u.norm(), 1e-12)
        surrogates.append(surrogate)
        steps.append(MMStep(surrogate, sol.objective, sol.iterations, sol.primal_residual,
                            sol.dual_residual, sol.converged, change))
        LOG.debug("MM step %d: surrogate %.6g, change %.3g, %d ADMM iterations",
                  i + 1, surrogate, change, sol.iterations)
        if not sol.converged:
            failed = sol
            break
        accepted.append((surrogate, sol))
        if change < settings.mm_tolerance:
            mm_converged = True
            break
        W = _reweight(S, zeta)
        previous = sol

    if accepted:
        best = min(accepted, key=lambda item: item[0])[1] if failed else accepted[-1][1]
    else:
        best = failed
    converged = failed is None and (mm_converged or settings.max_mm_iterations == 1)
    return RamResult(
        u=best.u, x_c=best.x_c, phi=best.phi,
        surrogate_objectives=surrogates, mm_iterations=len(steps), steps=steps,
        zeta=float(zeta), epsilon=float(eps), converged=converged)


def anm_solve(snapshots, noise_power, settings=None):
    """Atomic norm minimization: a single weighted SDP with W = I."""
    settings = settings or RamSettings()
    one_step = RamSettings(
        zeta=settings.zeta if settings.zeta is not None else (noise_power or 1.0),
        max_mm_iterations=1, mm_tolerance=settings.mm_tolerance,
        epsilon=settings.epsilon, sdp=settings.sdp)
    return ram_solve(snapshots, noise_power, one_step)


def ccm_from_toeplitz(result, noise_power, rank_threshold=1e-3):
    """Covariance estimate from the recovered clutter subspace and denoised snapshots.

    With ``S(T(u)) = U diag(lambda) U^H``, each denoised snapshot contributes
    ``U diag(|U^H x_c|^2) U^H``; the contributions are averaged over the K
    snapshots and the noise floor is added back.
    """
    noise_power = check_positive(noise_power, "noise_power", strict=False)
    w, U = _clipped_eigh(result.toeplitz)
    w = np.where(w < 1e-10 * max(w.max(initial=0.0), 1e-300), 0.0, w)
    coeffs = np.abs(U.conj().T @ result.x_c) ** 2
    power = coeffs.mean(axis=1)
    R = (U * power) @ U.conj().T
    R = (R + R.conj().T) / 2 + noise_power * np.eye(U.shape[0])
    top = w.max(initial=0.0)
    rank = int(np.sum(w > rank_threshold * top)) if top > 0 else 0
    return CcmEstimate(matrix=R, clutter_rank_estimate=rank, noise_power_used=noise_power)


def estimate_noise_power(snapshots):
    """Median eigenvalue of the sample covariance. Only meaningful when K >= 2 NM."""
    snapshots = _as_snapshot_set(snapshots)
    nm = snapshots.data.shape[0]
    if snapshots.num_snapshots < 2 * nm:
        raise ValueError(
            f"noise estimate needs at least {2 * nm} snapshots, got {snapshots.num_snapshots}")
    return float(np.median(np.linalg.eigvalsh(smi_ccm(snapshots))))
