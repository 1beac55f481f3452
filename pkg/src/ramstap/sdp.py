"""ADMM solver for the weighted Toeplitz SDP solved at every reweighting step.

The problem is::

    minimize    tr(W S(T(u))) + tr(Phi)
    subject to  [[Phi, Xc^H], [Xc, S(T(u))]] >= 0
                ||Xc - X||_F^2 <= eps

It is split as ``Y = Z`` where ``Y`` ranges over the structured block matrices
(Hermitian Phi, two-level Toeplitz lower-right block, Xc inside the fidelity
ball) and ``Z`` over the PSD cone. Before iterating, the weight ``W = T T^H``
is absorbed by the congruence ``S -> T^H S T``, ``Xc -> T^H Xc``, which leaves
the PSD cone invariant and turns the linear objective into a plain trace, so
the eigenvalue spread of the reweighting matrix does not dictate a single
penalty for all directions. In these
working variables the structured step is a least-squares fit of the Toeplitz
coefficients plus a projection onto an ellipsoid, and the cone step is an
eigenvalue clip. The penalty rho is rebalanced every few iterations when one
residual dominates the other.

Internally the data are rescaled to unit RMS entry. The optimal (Phi, u, Xc)
are positively homogeneous of degree one in X (with eps scaled
quadratically), so the solution is scaled back exactly.
"""

from dataclasses import dataclass, field
import logging
import math

import numpy as np

from scipy.linalg import cho_factor, cho_solve

from ._validation import check_count, check_hermitian, check_positive
from .toeplitz import (
    TwoLevelToeplitzCoeffs, _diagonal_labels, assemble, hermitian_eigh, toeplitz_adjoint)

LOG = logging.getLogger(__name__)


@dataclass
class SolverSettings:
    rho: float = 1.0
    max_iterations: int = 5000
    tolerance: float = 1e-6
    over_relaxation: float = 1.6
    # residual balancing: rescale rho when one residual dominates the other
    adaptive_rho: bool = True
    adapt_every: int = 10

    def __post_init__(self):
        check_positive(self.rho, "rho")
        check_count(self.max_iterations, "max_iterations")
        check_positive(self.tolerance, "tolerance")
        if not 1.0 <= self.over_relaxation < 2.0:
            raise ValueError(f"over_relaxation must lie in [1, 2), got {self.over_relaxation}")
        check_count(self.adapt_every, "adapt_every")


@dataclass
class SdpProblem:
    weight: np.ndarray
    data: np.ndarray
    fidelity_radius: float
    num_pulses: int
    num_elements: int

    def __post_init__(self):
        N = check_count(self.num_pulses, "num_pulses")
        M = check_count(self.num_elements, "num_elements")
        data = np.asarray(self.data, dtype=complex)
        if data.ndim == 1:
            data = data[:, np.newaxis]
        if data.ndim != 2 or data.shape[0] != N * M or data.shape[1] == 0:
            raise ValueError(f"data must have shape ({N * M}, K), got {data.shape}")
        weight = check_hermitian(self.weight, "weight", atol=1e-10)
        if weight.shape != (N * M, N * M):
            raise ValueError(f"weight must be {N * M}x{N * M}, got {weight.shape}")
        w = np.linalg.eigvalsh(weight)
        if w[0] < -1e-10 * max(abs(w[-1]), 1.0):
            raise ValueError("weight must be positive semidefinite")
        self.fidelity_radius = check_positive(self.fidelity_radius, "fidelity_radius", strict=False)
        self.data = data
        self.weight = (weight + weight.conj().T) / 2

    @property
    def num_snapshots(self):
        return self.data.shape[1]

    @property
    def dims(self):
        return self.num_pulses, self.num_elements


@dataclass
class SdpSolution:
    phi: np.ndarray
    x_c: np.ndarray
    u: TwoLevelToeplitzCoeffs
    objective: float
    primal_residual: float
    dual_residual: float
    iterations: int
    converged: bool
    # PSD copy and dual matrix from the last ADMM step, kept for warm starts
    psd_copy: np.ndarray = field(default=None, repr=False)
    dual: np.ndarray = field(default=None, repr=False)
    rho: float = 1.0

    @property
    def toeplitz(self):
        return assemble(self.u.values, self.u.N, self.u.M)

    def assembled(self):
        return _block(self.phi, self.x_c, self.toeplitz)


@dataclass(frozen=True)
class KktResiduals:
    psd_violation: float
    relative_psd_violation: float
    fidelity_slack: float
    structure_violation: float
    objective: float

    def max_violation(self):
        return max(self.relative_psd_violation, max(self.fidelity_slack, 0.0),
                   self.structure_violation)


def _block(phi, x_c, S):
    top = np.hstack([phi, x_c.conj().T])
    bottom = np.hstack([x_c, S])
    return np.vstack([top, bottom])


def _psd_clip(H):
    w, V = hermitian_eigh(H)
    pos = w > 0
    Vp = V[:, pos]
    return (Vp * w[pos]) @ Vp.conj().T


def objective_value(weight, phi, S):
    return float(np.real(np.vdot(weight, S)) + np.real(np.trace(phi)))


def _zero_solution(problem):
    N, M = problem.dims
    K = problem.num_snapshots
    size = K + N * M
    return SdpSolution(
        phi=np.zeros((K, K), dtype=complex),
        x_c=np.zeros_like(problem.data),
        u=TwoLevelToeplitzCoeffs.zeros(N, M),
        objective=0.0, primal_residual=0.0, dual_residual=0.0,
        iterations=0, converged=True,
        psd_copy=np.zeros((size, size), dtype=complex),
        dual=np.zeros((size, size), dtype=complex))


class _Congruence:
    """Change of variables ``S' = T^H S T``, ``Xc' = T^H Xc`` with ``W = T T^H``.

    ``T = U diag(sqrt(d))`` from the eigendecomposition of W, so the working
    variables live in the weight eigenbasis and the objective tilt becomes the
    identity however badly conditioned W is. The Toeplitz step then becomes a
    least-squares solve against a Gram matrix over the coefficient table, and
    the fidelity ball becomes an axis-aligned ellipsoid. A singular W falls
    back to ``T = I`` with W kept as an explicit tilt.
    """

    def __init__(self, W, N, M, center, radius):
        self.N, self.M = N, M
        d, U = hermitian_eigh(W)
        if d[0] > 1e-12 * max(d[-1], 1e-300):
            self.tilt = np.eye(W.shape[0])
        else:
            d, U = np.ones_like(d), np.eye(W.shape[0], dtype=complex)
            self.tilt = W
        self.d = d
        self.sqrt_d = np.sqrt(d)[:, None]
        self.T = U * np.sqrt(d)
        self.T_inv_h = U / np.sqrt(d)
        self.b = U.conj().T @ center
        self.radius = radius
        self._gram = self._gram_factor()

    def _gram_factor(self):
        N, M = self.N, self.M
        labels, counts = _diagonal_labels(N, M)
        rows, cols = np.divmod(np.argsort(labels.ravel(), kind="stable"), N * M)
        splits = np.cumsum(counts)[:-1]
        TH = self.T.conj().T
        basis = np.empty((counts.size, N * M, N * M), dtype=complex)
        for k, (r, c) in enumerate(zip(np.split(rows, splits), np.split(cols, splits))):
            basis[k] = TH[:, r] @ self.T[c, :]
        G = basis.reshape(counts.size, -1)
        gram = G.conj() @ G.T
        return cho_factor((gram + gram.conj().T) / 2)

    def block_to_work(self, Z, K):
        """P Z P^H with P = blkdiag(I, T^H)."""
        out = Z.astype(complex, copy=True)
        out[K:, :] = self.T.conj().T @ out[K:, :]
        out[:, K:] = out[:, K:] @ self.T
        return out

    def block_from_work(self, Z, K):
        out = Z.astype(complex, copy=True)
        out[K:, :] = self.T_inv_h @ out[K:, :]
        out[:, K:] = out[:, K:] @ self.T_inv_h.conj().T
        return out

    def dual_to_work(self, Y, K):
        """Duals transform contragrediently: P^-H Y P^-1."""
        out = Y.astype(complex, copy=True)
        out[K:, :] = self.T_inv_h.conj().T @ out[K:, :]
        out[:, K:] = out[:, K:] @ self.T_inv_h
        return out

    def dual_from_work(self, Y, K):
        out = Y.astype(complex, copy=True)
        out[K:, :] = self.T @ out[K:, :]
        out[:, K:] = out[:, K:] @ self.T.conj().T
        return out

    def toeplitz_step(self, target):
        """u minimizing ||T^H S(u) T - target||_F, and the matrix T^H S(u) T."""
        N, M = self.N, self.M
        rhs = toeplitz_adjoint(self.T @ target @ self.T.conj().T, N, M).values.ravel()
        u = TwoLevelToeplitzCoeffs(cho_solve(self._gram, rhs).reshape(2 * N - 1, 2 * M - 1))
        u = u.hermitian_part()
        S_w = self.T.conj().T @ assemble(u.values, N, M) @ self.T
        return u, (S_w + S_w.conj().T) / 2

    def ellipsoid_step(self, v):
        """Project v onto {y : ||y / sqrt(d) - b||_F <= radius}."""
        sd = self.sqrt_d
        b = self.b
        if self.radius == 0:
            return sd * b
        if np.linalg.norm(v / sd - b) <= self.radius:
            return v
        # With z(mu) = (sqrt(d) v + mu b) / (d + mu), ||z - b||^2 is convex and
        # decreasing in mu, so Newton from mu = 0 climbs monotonically to the root.
        g2 = np.abs(sd * (v - sd * b)) ** 2
        d = self.d[:, None]
        r2 = self.radius ** 2
        mu = 0.0
        for _ in range(200):
            denom = d + mu
            f = np.sum(g2 / denom ** 2) - r2
            if f <= 1e-14 * r2:
                break
            mu += f / (2.0 * np.sum(g2 / denom ** 3))
        return sd * (sd * v + mu * b) / (d + mu)

    def x_from_work(self, x_w):
        return self.T_inv_h @ x_w


def solve_weighted_subproblem(problem, settings=None, warm_start=None):
    """Solve one weighted Toeplitz SDP by over-relaxed ADMM.

    ``warm_start`` may be a previous :class:`SdpSolution` for a problem with
    the same data and dimensions (the weight may differ); its PSD copy and
    dual matrix seed the iteration. Non-convergence is reported through
    ``converged`` rather than raised.
    """
    settings = settings or SolverSettings()
    N, M = problem.dims
    K = problem.num_snapshots
    NM = N * M
    X = problem.data
    eps = problem.fidelity_radius

    data_norm = np.linalg.norm(X)
    if data_norm ** 2 <= eps:
        # Xc = 0 is feasible and every objective term is nonnegative.
        return _zero_solution(problem)

    scale = data_norm / math.sqrt(K * NM)
    cong = _Congruence(problem.weight, N, M, X / scale, math.sqrt(eps) / scale)
    I_K = np.eye(K)
    tilt = cong.tilt

    rho = settings.rho
    alpha = settings.over_relaxation
    if warm_start is not None and warm_start.psd_copy is not None:
        Z = _psd_clip(cong.block_to_work(warm_start.psd_copy / scale, K))
        rho = warm_start.rho
        lam = cong.dual_to_work(warm_start.dual, K) / rho
        lam = (lam + lam.conj().T) / 2
    else:
        start = _block(I_K.astype(complex), X / scale, np.eye(NM, dtype=complex))
        Z = _psd_clip(cong.block_to_work(start, K))
        lam = np.zeros_like(Z)

    converged = False
    r_rel = s_rel = math.inf
    work_tol = settings.tolerance
    it = 0
    for it in range(1, settings.max_iterations + 1):
        V = Z - lam
        V11 = V[:K, :K]
        phi = (V11 + V11.conj().T) / 2 - I_K / rho
        x_w = cong.ellipsoid_step((V[K:, :K] + V[:K, K:].conj().T) / 2)
        u, S_w = cong.toeplitz_step(V[K:, K:] - tilt / rho)
        Y = _block(phi, x_w, S_w)

        Y_relaxed = alpha * Y + (1.0 - alpha) * Z
        Z_old = Z
        Z = _psd_clip(Y_relaxed + lam)
        lam = lam + Y_relaxed - Z

        r = np.linalg.norm(Y - Z)
        s = rho * np.linalg.norm(Z - Z_old)
        r_rel = r / max(np.linalg.norm(Y), np.linalg.norm(Z), 1e-300)
        s_rel = s / max(rho * np.linalg.norm(lam), 1e-300)
        if r_rel <= work_tol and s_rel <= work_tol:
            # the congruence distorts relative sizes, so confirm feasibility in the
            # original coordinates before stopping
            Y_o, Z_o = cong.block_from_work(Y, K), cong.block_from_work(Z, K)
            r_orig = np.linalg.norm(Y_o - Z_o) / max(np.linalg.norm(Y_o), np.linalg.norm(Z_o),
                                                     1e-300)
            if r_orig <= settings.tolerance:
                r_rel = max(r_rel, r_orig)
                converged = True
                break
            work_tol *= max(0.1, 0.5 * settings.tolerance / r_orig)
        if settings.adaptive_rho and it % settings.adapt_every == 0:
            if r_rel > 10.0 * s_rel:
                rho *= 2.0
                lam /= 2.0
            elif s_rel > 10.0 * r_rel:
                rho /= 2.0
                lam *= 2.0

    if not converged:
        LOG.info("ADMM stopped after %d iterations (primal %.2e, dual %.2e)", it, r_rel, s_rel)

    phi = phi * scale
    x_c = cong.x_from_work(x_w) * scale
    u = u * scale
    return SdpSolution(
        phi=phi, x_c=x_c, u=u,
        objective=objective_value(problem.weight, phi, assemble(u.values, N, M)),
        primal_residual=float(r_rel), dual_residual=float(s_rel),
        iterations=it, converged=converged,
        psd_copy=cong.block_from_work(Z, K) * scale,
        dual=cong.dual_from_work(lam * rho, K), rho=rho)


def kkt_residuals(problem, solution):
    """Feasibility and structure diagnostics for a candidate solution.

    ``psd_violation`` is the magnitude of the most negative eigenvalue of the
    assembled block matrix (zero when PSD); the relative version divides by
    its largest eigenvalue. ``fidelity_slack`` is ``||Xc - X||^2 - eps``
    relative to ``max(eps, ||X||^2)`` and is positive only when violated.
    ``structure_violation`` is the relative distance between the PSD copy
    (the PSD projection of the assembled matrix if none is stored) and the
    structured matrix.
    """
    A = solution.assembled()
    w = np.linalg.eigvalsh((A + A.conj().T) / 2)
    psd_violation = max(-w[0], 0.0)
    rel_psd = psd_violation / max(abs(w[-1]), 1e-300) if psd_violation > 0 else 0.0
    eps = problem.fidelity_radius
    gap = np.linalg.norm(solution.x_c - problem.data) ** 2 - eps
    fid = gap / max(eps, np.linalg.norm(problem.data) ** 2, 1e-300)
    copy = solution.psd_copy if solution.psd_copy is not None else _psd_clip(A)
    structure = np.linalg.norm(copy - A) / max(np.linalg.norm(A), np.linalg.norm(copy), 1e-300)
    return KktResiduals(
        psd_violation=float(psd_violation),
        relative_psd_violation=float(rel_psd),
        fidelity_slack=float(fid),
        structure_violation=float(structure),
        objective=objective_value(problem.weight, solution.phi, solution.toeplitz))
