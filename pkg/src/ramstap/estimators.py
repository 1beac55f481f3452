"""Clutter covariance estimators with a scikit-learn style interface.

Each estimator takes training snapshots as rows, ``X`` of shape
``(n_snapshots, num_pulses * num_elements)``, like ``sklearn.covariance``,
and stores the estimate in ``covariance_``. Snapshots are time-major
space-time vectors (see :mod:`ramstap.scene`).
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_count, check_positive, check_snapshots
from .evaluation import stap_weight
from .gridless import RamSettings, anm_solve, ccm_from_toeplitz, ram_solve
from .ongrid import build_dictionary, focuss_solve, ongrid_ccm
from .scene import RadarConfig, SnapshotSet, smi_ccm
from .sdp import SolverSettings


class _CovarianceMixin:
    def _snapshot_set(self, X):
        N = check_count(self.num_pulses, "num_pulses")
        M = check_count(self.num_elements, "num_elements")
        X = check_snapshots(X, n_features=N * M)
        self.n_features_in_ = X.shape[1]
        return SnapshotSet(X.T, N, M)

    def weights(self, steering, loading=None):
        """Adaptive weights ``(covariance_ + loading I)^-1 s`` for one or more steering vectors.

        ``steering`` is a vector or a matrix with one steering vector per
        column. ``loading=None`` uses the estimator's noise power.
        """
        check_is_fitted(self, "covariance_")
        if loading is None:
            loading = getattr(self, "noise_power", 0.0)
        return stap_weight(self.covariance_, np.asarray(steering, dtype=complex), loading)


class SMICovariance(_CovarianceMixin, BaseEstimator):
    """Sample covariance of the training snapshots."""

    def __init__(self, num_pulses=8, num_elements=8, noise_power=1.0):
        self.num_pulses = num_pulses
        self.num_elements = num_elements
        self.noise_power = noise_power

    def fit(self, X, y=None):
        snapshots = self._snapshot_set(X)
        self.covariance_ = smi_ccm(snapshots)
        return self


class FocussCovariance(_CovarianceMixin, BaseEstimator):
    """On-grid sparse recovery with regularized M-FOCUSS.

    The angle-Doppler plane is sampled ``rho_d * num_pulses`` by
    ``rho_s * num_elements`` times; the covariance is rebuilt from the
    recovered grid powers plus the noise floor.
    """

    def __init__(self, num_pulses=8, num_elements=8, noise_power=1.0, rho_s=6, rho_d=6,
                 reg=1e-4, p=0.8, max_iter=30, tol=1e-4, truncate=1e-6):
        self.num_pulses = num_pulses
        self.num_elements = num_elements
        self.noise_power = noise_power
        self.rho_s = rho_s
        self.rho_d = rho_d
        self.reg = reg
        self.p = p
        self.max_iter = max_iter
        self.tol = tol
        self.truncate = truncate

    def fit(self, X, y=None):
        snapshots = self._snapshot_set(X)
        noise_power = check_positive(self.noise_power, "noise_power", strict=False)
        config = RadarConfig(num_pulses=self.num_pulses, num_elements=self.num_elements)
        self.dictionary_ = build_dictionary(config, self.rho_s, self.rho_d)
        self.profile_ = focuss_solve(self.dictionary_, snapshots, self.reg, self.p,
                                     self.max_iter, self.tol)
        self.covariance_ = ongrid_ccm(self.profile_, self.dictionary_, noise_power, self.truncate)
        return self


class _GridlessCovariance(_CovarianceMixin, BaseEstimator):
    max_mm_iterations = 1
    mm_tolerance = 1e-3

    def _settings(self):
        sdp = SolverSettings(tolerance=self.sdp_tolerance, max_iterations=self.sdp_max_iterations)
        return RamSettings(zeta=self.zeta, epsilon=self.epsilon,
                           max_mm_iterations=self.max_mm_iterations,
                           mm_tolerance=self.mm_tolerance, sdp=sdp)

    def fit(self, X, y=None):
        snapshots = self._snapshot_set(X)
        noise_power = check_positive(self.noise_power, "noise_power", strict=False)
        self.result_ = self._solve(snapshots, noise_power)
        estimate = ccm_from_toeplitz(self.result_, noise_power)
        self.covariance_ = estimate.matrix
        self.clutter_rank_ = estimate.clutter_rank_estimate
        self.denoised_ = self.result_.x_c.T
        return self


class AnmCovariance(_GridlessCovariance):
    """Gridless recovery by atomic norm minimization (one unweighted SDP).

    ``epsilon=None`` uses the default fidelity radius for the number of
    snapshots passed to ``fit``.
    """

    def __init__(self, num_pulses=8, num_elements=8, noise_power=1.0, zeta=None, epsilon=None,
                 sdp_tolerance=1e-5, sdp_max_iterations=5000):
        self.num_pulses = num_pulses
        self.num_elements = num_elements
        self.noise_power = noise_power
        self.zeta = zeta
        self.epsilon = epsilon
        self.sdp_tolerance = sdp_tolerance
        self.sdp_max_iterations = sdp_max_iterations

    def _solve(self, snapshots, noise_power):
        return anm_solve(snapshots, noise_power, self._settings())


class RamCovariance(_GridlessCovariance):
    """Gridless recovery by reweighted atomic norm minimization.

    ``zeta=None`` uses the noise power and ``epsilon=None`` the default
    fidelity radius for the number of snapshots passed to ``fit``.
    """

    def __init__(self, num_pulses=8, num_elements=8, noise_power=1.0, zeta=None, epsilon=None,
                 max_mm_iterations=12, mm_tolerance=1e-3, sdp_tolerance=1e-5,
                 sdp_max_iterations=5000):
        self.num_pulses = num_pulses
        self.num_elements = num_elements
        self.noise_power = noise_power
        self.zeta = zeta
        self.epsilon = epsilon
        self.max_mm_iterations = max_mm_iterations
        self.mm_tolerance = mm_tolerance
        self.sdp_tolerance = sdp_tolerance
        self.sdp_max_iterations = sdp_max_iterations

    def _solve(self, snapshots, noise_power):
        return ram_solve(snapshots, noise_power, self._settings())
