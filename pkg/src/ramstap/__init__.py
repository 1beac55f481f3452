"""Gridless sparse-recovery STAP for non-sidelooking airborne radar.

Clutter covariance estimation from a handful of training snapshots by
reweighted atomic norm minimization over two-level Toeplitz matrices, with
sample-covariance, on-grid FOCUSS and plain atomic-norm baselines.
"""

from .estimators import AnmCovariance, FocussCovariance, RamCovariance, SMICovariance
from .evaluation import (
    capon_spectrum, cutoff_index, eigenspectrum, mean_loss_outside_notch, notch_center,
    sinr_loss, sinr_loss_curve, stap_weight)
from .gridless import (
    RamResult, RamSettings, anm_solve, ccm_from_toeplitz, epsilon_default, ram_solve)
from .ongrid import build_dictionary, focuss_solve, ongrid_ccm
from .scene import (
    RadarConfig, SnapshotSet, draw_snapshots, exact_ccm, make_clutter_scenario,
    patch_frequencies, smi_ccm, space_time_steering)
from .sdp import SdpProblem, SolverSettings, solve_weighted_subproblem
from .toeplitz import TwoLevelToeplitzCoeffs, toeplitz_adjoint, toeplitz_build, toeplitz_project

__version__ = "0.1.0"

__all__ = [
    "AnmCovariance", "FocussCovariance", "RamCovariance", "SMICovariance",
    "capon_spectrum", "cutoff_index", "eigenspectrum", "mean_loss_outside_notch",
    "notch_center", "sinr_loss", "sinr_loss_curve", "stap_weight",
    "RamResult", "RamSettings", "anm_solve", "ccm_from_toeplitz", "epsilon_default", "ram_solve",
    "build_dictionary", "focuss_solve", "ongrid_ccm",
    "RadarConfig", "SnapshotSet", "draw_snapshots", "exact_ccm", "make_clutter_scenario",
    "patch_frequencies", "smi_ccm", "space_time_steering",
    "SdpProblem", "SolverSettings", "solve_weighted_subproblem",
    "TwoLevelToeplitzCoeffs", "toeplitz_adjoint", "toeplitz_build", "toeplitz_project",
]
