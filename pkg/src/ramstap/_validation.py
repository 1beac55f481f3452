"""Input checks shared by the estimators and the functional core."""

import numbers

import numpy as np


class InvalidDimensionError(ValueError):
    """Raised when a count such as N, M or K is not a positive integer."""


def check_count(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise InvalidDimensionError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise InvalidDimensionError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_positive(value, name, strict=True):
    value = float(value)
    if not np.isfinite(value) or value < 0 or (strict and value == 0):
        bound = "> 0" if strict else ">= 0"
        raise ValueError(f"{name} must be finite and {bound}, got {value}")
    return value


def check_hermitian(matrix, name="matrix", atol=1e-8):
    """Return ``matrix`` as a square complex array, raising if it is not Hermitian.

    ``atol`` is relative to the largest absolute entry.
    """
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"{name} must be square, got shape {matrix.shape}")
    scale = max(np.abs(matrix).max(initial=0.0), 1.0)
    if np.abs(matrix - matrix.conj().T).max(initial=0.0) > atol * scale:
        raise ValueError(f"{name} is not Hermitian")
    return matrix


def check_snapshots(X, n_features=None, name="X"):
    """Validate an estimator input of shape (n_snapshots, n_features).

    sklearn's ``check_array`` refuses complex data, so this is a small
    complex-aware stand-in.
    """
    X = np.asarray(X)
    if X.ndim == 1:
        X = X[np.newaxis, :]
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-D (n_snapshots, n_features), got ndim={X.ndim}")
    if X.shape[0] == 0:
        raise ValueError(f"{name} contains no snapshots")
    if not np.issubdtype(X.dtype, np.number):
        raise ValueError(f"{name} must be numeric, got dtype {X.dtype}")
    X = X.astype(complex, copy=False)
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains NaN or infinity")
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(
            f"{name} has {X.shape[1]} features per snapshot, expected {n_features}")
    return X
