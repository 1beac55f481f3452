"""Two-level (block) Toeplitz algebra.

An NM x NM two-level Toeplitz matrix is an N x N block-Toeplitz matrix whose
blocks are M x M Toeplitz matrices. Entry ``(a*M + c, b*M + d)`` equals the
coefficient ``u[a - b, c - d]``. Coefficients are stored densely in a
``(2N - 1, 2M - 1)`` table with offset indexing, so ``u[i, j]`` lives at
``values[i + N - 1, j + M - 1]``.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._validation import check_count, check_hermitian


@dataclass(frozen=True)
class TwoLevelToeplitzCoeffs:
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.ndim != 2 or values.shape[0] % 2 == 0 or values.shape[1] % 2 == 0:
            raise ValueError(f"coefficient table must be (2N-1, 2M-1), got {values.shape}")
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, N, M):
        return cls(np.zeros((2 * N - 1, 2 * M - 1), dtype=complex))

    @property
    def N(self):
        return (self.values.shape[0] + 1) // 2

    @property
    def M(self):
        return (self.values.shape[1] + 1) // 2

    def __getitem__(self, ij):
        i, j = ij
        return self.values[i + self.N - 1, j + self.M - 1]

    def symmetry_error(self):
        """Largest |u[-i, -j] - conj(u[i, j])|."""
        return float(np.abs(self.values[::-1, ::-1] - self.values.conj()).max())

    def hermitian_part(self):
        return TwoLevelToeplitzCoeffs((self.values + self.values[::-1, ::-1].conj()) / 2)

    def __add__(self, other):
        return TwoLevelToeplitzCoeffs(self.values + other.values)

    def __sub__(self, other):
        return TwoLevelToeplitzCoeffs(self.values - other.values)

    def __mul__(self, scale):
        return TwoLevelToeplitzCoeffs(self.values * scale)

    __rmul__ = __mul__

    def norm(self):
        return float(np.linalg.norm(self.values))


@lru_cache(maxsize=32)
def _diagonal_labels(N, M):
    """Flat coefficient index of every matrix entry, and the entry count per coefficient."""
    a = np.arange(N)
    c = np.arange(M)
    di = (a[:, None] - a[None, :]) + N - 1
    dj = (c[:, None] - c[None, :]) + M - 1
    labels = di[:, None, :, None] * (2 * M - 1) + dj[None, :, None, :]
    labels = labels.reshape(N * M, N * M)
    counts = np.bincount(labels.ravel(), minlength=(2 * N - 1) * (2 * M - 1))
    labels.setflags(write=False)
    counts.setflags(write=False)
    return labels, counts


def _dims_of(Z, N, M):
    N = check_count(N, "N")
    M = check_count(M, "M")
    Z = np.asarray(Z, dtype=complex)
    if Z.shape != (N * M, N * M):
        raise ValueError(f"expected a {N * M}x{N * M} matrix, got {Z.shape}")
    return Z, N, M


def assemble(values, N, M):
    """Build the matrix from a raw coefficient table without any symmetry check."""
    labels, _ = _diagonal_labels(N, M)
    return np.asarray(values, dtype=complex).ravel()[labels]


def toeplitz_build(u, tol=1e-12):
    """Assemble S(T(u)); raises if ``u`` is not conjugate-symmetric to ``tol`` (relative)."""
    scale = max(np.abs(u.values).max(), 1.0)
    if u.symmetry_error() > tol * scale:
        raise ValueError("coefficients are not conjugate-symmetric; S(T(u)) would not be Hermitian")
    return assemble(u.values, u.N, u.M)


def single_atom_coeffs(f_d, f_s, N, M):
    """Coefficients of s s^H for the unit space-time atom s(f_d, f_s)."""
    i = np.arange(-(check_count(N, "N") - 1), N)
    j = np.arange(-(check_count(M, "M") - 1), M)
    return TwoLevelToeplitzCoeffs(np.exp(2j * np.pi * (i[:, None] * f_d + j[None, :] * f_s)))


def toeplitz_adjoint(Z, N, M):
    """Adjoint of ``assemble``: sum of Z over each two-level diagonal."""
    Z, N, M = _dims_of(Z, N, M)
    labels, counts = _diagonal_labels(N, M)
    flat = labels.ravel()
    sums = (np.bincount(flat, Z.real.ravel(), minlength=counts.size)
            + 1j * np.bincount(flat, Z.imag.ravel(), minlength=counts.size))
    return TwoLevelToeplitzCoeffs(sums.reshape(2 * N - 1, 2 * M - 1))


def toeplitz_project_coeffs(Z, N, M):
    """Coefficients of the Frobenius-nearest Hermitian two-level Toeplitz matrix."""
    _, counts = _diagonal_labels(N, M)
    sums = toeplitz_adjoint(Z, N, M).values
    mean = sums / counts.reshape(sums.shape)
    return TwoLevelToeplitzCoeffs(mean).hermitian_part()


def toeplitz_project(Z, N, M):
    """Orthogonal projection of Z onto Hermitian two-level Toeplitz matrices."""
    return assemble(toeplitz_project_coeffs(Z, N, M).values, N, M)


def hermitian_eigh(H):
    """Ascending eigenvalues and orthonormal eigenvectors of a Hermitian matrix."""
    H = np.asarray(H, dtype=complex)
    return np.linalg.eigh((H + H.conj().T) / 2)


def psd_project(H, atol=1e-8):
    """Frobenius-nearest PSD matrix: clip the negative eigenvalues of ``H`` to zero."""
    H = check_hermitian(H, "H", atol=atol)
    w, V = hermitian_eigh(H)
    w = np.clip(w, 0.0, None)
    out = (V * w) @ V.conj().T
    return (out + out.conj().T) / 2
