"""Dense symmetric linear algebra and PSD-ordering predicates.

Symmetric matrices are plain ``numpy.ndarray`` objects.  Anything entering the
library passes through :func:`as_sym`, which checks the input and rebuilds the
matrix from its upper triangle so that ``M[i, j] == M[j, i]`` holds exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConditioningError, DimensionError, InvalidInputError, SingularMatrixError

MAX_CONDITION = 1e12


@dataclass(frozen=True)
class Tolerance:
    psd_eig: float = 1e-9
    active_slack: float = 1e-6
    solver_kkt: float = 1e-8

    def __post_init__(self):
        for name in ("psd_eig", "active_slack", "solver_kkt"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise InvalidInputError(f"tolerance {name} must be positive, got {value!r}")
        if self.psd_eig >= 1:
            raise InvalidInputError("psd_eig must be < 1")

    def scale(self, M: np.ndarray) -> float:
        """Absolute eigenvalue threshold for ``M``: psd_eig * max(1, |trace M|)."""
        return self.psd_eig * max(1.0, abs(float(np.trace(M))))


DEFAULT_TOL = Tolerance()


def _check_finite(M: np.ndarray) -> None:
    if not np.all(np.isfinite(M)):
        raise InvalidInputError("matrix has non-finite entries")


def as_sym(M, rtol: float = 1e-12) -> np.ndarray:
    """Validate a square symmetric matrix and return it with exact symmetry.

    Asymmetry larger than ``rtol`` relative to the largest entry is rejected.
    A 0-d or 1x1 input is promoted to shape (1, 1).
    """
    M = np.array(M, dtype=float)
    if M.ndim == 0:
        M = M.reshape(1, 1)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise DimensionError(f"expected a non-empty square matrix, got shape {M.shape}")
    _check_finite(M)
    scale = max(1.0, float(np.max(np.abs(M))))
    if np.max(np.abs(M - M.T)) > rtol * scale:
        raise InvalidInputError("matrix is not symmetric")
    upper = np.triu(M)
    return upper + np.triu(M, 1).T


def symmetrize(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def min_eig(M: np.ndarray) -> float:
    M = np.asarray(M, dtype=float)
    _check_finite(M)
    return float(np.linalg.eigvalsh(M)[0])


def max_eig(M: np.ndarray) -> float:
    M = np.asarray(M, dtype=float)
    _check_finite(M)
    return float(np.linalg.eigvalsh(M)[-1])


def is_psd(M: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> bool:
    """True iff lambda_min(M) >= -tol.psd_eig * max(1, |trace M|)."""
    M = np.asarray(M, dtype=float)
    _check_finite(M)
    return min_eig(M) >= -tol.scale(M)


def psd_order(A: np.ndarray, B: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> bool:
    """Loewner order test ``A >= B``."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape:
        raise DimensionError(f"shape mismatch {A.shape} vs {B.shape}")
    return is_psd(A - B, tol)


def check_pd(A: np.ndarray, tol: Tolerance = DEFAULT_TOL, what: str = "matrix") -> np.ndarray:
    """Return the eigenvalues of ``A`` after rejecting singular or ill-conditioned input."""
    A = np.asarray(A, dtype=float)
    _check_finite(A)
    w = np.linalg.eigvalsh(A)
    if w[-1] <= 0.0 or w[0] <= np.finfo(float).eps * w[-1] * len(w):
        raise SingularMatrixError(f"{what} is not positive definite (min eigenvalue {w[0]:.3e})")
    if w[-1] / w[0] > MAX_CONDITION:
        raise ConditioningError(f"{what} condition number {w[-1] / w[0]:.3e} exceeds {MAX_CONDITION:.0e}")
    return w


def pd_inverse(A: np.ndarray, tol: Tolerance = DEFAULT_TOL, what: str = "matrix") -> np.ndarray:
    check_pd(A, tol, what)
    L = np.linalg.cholesky(A)
    Linv = np.linalg.inv(L)
    return symmetrize(Linv.T @ Linv)


def sqrtm_psd(A: np.ndarray) -> np.ndarray:
    """Symmetric square root of a PSD matrix (negative round-off eigenvalues clipped)."""
    w, Q = np.linalg.eigh(np.asarray(A, dtype=float))
    return symmetrize((Q * np.sqrt(np.clip(w, 0.0, None))) @ Q.T)


def simultaneous_diagonalize(A: np.ndarray, B: np.ndarray, tol: Tolerance = DEFAULT_TOL):
    """Congruence ``T`` with ``T A T^T = I`` and ``T B T^T = diag(D)``.

    ``A`` must be positive definite and ``B`` PSD.  Returns ``(T, D)`` where
    ``D`` is the vector of (non-negative) diagonal entries.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape:
        raise DimensionError(f"shape mismatch {A.shape} vs {B.shape}")
    check_pd(A, tol, "first matrix")
    L = np.linalg.cholesky(A)
    Linv = np.linalg.inv(L)
    C = symmetrize(Linv @ B @ Linv.T)
    D, Q = np.linalg.eigh(C)
    T = Q.T @ Linv
    return T, np.clip(D, 0.0, None)


def schur_expand_psd_check(top_left, off, bottom_right: float, tol: Tolerance = DEFAULT_TOL) -> bool:
    """PSD test of the bordered matrix ``[[top_left, off], [off^T, bottom_right]]``."""
    P = np.asarray(top_left, dtype=float)
    q = np.asarray(off, dtype=float).reshape(-1)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or q.shape[0] != P.shape[0]:
        raise DimensionError("bordered matrix blocks have inconsistent dimensions")
    n = P.shape[0]
    M = np.empty((n + 1, n + 1))
    M[:n, :n] = P
    M[:n, n] = q
    M[n, :n] = q
    M[n, n] = float(bottom_right)
    return is_psd(M, tol)
