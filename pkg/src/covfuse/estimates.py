"""Mean/covariance estimates, ellipsoid triples and the Mahalanobis gate."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateTripleError, DimensionError, InconsistentJointError, InvalidInputError
from .psd import DEFAULT_TOL, Tolerance, as_sym, check_pd, is_psd, pd_inverse, symmetrize


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Estimate:
    """A mean vector with a PSD error covariance (the 1-sigma ellipsoid ``E(mean, cov)``)."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(-1)
        if not np.all(np.isfinite(mean)):
            raise InvalidInputError("mean has non-finite entries")
        cov = as_sym(self.cov)
        if cov.shape[0] != mean.shape[0]:
            raise DimensionError(f"mean has length {mean.shape[0]} but cov is {cov.shape}")
        if not is_psd(cov):
            raise InvalidInputError("covariance is not positive semidefinite")
        object.__setattr__(self, "mean", _frozen(mean))
        object.__setattr__(self, "cov", _frozen(cov))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "cov": self.cov.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Estimate":
        try:
            return cls(d["mean"], d["cov"])
        except KeyError as exc:
            raise InvalidInputError(f"estimate is missing field {exc}") from None

    def allclose(self, other: "Estimate", atol: float = 1e-10) -> bool:
        return (
            self.dim == other.dim
            and np.allclose(self.mean, other.mean, rtol=0, atol=atol)
            and np.allclose(self.cov, other.cov, rtol=0, atol=atol)
        )

    def __repr__(self):
        return f"Estimate(mean={self.mean.tolist()}, cov={self.cov.tolist()})"


@dataclass(frozen=True, eq=False)
class EllipsoidTriple:
    """Quadratic-form ellipsoid ``{x : x^T A x + 2 x^T b + c <= 0}``.

    Triples are homogeneous, so construction normalizes them to
    ``b^T A^-1 b - c == 1``.
    """

    A: np.ndarray
    b: np.ndarray
    c: float

    def __post_init__(self):
        A = as_sym(self.A)
        b = np.array(self.b, dtype=float).reshape(-1)
        if b.shape[0] != A.shape[0]:
            raise DimensionError("triple b has wrong length")
        Ainv = pd_inverse(A, what="triple A")
        level = float(b @ Ainv @ b) - float(self.c)
        if not level > 0:
            raise DegenerateTripleError(f"b^T A^-1 b - c = {level:.3e} must be positive")
        object.__setattr__(self, "A", _frozen(A / level))
        object.__setattr__(self, "b", _frozen(b / level))
        object.__setattr__(self, "c", float(self.c) / level)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """Quadratic form value; ``<= 0`` inside.  ``x`` may be (n,) or (k, n)."""
        x = np.atleast_2d(x)
        return np.einsum("ki,ij,kj->k", x, self.A, x) + 2 * x @ self.b + self.c


@dataclass(frozen=True, eq=False)
class JointEstimate:
    block_means: list
    block_covs: list
    cross: Optional[dict] = field(default=None)

    @property
    def mean(self) -> np.ndarray:
        return np.concatenate(self.block_means)

    @property
    def cov(self) -> np.ndarray:
        sizes = [c.shape[0] for c in self.block_covs]
        offs = np.concatenate([[0], np.cumsum(sizes)])
        J = np.zeros((offs[-1], offs[-1]))
        for i, C in enumerate(self.block_covs):
            J[offs[i]:offs[i + 1], offs[i]:offs[i + 1]] = C
        for (i, j), X in (self.cross or {}).items():
            J[offs[i]:offs[i + 1], offs[j]:offs[j + 1]] = X
            J[offs[j]:offs[j + 1], offs[i]:offs[i + 1]] = X.T
        return J


def to_triple(e: Estimate) -> EllipsoidTriple:
    """``{A = U^-1, b = -U^-1 u, c = u^T U^-1 u - 1}`` for the estimate ``(u, U)``."""
    W = pd_inverse(e.cov, what="covariance")
    b = -W @ e.mean
    return EllipsoidTriple(W, b, float(e.mean @ W @ e.mean) - 1.0)


def from_triple(t: EllipsoidTriple) -> Estimate:
    Ainv = pd_inverse(t.A, what="triple A")
    level = float(t.b @ Ainv @ t.b) - t.c
    if not level > 0:
        raise DegenerateTripleError("degenerate triple")
    return Estimate(-Ainv @ t.b, symmetrize(level * Ainv))


def mahalanobis(a: Estimate, b: Estimate) -> float:
    """Squared distance ``(a-b)^T (A+B)^-1 (a-b)``."""
    if a.dim != b.dim:
        raise DimensionError(f"dimension mismatch {a.dim} vs {b.dim}")
    S = a.cov + b.cov
    check_pd(S, what="A + B")
    d = a.mean - b.mean
    return max(0.0, float(d @ np.linalg.solve(S, d)))


def assemble_joint(
    estimates: Sequence[Estimate],
    cross: Optional[dict] = None,
    tol: Tolerance = DEFAULT_TOL,
) -> JointEstimate:
    """Stack estimates into a joint estimate.

    ``cross`` maps index pairs ``(i, j)`` with ``i < j`` to the cross-covariance
    block between estimates i and j.  Missing pairs are zero.
    """
    if not estimates:
        raise InvalidInputError("at least one estimate is required")
    blocks = {}
    for key, X in (cross or {}).items():
        i, j = key
        if i == j or not (0 <= i < len(estimates) and 0 <= j < len(estimates)):
            raise InvalidInputError(f"bad cross-covariance index {key}")
        if i > j:
            i, j, X = j, i, np.asarray(X, dtype=float).T
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape != (estimates[i].dim, estimates[j].dim):
            raise DimensionError(f"cross block {key} has shape {X.shape}")
        blocks[(i, j)] = X
    joint = JointEstimate(
        [e.mean for e in estimates], [e.cov for e in estimates], blocks or None
    )
    if blocks and not is_psd(joint.cov, tol):
        raise InconsistentJointError("cross-covariance blocks make the joint covariance indefinite")
    return joint
