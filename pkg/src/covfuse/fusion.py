"""Kalman fusion, Covariance Addition and Covariance Intersection."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionError, InvalidInputError
from .estimates import Estimate
from .psd import DEFAULT_TOL, Tolerance, pd_inverse, psd_order, sqrtm_psd, symmetrize
from .search import golden_section


@dataclass(frozen=True)
class OmegaWeights:
    weights: tuple
    simplex: bool = False

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        if not w:
            raise InvalidInputError("no weights")
        if any(not (0.0 <= x <= 1.0) for x in w):
            raise InvalidInputError(f"weights must lie in [0, 1], got {w}")
        if self.simplex and abs(sum(w) - 1.0) > 1e-9:
            raise InvalidInputError(f"simplex weights must sum to 1, got {sum(w)!r}")
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return len(self.weights)

    def __getitem__(self, i):
        return self.weights[i]

    def as_array(self) -> np.ndarray:
        return np.array(self.weights)


@dataclass(frozen=True)
class FusionResult:
    estimate: Estimate
    weights: Optional[OmegaWeights]
    objective: float
    status: str = "converged"


@dataclass(frozen=True)
class CIConfig:
    """Weight-search settings for :func:`ci_fuse`.

    ``criterion`` is ``"det"`` (default) or ``"trace"``.  Weights below ``eps``
    are clamped to zero.
    """

    criterion: str = "det"
    eps: float = 1e-8
    xtol: float = 1e-10
    max_iter: int = 5000
    gtol: float = 1e-13


def _check_same_dim(estimates: Sequence[Estimate]) -> int:
    if not estimates:
        raise InvalidInputError("at least one estimate is required")
    n = estimates[0].dim
    for e in estimates:
        if e.dim != n:
            raise DimensionError(f"dimension mismatch {e.dim} vs {n}")
    return n


def _logdet(C: np.ndarray) -> float:
    sign, value = np.linalg.slogdet(C)
    return value if sign > 0 else -np.inf


def _information_fuse(infos, means, weights):
    J = sum(w * P for w, P in zip(weights, infos))
    C = symmetrize(np.linalg.inv(J))
    c = C @ sum(w * (P @ a) for w, P, a in zip(weights, infos, means))
    return c, C


def kalman_fuse(estimates: Sequence[Estimate], tol: Tolerance = DEFAULT_TOL) -> FusionResult:
    """Fuse independent estimates: ``C = (sum A_i^-1)^-1``, ``c = C sum A_i^-1 a_i``."""
    _check_same_dim(estimates)
    infos = [pd_inverse(e.cov, tol, "input covariance") for e in estimates]
    c, C = _information_fuse(infos, [e.mean for e in estimates], [1.0] * len(estimates))
    return FusionResult(Estimate(c, C), None, _logdet(C))


def covariance_addition(e: Estimate, x, omega: float) -> np.ndarray:
    """Conservative covariance of ``a + x`` when the error of ``a`` and ``x`` may be correlated."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != e.dim:
        raise DimensionError("translation has the wrong length")
    if not 0.0 < omega < 1.0:
        raise InvalidInputError(f"omega must lie in (0, 1), got {omega!r}")
    return symmetrize(e.cov / omega + np.outer(x, x) / (1.0 - omega))


def translate_cu(e: Estimate, x) -> Estimate:
    """Translate ``e`` by ``x`` assuming the error of ``e`` is independent of ``x``: ``(a + x, A + x x^T)``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != e.dim:
        raise DimensionError("translation has the wrong length")
    return Estimate(e.mean + x, e.cov + np.outer(x, x))


def translate_ca(e: Estimate, x, xtol: float = 1e-12) -> Estimate:
    """Translate ``e`` by ``x`` when the error may be correlated with ``x``.

    Uses the minimum-determinant covariance addition over ``w`` in (0, 1).
    A zero covariance or a zero translation is exact (the limit ``w -> 0`` or
    ``w -> 1``).  In 1D the result is ``(sqrt(A) + |x|)^2``.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != e.dim:
        raise DimensionError("translation has the wrong length")
    if not np.any(x) or not np.any(e.cov):
        return translate_cu(e, x)
    if e.dim == 1:
        s = float(np.sqrt(e.cov[0, 0])) + abs(float(x[0]))
        return Estimate(e.mean + x, [[s * s]])
    Ainv = pd_inverse(e.cov, what="translated covariance")
    q = float(x @ Ainv @ x)
    n = e.dim

    # log det(A/w + x x^T/(1-w)) - log det A
    def f(w):
        return -n * np.log(w) + np.log1p(w * q / (1.0 - w))

    w, _ = golden_section(f, 1e-12, 1.0 - 1e-12, xtol)
    return Estimate(e.mean + x, covariance_addition(e, x, w))


def _project_simplex(v: np.ndarray) -> np.ndarray:
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, len(v) + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    return np.maximum(v - css[rho] / (rho + 1), 0.0)


class _CIObjective:
    def __init__(self, infos, criterion):
        self.infos = infos
        if criterion not in ("det", "trace"):
            raise InvalidInputError(f"unknown CI criterion {criterion!r}")
        self.criterion = criterion

    def cov(self, w):
        J = sum(wi * P for wi, P in zip(w, self.infos))
        return symmetrize(np.linalg.inv(J))

    def value(self, w):
        C = self.cov(w)
        return _logdet(C) if self.criterion == "det" else float(np.trace(C))

    def value_grad(self, w):
        C = self.cov(w)
        if self.criterion == "det":
            g = np.array([-np.sum(C * P) for P in self.infos])
            return _logdet(C), g
        CC = C @ C
        g = np.array([-np.sum(CC * P) for P in self.infos])
        return float(np.trace(C)), g


def _projected_gradient(obj: _CIObjective, w0, cfg: CIConfig):
    w = _project_simplex(np.asarray(w0, dtype=float))
    f, g = obj.value_grad(w)
    step = 1.0 / max(1e-12, np.linalg.norm(g))
    for it in range(cfg.max_iter):
        while True:
            w_new = _project_simplex(w - step * g)
            f_new, g_new = obj.value_grad(w_new)
            if f_new <= f + 1e-4 * g @ (w_new - w) or step < 1e-18:
                break
            step *= 0.5
        dw = w_new - w
        dg = g_new - g
        if np.max(np.abs(dw)) < cfg.gtol:
            return w_new, f_new, True
        w, f, g = w_new, f_new, g_new
        curv = float(dw @ dg)
        step = float(dw @ dw) / curv if curv > 0 else 2.0 * step
    return w, f, False


def ci_fuse(estimates: Sequence[Estimate], config: CIConfig = CIConfig(), tol: Tolerance = DEFAULT_TOL) -> FusionResult:
    """Covariance Intersection with weights on the unit simplex minimizing the fused size.

    Two estimates use golden-section search on ``[eps, 1 - eps]``; more use
    multi-start projected gradient (starts: centroid and each vertex pulled
    slightly inward).
    """
    _check_same_dim(estimates)
    m = len(estimates)
    infos = [pd_inverse(e.cov, tol, "input covariance") for e in estimates]
    means = [e.mean for e in estimates]
    if m == 1:
        return FusionResult(estimates[0], OmegaWeights((1.0,), simplex=True), _logdet(estimates[0].cov))
    obj = _CIObjective(infos, config.criterion)
    status = "converged"
    if m == 2:
        w1, f1 = golden_section(lambda w: obj.value((w, 1.0 - w)), config.eps, 1.0 - config.eps, config.xtol)
        # the endpoints are exact limits (one estimate alone); the search stops eps short of them
        for end in (0.0, 1.0):
            f_end = obj.value((end, 1.0 - end))
            if f_end <= f1:
                w1, f1 = end, f_end
        w = np.array([w1, 1.0 - w1])
    else:
        starts = [np.full(m, 1.0 / m)]
        for i in range(m):
            s = np.full(m, 0.05 / m)
            s[i] += 0.95
            starts.append(s)
        best = None
        all_ok = True
        for s in starts:
            w_s, f_s, ok = _projected_gradient(obj, s, config)
            all_ok &= ok
            if best is None or f_s < best[1]:
                best = (w_s, f_s)
        w = best[0]
        if not all_ok:
            status = "iteration-capped"
    w = np.where(w < config.eps, 0.0, w)
    w = w / w.sum()
    c, C = _information_fuse(infos, means, w)
    return FusionResult(Estimate(c, C), OmegaWeights(tuple(w), simplex=True), _logdet(C), status)


def ci_bound(estimates: Sequence[Estimate], omega: OmegaWeights) -> np.ndarray:
    """Block-diagonal joint ``diag(A_i / w_i)`` (blocks with ``w_i = 0`` are +inf and omitted)."""
    blocks = [e.cov / w for e, w in zip(estimates, omega.weights) if w > 0]
    n = sum(b.shape[0] for b in blocks)
    M = np.zeros((n, n))
    k = 0
    for b in blocks:
        M[k:k + b.shape[0], k:k + b.shape[0]] = b
        k += b.shape[0]
    return M


def sample_joint(estimates: Sequence[Estimate], rng: np.random.Generator) -> np.ndarray:
    """Random joint covariance with the given diagonal blocks.

    Each block gets a random ``r x n_i`` matrix ``V_i`` with orthonormal
    columns in a shared space of random dimension ``r``; the correlation is
    ``rho V^T V + (1 - rho) I`` with identity diagonal blocks, mapped with each
    covariance square root.  ``rho = 1`` (fully correlated, the case where the
    bound is tight) is drawn a quarter of the time.
    """
    sizes = [e.dim for e in estimates]
    N = sum(sizes)
    r = int(rng.integers(max(sizes), N + 1))
    V = np.hstack([np.linalg.qr(rng.normal(size=(r, k)))[0] for k in sizes])
    rho = 1.0 if rng.uniform() < 0.25 else float(rng.uniform())
    K = rho * (V.T @ V) + (1.0 - rho) * np.eye(N)
    R = np.zeros((N, N))
    offs = np.concatenate([[0], np.cumsum(sizes)])
    for i, e in enumerate(estimates):
        R[offs[i]:offs[i + 1], offs[i]:offs[i + 1]] = sqrtm_psd(e.cov)
    return symmetrize(R @ K @ R)


def ci_joint_bound_check(
    estimates: Sequence[Estimate],
    omega: OmegaWeights,
    cross_samples: int = 50,
    seed: int = 0,
    tol: Tolerance = DEFAULT_TOL,
) -> bool:
    """Check ``diag(A_i / w_i)`` PSD-dominates sampled admissible joint covariances."""
    if len(omega) != len(estimates):
        raise DimensionError("one weight per estimate is required")
    if abs(sum(omega.weights) - 1.0) > 1e-9:
        raise InvalidInputError("weights must lie on the unit simplex")
    rng = np.random.default_rng(seed)
    keep = [i for i, w in enumerate(omega.weights) if w > 0]
    kept = [estimates[i] for i in keep]
    bound = ci_bound(kept, OmegaWeights(tuple(omega.weights[i] for i in keep)))
    for _ in range(cross_samples):
        joint = sample_joint(estimates, rng)
        sizes = np.concatenate([[0], np.cumsum([e.dim for e in estimates])])
        idx = np.concatenate([np.arange(sizes[i], sizes[i + 1]) for i in keep])
        if not psd_order(bound, joint[np.ix_(idx, idx)], tol):
            return False
    return True
