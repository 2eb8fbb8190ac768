"""Covariance Union and the direct (parametric) General Covariance Union solver.

Both solvers search over the union mean ``u`` with a derivative-free simplex
method.  For CU the covariance at a fixed ``u`` comes from :func:`matrix_union`.
For GCU the search also runs over a unit-determinant shape for ``U``; for a
given center and shape, each constraint's minimal scale is found by a 1-D
search over its weight ``w_i`` (see :mod:`covfuse.kernels`), and ``U`` is the
shape scaled by the largest of them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from . import kernels
from .errors import DimensionError, InvalidInputError
from .estimates import Estimate
from .fusion import OmegaWeights
from .psd import DEFAULT_TOL, Tolerance, check_pd, min_eig, simultaneous_diagonalize, symmetrize


@dataclass(frozen=True)
class UnionResult:
    estimate: Estimate
    omegas: Optional[OmegaWeights]
    objective: float
    active: List[int]
    status: str = "converged"
    info: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class UnionConfig:
    """Search settings shared by :func:`cu_union` and :func:`gcu_direct`.

    ``ridge`` adds ``ridge * trace(A)/n * I`` to every input covariance (off by
    default).  ``seed`` drives the jitter of restart simplices.
    """

    ridge: float = 0.0
    seed: int = 0
    xatol: float = 1e-7
    fatol: float = 1e-11
    max_restarts: int = 6
    restart_maxfev_per_dim: int = 500
    improve_tol: float = 1e-10
    coarse_xatol: float = 1e-3
    coarse_fatol: float = 1e-5
    coarse_maxfev_per_dim: int = 40
    refine_top: int = 2
    refined_step: float = 1e-4
    omega_eps: float = 1e-8
    omega_xtol: float = 1e-10


def _validate(estimates: Sequence[Estimate]) -> int:
    if not estimates:
        raise InvalidInputError("at least one estimate is required")
    n = estimates[0].dim
    for e in estimates:
        if e.dim != n:
            raise DimensionError(f"dimension mismatch {e.dim} vs {n}")
    return n


def _regularized(estimates: Sequence[Estimate], ridge: float) -> List[Estimate]:
    if ridge <= 0:
        return list(estimates)
    out = []
    for e in estimates:
        n = e.dim
        delta = ridge * max(np.trace(e.cov) / n, np.finfo(float).tiny)
        out.append(Estimate(e.mean, e.cov + delta * np.eye(n)))
    return out


def _logdet(M: np.ndarray) -> float:
    sign, value = np.linalg.slogdet(M)
    return value if sign > 0 else -math.inf


def _union2(A: np.ndarray, B: np.ndarray, tol: Tolerance) -> np.ndarray:
    T, D = simultaneous_diagonalize(A, B, tol)
    Tinv = np.linalg.inv(T)
    return symmetrize((Tinv * np.maximum(1.0, D)) @ Tinv.T)


def matrix_union(mats: Sequence[np.ndarray], tol: Tolerance = DEFAULT_TOL, ridge: float = 0.0) -> np.ndarray:
    """Small-determinant ``U`` with ``U >= M_i`` for every input.

    Exact (minimal determinant) for two matrices via simultaneous
    diagonalization.  For more, pairwise unions are folded in
    decreasing-determinant order until the determinant stops changing; the
    result dominates every input but may not be minimal.
    """
    mats = [symmetrize(np.asarray(M, dtype=float)) for M in mats]
    if not mats:
        raise InvalidInputError("no matrices")
    n = mats[0].shape[0]
    if any(M.shape != (n, n) for M in mats):
        raise DimensionError("matrices differ in shape")
    if ridge > 0:
        mats = [M + ridge * max(np.trace(M) / n, np.finfo(float).tiny) * np.eye(n) for M in mats]
    if len(mats) == 1:
        return mats[0]
    order = sorted(range(len(mats)), key=lambda i: (-_logdet(mats[i]), i))
    U = mats[order[0]]
    check_pd(U, tol, "largest-determinant matrix")
    prev = _logdet(U)
    for _ in range(100):
        for i in order[1:]:
            U = _union2(U, mats[i], tol)
        cur = _logdet(U)
        if abs(cur - prev) < 1e-10:
            break
        prev = cur
    return U


def _frame(estimates: Sequence[Estimate]):
    """Center at the mean of the means and scale to unit typical radius."""
    means = np.array([e.mean for e in estimates])
    center = means.mean(axis=0)
    spread = max(np.linalg.norm(means - center, axis=1).max(), 0.0)
    radius = max(math.sqrt(max(np.linalg.eigvalsh(e.cov)[-1] for e in estimates)), 0.0)
    scale = max(spread, radius)
    if not scale > 0:
        scale = 1.0
    return center, scale


def _starts(estimates: Sequence[Estimate]) -> List[np.ndarray]:
    means = np.array([e.mean for e in estimates])
    dets = np.array([max(np.linalg.det(e.cov), 0.0) for e in estimates])
    w = dets / dets.sum() if dets.sum() > 0 else np.full(len(dets), 1.0 / len(dets))
    starts = [w @ means]
    starts.extend(means)
    if len(means) > 1:
        dist = np.linalg.norm(means[:, None, :] - means[None, :, :], axis=2)
        i, j = np.unravel_index(np.argmax(dist), dist.shape)
        starts.append(0.5 * (means[i] + means[j]))
    return starts


def _nelder_mead(f, x, step, xatol, fatol, maxfev, rng):
    dim = len(x)
    jitter = rng.uniform(0.5, 1.5, size=dim)
    simplex = np.vstack([x] + [x + np.eye(dim)[i] * step[i] * jitter[i] for i in range(dim)])
    res = minimize(
        f,
        x,
        method="Nelder-Mead",
        options={
            "initial_simplex": simplex,
            "xatol": xatol,
            "fatol": fatol,
            "maxfev": maxfev,
            "adaptive": dim > 3,
        },
    )
    return np.array(res.x), float(res.fun), res.nfev


def _multistart_search(f, starts, step, cfg: UnionConfig, refine=None):
    """Coarse Nelder-Mead from every start, then restarts from the best point.

    ``refine(x)``, when given, polishes the ``cfg.refine_top`` best coarse
    points; the restarts then begin from a simplex scaled by
    ``cfg.refined_step``.  Restarts use a fresh, halved simplex each time and
    stop once a restart no longer improves the incumbent by more than
    ``cfg.improve_tol``.
    """
    rng = np.random.default_rng(cfg.seed)
    candidates = []
    nfev = 0
    dim = len(step)
    for x0 in starts:
        x, fx, k = _nelder_mead(
            f, np.asarray(x0, dtype=float), step, cfg.coarse_xatol, cfg.coarse_fatol,
            cfg.coarse_maxfev_per_dim * dim, rng,
        )
        nfev += k
        candidates.append((x, fx))
    if refine is not None:
        ranked = sorted(candidates, key=lambda c: (round(c[1], 12), tuple(np.round(c[0], 12))))
        for x, fx in ranked[: cfg.refine_top]:
            xr = refine(x)
            if xr is not None:
                candidates.append((xr, f(xr)))
                nfev += 1
    x, fx = _pick(candidates)
    if refine is not None:
        step = step * cfg.refined_step
    converged = False
    for _ in range(cfg.max_restarts):
        x_new, f_new, k = _nelder_mead(f, x, step, cfg.xatol, cfg.fatol, cfg.restart_maxfev_per_dim * dim, rng)
        nfev += k
        improved = fx - f_new
        if f_new < fx:
            x, fx = x_new, f_new
        if improved <= cfg.improve_tol:
            converged = True
            break
        step = step * 0.5
    return x, fx, converged, nfev


def _pick(candidates):
    """Deterministic reduction: smallest objective, then lexicographic center."""
    return min(candidates, key=lambda c: (round(c[1], 12), tuple(np.round(c[0], 12))))


def cu_union(
    estimates: Sequence[Estimate],
    config: UnionConfig = UnionConfig(),
    tol: Tolerance = DEFAULT_TOL,
) -> UnionResult:
    """Covariance Union: smallest-determinant ``(u, U)`` with ``U >= A_i + (u-a_i)(u-a_i)^T``."""
    n = _validate(estimates)
    estimates = _regularized(estimates, config.ridge)
    if len(estimates) == 1:
        e = estimates[0]
        return UnionResult(e, None, _logdet(e.cov), [0])
    center, scale = _frame(estimates)
    means = [(e.mean - center) / scale for e in estimates]
    covs = [e.cov / scale**2 for e in estimates]

    def union_at(u):
        return matrix_union([A + np.outer(u - a, u - a) for a, A in zip(means, covs)], tol)

    def f(u):
        return _logdet(union_at(u))

    starts = [(s - center) / scale for s in _starts(estimates)]
    u_s, _, converged, _ = _multistart_search(f, starts, np.full(n, 0.1), config)
    U = union_at(u_s) * scale**2
    u = center + scale * u_s
    result = Estimate(u, U)
    slacks = [min_eig(result.cov - e.cov - np.outer(u - e.mean, u - e.mean)) for e in estimates]
    active = [i for i, s in enumerate(slacks) if s <= tol.active_slack * max(1.0, abs(np.trace(U)))]
    return UnionResult(
        result, None, _logdet(result.cov), active,
        "converged" if converged else "iteration-capped", {"slacks": slacks},
    )


def gcu_constraint(A: np.ndarray, d, omega: float) -> np.ndarray:
    """Right-hand side ``A/w + d d^T/(1-w)`` of a GCU constraint."""
    d = np.asarray(d, dtype=float)
    return symmetrize(A / omega + np.outer(d, d) / (1.0 - omega))


def _min_scale_whitened(U: np.ndarray, A: np.ndarray, d: np.ndarray, cfg: UnionConfig):
    L = np.linalg.cholesky(U)
    Linv = np.linalg.inv(L)
    At = symmetrize(Linv @ A @ Linv.T)
    lam, Q = np.linalg.eigh(At)
    g = np.ascontiguousarray(Q.T @ (Linv @ d))
    return kernels.min_inflation(np.ascontiguousarray(lam), g, cfg.omega_eps, cfg.omega_xtol)


def _constraint_slack(U, A, d, omega) -> float:
    if omega >= 1.0:
        if np.any(d != 0):
            return -math.inf
        return min_eig(U - A)
    return min_eig(U - A / omega - np.outer(d, d) / (1.0 - omega))


def gcu_feasible(
    candidate: Estimate,
    estimates: Sequence[Estimate],
    tol: Tolerance = DEFAULT_TOL,
    config: UnionConfig = UnionConfig(),
):
    """Does ``candidate`` satisfy every GCU constraint for some weight?

    Returns ``(feasible, witnesses)``.  For each constraint the weight is
    chosen by a search that minimizes the largest eigenvalue of the whitened
    right-hand side ``U^-1/2 (A/w + d d^T/(1-w)) U^-1/2``; the constraint holds
    iff that minimum is at most one.  ``w = 1`` is only admitted for
    ``d = 0`` (concentric), where it reduces to ``U >= A``; ``w -> 0`` never
    certifies a finite ``U``.
    """
    _validate([candidate, *estimates])
    U = candidate.cov
    check_pd(U, tol, "candidate covariance")
    ok = True
    witnesses = []
    thresh = tol.scale(U)
    for e in estimates:
        d = candidate.mean - e.mean
        if not np.any(d):
            w = 1.0
        else:
            _, w = _min_scale_whitened(U, e.cov, d, config)
        witnesses.append(w)
        ok &= _constraint_slack(U, e.cov, d, w) >= -thresh
    return bool(ok), OmegaWeights(tuple(witnesses))


def _shape_params(U: np.ndarray) -> np.ndarray:
    n = U.shape[0]
    L = np.linalg.cholesky(U)
    L = L / math.exp(np.log(np.diag(L)).sum() / n)
    return np.concatenate([np.log(np.diag(L))[: n - 1], L[np.tril_indices(n, -1)]])


def _chol_logdet(M: np.ndarray) -> float:
    """``log det M``; raises ``LinAlgError`` unless ``M`` is positive definite."""
    return 2.0 * float(np.log(np.diag(np.linalg.cholesky(M))).sum())


class _DirectBarrier:
    """Log-barrier for the GCU constraints in the variables ``z = (u, U upper triangle, w)``.

    ``phi_t(z) = t log det U - sum_i log det S_i - sum_i log(w_i (1 - w_i))`` with
    ``S_i = U - A_i/w_i - d_i d_i^T/(1 - w_i)`` and ``d_i = u - a_i``.  The
    ``log det U`` term is concave, so Newton steps use a Hessian whose negative
    eigenvalues are flipped.
    """

    def __init__(self, means, covs):
        self.means = np.asarray(means, dtype=float)
        self.covs = np.asarray(covs, dtype=float)
        self.m, self.n = self.means.shape
        n = self.n
        self.iu = np.triu_indices(n)
        self.nu = len(self.iu[0])
        self.nv = n + self.nu + self.m
        self.EU = np.zeros((self.nu, n, n))
        for k, (i, j) in enumerate(zip(*self.iu)):
            self.EU[k, i, j] = self.EU[k, j, i] = 1.0
        self.eye = np.eye(n)

    def split(self, z):
        n = self.n
        U = np.zeros((n, n))
        U[self.iu] = z[n:n + self.nu]
        U = U + np.triu(U, 1).T
        return z[:n], U, z[n + self.nu:]

    def pack(self, u, U, w):
        return np.concatenate([u, U[self.iu], w])

    def degree(self) -> int:
        return self.m * (self.n + 2)

    def _slacks(self, u, U, w):
        D = u - self.means
        c = 1.0 / (1.0 - w)
        S = U - self.covs / w[:, None, None] - c[:, None, None] * np.einsum("ki,kj->kij", D, D)
        return S, D, c

    def value(self, z, t):
        u, U, w = self.split(z)
        if np.any(w <= 0.0) or np.any(w >= 1.0):
            return math.inf
        S, _, _ = self._slacks(u, U, w)
        try:
            LU = np.linalg.cholesky(U)
            LS = np.linalg.cholesky(S)
        except np.linalg.LinAlgError:
            return math.inf
        ld_U = 2.0 * float(np.log(np.diagonal(LU)).sum())
        ld_S = 2.0 * float(np.log(np.diagonal(LS, axis1=1, axis2=2)).sum())
        return t * ld_U - ld_S - float(np.sum(np.log(w) + np.log1p(-w)))

    def derivatives(self, z, t):
        n, nu, nv, m = self.n, self.nu, self.nv, self.m
        u, U, w = self.split(z)
        S, D, c = self._slacks(u, U, w)
        Ui = np.linalg.inv(U)
        Si = np.linalg.inv(S)
        PU = Ui @ self.EU
        grad = np.zeros(nv)
        hess = np.zeros((nv, nv))
        sl = slice(n, n + nu)
        grad[sl] = t * np.trace(PU, axis1=1, axis2=2)
        hess[sl, sl] = -t * np.einsum("aij,bji->ab", PU, PU)
        # dS_i/dz for all constraints: (m, nv, n, n); only u, U and the own w_i enter
        G = np.zeros((m, nv, n, n))
        Eu = np.einsum("jk,ml->mjkl", self.eye, D)
        G[:, :n] = -c[:, None, None, None] * (Eu + np.swapaxes(Eu, 2, 3))
        G[:, sl] = self.EU
        k = np.arange(m)
        G[k, n + nu + k] = self.covs / (w**2)[:, None, None] - (c * c)[:, None, None] * np.einsum("ki,kj->kij", D, D)
        P = np.einsum("mij,majk->maik", Si, G)
        grad -= np.einsum("maii->a", P)
        hess += np.einsum("maij,mbji->ab", P, P)
        # second-derivative terms of S_i (u-u, u-w_i and w_i-w_i blocks)
        SiD = np.einsum("mij,mj->mi", Si, D)
        hess[:n, :n] += 2.0 * np.einsum("m,mij->ij", c, Si)
        cross = 2.0 * (c * c)[:, None] * SiD
        hess[:n, n + nu + k] += cross.T
        hess[n + nu + k, :n] += cross
        hess[n + nu + k, n + nu + k] += (
            2.0 * np.einsum("mij,mij->m", Si, self.covs) / w**3 + 2.0 * c**3 * np.einsum("mi,mi->m", D, SiD)
        )
        grad[n + nu:] -= 1.0 / w - 1.0 / (1.0 - w)
        hess[n + nu:, n + nu:] += np.diag(1.0 / w**2 + 1.0 / (1.0 - w) ** 2)
        return grad, 0.5 * (hess + hess.T)


def _barrier_polish(u0, U0, w0, means, covs, gap=1e-9, mu=8.0, max_newton=60):
    """Follow the direct barrier path from a strictly feasible ``(u0, U0, w0)``.

    Returns ``(u, U)``; the caller restores exact feasibility by rescaling.
    """
    bar = _DirectBarrier(means, covs)
    z = bar.pack(u0, U0, w0)
    # below t = m the barrier decreases without bound as U grows
    t = 2.0 * bar.m
    deg = bar.degree()
    while True:
        for _ in range(max_newton):
            val = bar.value(z, t)
            g, H = bar.derivatives(z, t)
            lam, Q = np.linalg.eigh(H)
            floor = 1e-12 * max(1.0, float(np.abs(lam).max()))
            lam = np.maximum(np.abs(lam), floor)
            dz = -(Q @ ((Q.T @ g) / lam))
            dec = float(-g @ dz)
            if dec / 2.0 <= max(1e-12, 64.0 * np.finfo(float).eps * abs(val)):
                break
            step = 1.0
            while step > 1e-12:
                v = bar.value(z + step * dz, t)
                if v <= val - 0.25 * step * dec:
                    break
                step *= 0.5
            if step <= 1e-12:
                break
            z = z + step * dz
        if deg / t <= gap:
            break
        t *= mu
    u, U, _ = bar.split(z)
    return u, U


def gcu_direct(
    estimates: Sequence[Estimate],
    config: UnionConfig = UnionConfig(),
    tol: Tolerance = DEFAULT_TOL,
) -> UnionResult:
    """General Covariance Union by direct search.

    Minimizes ``log det U`` subject to
    ``U >= A_i/w_i + (u-a_i)(u-a_i)^T/(1-w_i)`` with one ``w_i`` in [0, 1] per
    input.  The search variables are the center and a unit-determinant shape
    for ``U``; the weights and the overall scale are eliminated exactly.
    """
    n = _validate(estimates)
    estimates = _regularized(estimates, config.ridge)
    for e in estimates:
        check_pd(e.cov, tol, "input covariance")
    if len(estimates) == 1:
        e = estimates[0]
        return UnionResult(e, OmegaWeights((1.0,)), _logdet(e.cov), [0])
    center, scale = _frame(estimates)
    means = np.ascontiguousarray([(e.mean - center) / scale for e in estimates])
    covs = np.ascontiguousarray([e.cov / scale**2 for e in estimates])
    eps, xtol = config.omega_eps, config.omega_xtol

    def f(p):
        return kernels.gcu_objective(np.ascontiguousarray(p, dtype=float), means, covs, eps, xtol)

    nshape = n - 1 + n * (n - 1) // 2
    step = np.concatenate([np.full(n, 0.1), np.full(nshape, 0.1)])
    starts = []
    for s in _starts(estimates):
        u0 = (s - center) / scale
        U0 = sum(A + np.outer(u0 - a, u0 - a) for a, A in zip(means, covs))
        starts.append(np.concatenate([u0, _shape_params(U0)]))
    def refine(p):
        p = np.ascontiguousarray(p, dtype=float)
        sc, w = kernels.shape_scales(p, means, covs, eps, xtol)
        L = kernels.shape_factor(p, n)
        U0 = 1.05 * float(sc.max()) * symmetrize(L @ L.T)
        w0 = np.clip(w, 1e-3, 1.0 - 1e-3)
        if any(min_eig(U0 - gcu_constraint(A, p[:n] - a, wi)) <= 0.0 for a, A, wi in zip(means, covs, w0)):
            return None
        u, U = _barrier_polish(p[:n], U0, w0, means, covs)
        try:
            return np.concatenate([u, _shape_params(U)])
        except np.linalg.LinAlgError:
            return None

    p, _, converged, nfev = _multistart_search(f, starts, step, config, refine)
    p = np.ascontiguousarray(p)
    scales, omegas = kernels.shape_scales(p, means, covs, eps, xtol)
    L = kernels.shape_factor(p, n)
    U = float(scales.max()) * symmetrize(L @ L.T) * scale**2
    u = center + scale * p[:n]
    result = Estimate(u, U)
    slacks = [_constraint_slack(U, e.cov, u - e.mean, w) for e, w in zip(estimates, omegas)]
    active = [i for i, s in enumerate(slacks) if s <= tol.active_slack * max(1.0, abs(np.trace(U)))]
    return UnionResult(
        result, OmegaWeights(tuple(float(w) for w in omegas)), _logdet(U), active,
        "converged" if converged else "iteration-capped",
        {"slacks": slacks, "nfev": nfev},
    )
