"""Barrier-method solver for determinant maximization under affine LMIs.

Problem form::

    minimize    -log det W
    subject to  LMI_i(x) = F0_i + sum_j x_j F_ij  <=  0     (i = 1..m)
                tau_i >= 0,  W > 0

over ``x = (svec(W), v, tau)``.  ``svec`` stores the diagonal of ``W`` as is
and each off-diagonal pair once, scaled by sqrt(2), so that ``x . y`` equals
the Frobenius inner product of the corresponding matrices.
"""
from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from . import kernels
from .errors import InfeasibleError, InvalidInputError
from .psd import DEFAULT_TOL, Tolerance, symmetrize
from .search import golden_section

SQRT2 = math.sqrt(2.0)
EPS = float(np.finfo(float).eps)


def svec_basis(n: int) -> List[np.ndarray]:
    """Symmetric basis matrices matching the svec ordering (row-major upper triangle)."""
    basis = []
    for i in range(n):
        for j in range(i, n):
            E = np.zeros((n, n))
            if i == j:
                E[i, i] = 1.0
            else:
                E[i, j] = E[j, i] = 1.0 / SQRT2
            basis.append(E)
    return basis


def svec(M: np.ndarray) -> np.ndarray:
    n = M.shape[0]
    iu = np.triu_indices(n)
    scale = np.where(iu[0] == iu[1], 1.0, SQRT2)
    return M[iu] * scale


@lru_cache(maxsize=None)
def _smat_layout(n: int):
    iu = np.triu_indices(n)
    return iu, (iu[1], iu[0]), np.where(iu[0] == iu[1], 1.0, 1.0 / SQRT2)


def smat(x: np.ndarray, n: int) -> np.ndarray:
    iu, il, scale = _smat_layout(n)
    M = np.empty((n, n))
    M[iu] = x * scale
    M[il] = M[iu]
    return M


@dataclass(frozen=True, eq=False)
class AffineLMI:
    """``F(x) = constant + sum_j x_j coeffs[j]``, constrained to be negative semidefinite."""

    constant: np.ndarray
    coeffs: Dict[int, np.ndarray]

    def __post_init__(self):
        F0 = np.asarray(self.constant, dtype=float)
        p = F0.shape[0]
        if F0.shape != (p, p) or not np.array_equal(F0, F0.T):
            raise InvalidInputError("LMI constant must be square and symmetric")
        for j, F in self.coeffs.items():
            F = np.asarray(F, dtype=float)
            if F.shape != (p, p) or not np.array_equal(F, F.T):
                raise InvalidInputError(f"LMI coefficient {j} must be {p}x{p} symmetric")

    @property
    def size(self) -> int:
        return self.constant.shape[0]

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        F = np.array(self.constant, dtype=float)
        for j, Fj in self.coeffs.items():
            F += x[j] * Fj
        return F

    def dense_coeffs(self, nvars: int) -> np.ndarray:
        G = np.zeros((nvars, self.size, self.size))
        for j, Fj in self.coeffs.items():
            G[j] = Fj
        return G


@dataclass(frozen=True, eq=False)
class MaxdetProblem:
    n: int
    num_constraints: int
    lmis: List[AffineLMI]

    def __post_init__(self):
        if self.num_constraints < 1 or len(self.lmis) != self.num_constraints:
            raise InvalidInputError("at least one constraint is required, one LMI per constraint")
        nv = self.nvars
        for lmi in self.lmis:
            if any(not 0 <= j < nv for j in lmi.coeffs):
                raise InvalidInputError("LMI refers to a variable outside the layout")

    @property
    def nw(self) -> int:
        return self.n * (self.n + 1) // 2

    @property
    def nvars(self) -> int:
        return self.nw + self.n + self.num_constraints

    @property
    def w_slice(self) -> slice:
        return slice(0, self.nw)

    @property
    def v_slice(self) -> slice:
        return slice(self.nw, self.nw + self.n)

    @property
    def tau_slice(self) -> slice:
        return slice(self.nw + self.n, self.nvars)

    @property
    def degree(self) -> int:
        """Total barrier degree: sum of LMI block sizes plus one per tau."""
        return sum(l.size for l in self.lmis) + self.num_constraints

    def W(self, x) -> np.ndarray:
        return smat(x[self.w_slice], self.n)

    def v(self, x) -> np.ndarray:
        return np.asarray(x[self.v_slice])

    def tau(self, x) -> np.ndarray:
        return np.asarray(x[self.tau_slice])

    def pack(self, W, v, tau) -> np.ndarray:
        return np.concatenate([svec(np.asarray(W, dtype=float)), np.asarray(v, dtype=float), np.asarray(tau, dtype=float)])

    def slacks(self, x) -> List[np.ndarray]:
        """``-LMI_i(x)``; positive definite at strictly feasible points."""
        return [-l.evaluate(x) for l in self.lmis]


@dataclass(frozen=True)
class BarrierParams:
    t0: float = 1.0
    mu: float = 10.0
    newton_tol: float = 1e-10
    alpha: float = 0.25
    beta: float = 0.5
    gap: float = 1e-7
    max_newton: int = 200
    max_outer: int = 40


@dataclass
class SolverReport:
    solution: np.ndarray
    objective: float
    iterations: int
    kkt_residual: float
    slack_min_eigs: List[float]
    status: str
    t: float = 0.0
    gap: float = math.inf
    trace: List[dict] = field(default_factory=list)


@dataclass
class Duals:
    Z: List[np.ndarray]
    lam: np.ndarray


class _Barrier:
    """Evaluates t * (-log det W) + sum -log det S_i + sum -log tau_i with derivatives."""

    def __init__(self, p: MaxdetProblem):
        self.p = p
        nv = p.nvars
        self.GW = np.zeros((nv, p.n, p.n))
        for k, E in enumerate(svec_basis(p.n)):
            self.GW[k] = E
        self.S0 = [-np.asarray(l.constant, dtype=float) for l in p.lmis]
        self.GS = [np.ascontiguousarray(-l.dense_coeffs(nv)) for l in p.lmis]
        self.tau_idx = np.arange(p.tau_slice.start, p.tau_slice.stop)

    def objective(self, x) -> float:
        sign, ld = np.linalg.slogdet(self.p.W(x))
        return -ld if sign > 0 else math.inf

    def slacks(self, x):
        return [np.ascontiguousarray(S0 + np.tensordot(x, G, axes=1)) for S0, G in zip(self.S0, self.GS)]

    def max_step(self, x, dx) -> float:
        """Largest ``s`` keeping ``W``, every slack and ``tau`` positive along ``x + s dx``."""
        pairs = [(self.p.W(x), np.tensordot(dx, self.GW, axes=1))]
        pairs += [(S, np.tensordot(dx, G, axes=1)) for S, G in zip(self.slacks(x), self.GS)]
        smax = math.inf
        for S, D in pairs:
            L = np.linalg.cholesky(S)
            K = np.linalg.solve(L, np.linalg.solve(L, D).T)
            lo = float(np.linalg.eigvalsh(symmetrize(K))[0])
            if lo < 0.0:
                smax = min(smax, -1.0 / lo)
        dt = dx[self.tau_idx]
        neg = dt < 0
        if np.any(neg):
            smax = min(smax, float(np.min(-x[self.tau_idx][neg] / dt[neg])))
        return smax

    def evaluate(self, x, t, derivs=True):
        tau = x[self.tau_idx]
        if np.any(tau <= 0):
            return None
        r = kernels.logdet_barrier(np.ascontiguousarray(self.p.W(x)), self.GW)
        if r is None:
            return None
        f0, g0, H0 = r
        val = t * f0
        grad = t * g0
        hess = t * H0
        for S, G in zip(self.slacks(x), self.GS):
            r = kernels.logdet_barrier(S, G)
            if r is None:
                return None
            val += r[0]
            grad = grad + r[1]
            hess = hess + r[2]
        val -= float(np.log(tau).sum())
        grad = grad.copy()
        grad[self.tau_idx] -= 1.0 / tau
        hess = hess.copy()
        hess[self.tau_idx, self.tau_idx] += 1.0 / tau**2
        return val, grad, hess


def barrier_duals(p: MaxdetProblem, x, t: float) -> Duals:
    """Central-path multipliers ``Z_i = S_i^-1 / t`` and ``lam = 1 / (t tau)``."""
    Z = [symmetrize(np.linalg.inv(S)) / t for S in p.slacks(x)]
    return Duals(Z, 1.0 / (t * p.tau(x)))


def _dual_map(p: MaxdetProblem) -> np.ndarray:
    """Matrix of the adjoint map ``(Z_1..Z_m, lam) -> sum_i <Z_i, dS_i/dx> + lam``."""
    cols = []
    for lmi in p.lmis:
        B = np.zeros((p.nvars, lmi.size * lmi.size))
        for j, Fj in lmi.coeffs.items():
            B[j] = -Fj.reshape(-1)
        cols.append(B)
    T = np.zeros((p.nvars, p.num_constraints))
    T[p.tau_slice, :] = np.eye(p.num_constraints)
    cols.append(T)
    return np.hstack(cols)


def _objective_grad(p: MaxdetProblem, x) -> np.ndarray:
    grad = np.zeros(p.nvars)
    Winv = np.linalg.inv(p.W(x))
    grad[p.w_slice] = -svec(Winv)
    return grad


def recover_duals(p: MaxdetProblem, x, t: float) -> Duals:
    """Central-path duals with a correction that enforces stationarity.

    ``S_i^-1 / t`` loses accuracy as slacks approach singularity (the small
    eigenvalues of ``S_i`` carry absolute, not relative, error), leaving a
    stationarity defect ``r``.  The correction ``dZ_i = S_i^-1 G_i(y) S_i^-1``,
    ``dlam = y / tau^2`` with ``H y = r`` is the least-change fix in the
    metric of the constraint barrier Hessian ``H``, so it keeps complementarity
    and the sign structure of the duals intact.
    """
    d = barrier_duals(p, x, t)
    M = _dual_map(p)
    z = np.concatenate([Z.reshape(-1) for Z in d.Z] + [d.lam])
    r = _objective_grad(p, x) - M @ z
    H = np.zeros((p.nvars, p.nvars))
    Ginv = []
    for lmi, S in zip(p.lmis, p.slacks(x)):
        Sinv = np.linalg.inv(S)
        G = -lmi.dense_coeffs(p.nvars)
        P = Sinv @ G
        H += np.einsum("jab,kba->jk", P, P)
        Ginv.append((Sinv, G))
    tau = p.tau(x)
    H[p.tau_slice, p.tau_slice] += np.diag(1.0 / tau**2)
    y = np.linalg.lstsq(symmetrize(H), r, rcond=None)[0]
    Z = [symmetrize(Zi + Sinv @ np.tensordot(y, G, axes=1) @ Sinv) for Zi, (Sinv, G) in zip(d.Z, Ginv)]
    return Duals(Z, d.lam + y[p.tau_slice] / tau**2)


def kkt_residual(p: MaxdetProblem, x, duals: Duals) -> float:
    """KKT defect of ``(x, duals)`` for the Lagrangian ``-log det W - sum <Z_i, S_i(x)> - lam . tau``.

    Combines stationarity, complementarity ``sum <Z_i, S_i> + lam . tau`` and
    dual infeasibility (negative eigenvalues of ``Z_i``, negative ``lam``) in
    one Euclidean norm.
    """
    M = _dual_map(p)
    z = np.concatenate([np.asarray(Z, dtype=float).reshape(-1) for Z in duals.Z] + [np.asarray(duals.lam, dtype=float)])
    stat = _objective_grad(p, x) - M @ z
    comp = sum(float(np.sum(Z * S)) for Z, S in zip(duals.Z, p.slacks(x))) + float(np.asarray(duals.lam) @ p.tau(x))
    infeas = sum(min(0.0, float(np.linalg.eigvalsh(Z)[0])) ** 2 for Z in duals.Z)
    infeas += float(np.sum(np.minimum(0.0, duals.lam) ** 2))
    return math.sqrt(float(stat @ stat) + comp * comp + infeas)


def _min_slack_eigs(p: MaxdetProblem, x) -> List[float]:
    return [float(np.linalg.eigvalsh(S)[0]) for S in p.slacks(x)]


def enclosed_triples(p: MaxdetProblem):
    """Decode each constraint's enclosed ellipsoid ``[[A, b], [b^T, c]]`` from its tau coefficient."""
    n = p.n
    out = []
    for i, lmi in enumerate(p.lmis):
        C = -lmi.coeffs[p.tau_slice.start + i]
        out.append((C[:n, :n], C[:n, n], C[n, n]))
    return out


def find_interior(p: MaxdetProblem, max_expand: int = 40) -> np.ndarray:
    """Strictly feasible ``(W, v, tau)`` from a ball enclosing every input ellipsoid.

    The ball is centered at the origin (callers center their data) with radius
    ``2 * max_i(|a_i| + sqrt(lambda_max(A_i)))``; each ``tau_i`` maximizes the
    smallest eigenvalue of its slack over ``[0, 1]``.
    """
    if p.num_constraints < 1:
        raise InvalidInputError("no constraints")
    beta = 0.0
    for A, b, c in enclosed_triples(p):
        Ainv = np.linalg.inv(A)
        center = -Ainv @ b
        level = float(b @ Ainv @ b - c)
        radius = math.sqrt(level * np.linalg.eigvalsh(Ainv)[-1])
        beta = max(beta, np.linalg.norm(center) + radius)
    beta = 2.0 * beta if beta > 0 else 1.0
    tau_idx = range(p.tau_slice.start, p.tau_slice.stop)
    for _ in range(max_expand):
        x = p.pack(np.eye(p.n) / beta**2, np.zeros(p.n), np.zeros(p.num_constraints))
        ok = True
        for i, (lmi, j) in enumerate(zip(p.lmis, tau_idx)):

            def neg_min_slack(tau):
                x[j] = tau
                return -np.linalg.eigvalsh(-lmi.evaluate(x))[0]

            tau, val = golden_section(neg_min_slack, 0.0, 1.0, 1e-10)
            x[j] = tau
            if not (-val > 0 and tau > 0):
                ok = False
                break
        if ok:
            return x
        beta *= 2.0
    raise InfeasibleError("could not construct a strictly feasible point")


def solve(
    p: MaxdetProblem,
    params: BarrierParams = BarrierParams(),
    x0: Optional[np.ndarray] = None,
    tol: Tolerance = DEFAULT_TOL,
    on_iteration: Optional[Callable[[dict], None]] = None,
) -> SolverReport:
    """Path-following barrier method with damped Newton centering.

    Stops with status ``optimal`` once the barrier gap ``degree / t`` is at most
    ``params.gap`` and the KKT residual at the central-path duals is at most
    ``tol.solver_kkt``.
    """
    try:
        x = find_interior(p) if x0 is None else np.array(x0, dtype=float)
    except InfeasibleError:
        nan = np.full(p.nvars, np.nan)
        return SolverReport(nan, math.inf, 0, math.inf, [], "infeasible-detected")
    bar = _Barrier(p)
    if bar.evaluate(x, params.t0, False) is None:
        raise InvalidInputError("starting point is not strictly feasible")
    t = params.t0
    deg = p.degree
    total_newton = 0
    trace = []
    status = "max-iter"
    residual = math.inf
    for outer in range(params.max_outer):
        for _ in range(params.max_newton):
            val, grad, hess = bar.evaluate(x, t)
            try:
                L = np.linalg.cholesky(hess)
                dx = -np.linalg.solve(L.T, np.linalg.solve(L, grad))
            except np.linalg.LinAlgError:
                dx = -np.linalg.lstsq(hess, grad, rcond=None)[0]
            dec2 = float(-grad @ dx)
            # at large t the barrier value carries roundoff of order eps * |val|
            if dec2 / 2.0 <= max(params.newton_tol, 64.0 * EPS * abs(val)):
                break
            total_newton += 1
            # start inside the domain: backtracking out of infeasibility wastes evaluations
            step = min(1.0, 0.99 * bar.max_step(x, dx))
            slope = float(grad @ dx)
            while True:
                r = bar.evaluate(x + step * dx, t, False)
                if r is not None and r[0] <= val + params.alpha * step * slope:
                    break
                step *= params.beta
                if step < 1e-12:
                    break
            if step < 1e-12:
                # no descent left at working precision
                break
            x = x + step * dx
        residual = kkt_residual(p, x, recover_duals(p, x, t))
        record = {
            "iteration": outer, "t": t, "objective": bar.objective(x), "residual": residual, "gap": deg / t,
            "min_slack": min(_min_slack_eigs(p, x)), "min_tau": float(np.min(p.tau(x))),
        }
        trace.append(record)
        if on_iteration is not None:
            on_iteration(record)
        if deg / t <= params.gap and residual <= tol.solver_kkt:
            status = "optimal"
            break
        t *= params.mu
    return SolverReport(
        solution=x,
        objective=bar.objective(x),
        iterations=total_newton,
        kkt_residual=residual,
        slack_min_eigs=_min_slack_eigs(p, x),
        status=status,
        t=t,
        gap=deg / t,
        trace=trace,
    )
