"""Minimum enclosing ellipsoid of covariance ellipsoids, and the GCU equivalence checks.

The enclosing ellipsoid ``E(u, U)`` is parametrized by ``W = U^-1`` and
``v = -U^-1 u``; enclosure of each ``E(a_i, A_i)`` is the S-lemma condition in
its Schur-expanded (linear) form, with one multiplier ``tau_i`` per input.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .errors import DimensionError, InvalidInputError
from .estimates import Estimate
from .fusion import OmegaWeights
from .maxdet import AffineLMI, BarrierParams, MaxdetProblem, SolverReport, solve, svec_basis
from .psd import DEFAULT_TOL, Tolerance, is_psd, pd_inverse, schur_expand_psd_check, symmetrize
from .search import golden_section
from .union import UnionResult

TAU_LIMIT = 1.0 + 1e-8


class TheoremCheckError(AssertionError):
    """A solution violated a property that the GCU/MEE equivalence guarantees."""


@dataclass(frozen=True, eq=False)
class MEEProblem:
    inputs: List[Estimate]
    assembled: MaxdetProblem
    coordinate_shift: np.ndarray
    coordinate_scale: float = 1.0


def _constraint_block(a: np.ndarray, A: np.ndarray) -> np.ndarray:
    """``[[A^-1, -A^-1 a], [(-A^-1 a)^T, a^T A^-1 a - 1]]``."""
    n = a.shape[0]
    P = pd_inverse(A, what="input covariance")
    C = np.empty((n + 1, n + 1))
    C[:n, :n] = P
    C[:n, n] = C[n, :n] = -P @ a
    C[n, n] = float(a @ P @ a) - 1.0
    return C


def assemble(estimates: Sequence[Estimate], normalize_scale: bool = True) -> MEEProblem:
    """Build the enclosure LMIs after moving the origin to the mean of the input means.

    With ``normalize_scale`` the coordinates are also divided by a common
    length so the largest input sits at unit size.
    """
    if not estimates:
        raise InvalidInputError("at least one estimate is required")
    n = estimates[0].dim
    if any(e.dim != n for e in estimates):
        raise DimensionError("estimates differ in dimension")
    m = len(estimates)
    shift = np.mean([e.mean for e in estimates], axis=0)
    scale = 1.0
    if normalize_scale:
        scale = max(
            max(np.linalg.norm(e.mean - shift) for e in estimates),
            max(math.sqrt(np.linalg.eigvalsh(e.cov)[-1]) for e in estimates),
        )
        scale = scale if scale > 0 else 1.0
    nw = n * (n + 1) // 2
    p = 2 * n + 1
    mid = n
    F0 = np.zeros((p, p))
    F0[mid, mid] = -1.0
    shared = {}
    for k, E in enumerate(svec_basis(n)):
        F = np.zeros((p, p))
        F[:n, :n] = E
        F[n + 1:, n + 1:] = -E
        shared[k] = F
    for k in range(n):
        F = np.zeros((p, p))
        F[k, mid] = F[mid, k] = 1.0
        F[mid, n + 1 + k] = F[n + 1 + k, mid] = 1.0
        shared[nw + k] = F
    lmis = []
    for i, e in enumerate(estimates):
        a = (e.mean - shift) / scale
        A = e.cov / scale**2
        T = np.zeros((p, p))
        T[: n + 1, : n + 1] = -_constraint_block(a, A)
        coeffs = dict(shared)
        coeffs[nw + n + i] = symmetrize(T)
        lmis.append(AffineLMI(F0, coeffs))
    problem = MaxdetProblem(n, m, lmis)
    return MEEProblem(list(estimates), problem, shift, scale)


def contains(outer: Estimate, inner: Estimate, tol: Tolerance = DEFAULT_TOL):
    """S-lemma enclosure test ``E(inner) within E(outer)``.

    Searches ``tau`` in [0, 1] to minimize the largest eigenvalue of the
    triple-form matrix inequality (affine in ``tau``, so the search is convex).
    Returns ``(contained, tau)``.
    """
    # work relative to the outer ellipsoid: x -> L^-1 (x - u) maps it to the unit ball
    L = np.linalg.cholesky(outer.cov)
    Linv = np.linalg.inv(L)
    a = Linv @ (inner.mean - outer.mean)
    A = symmetrize(Linv @ inner.cov @ Linv.T)
    n = a.shape[0]
    C0 = np.zeros((n + 1, n + 1))
    C0[:n, :n] = np.eye(n)
    C0[n, n] = -1.0
    C = _constraint_block(a, A)

    def lmax(tau):
        return float(np.linalg.eigvalsh(C0 - tau * C)[-1])

    tau, val = golden_section(lmax, 0.0, 1.0, 1e-12)
    return val <= tol.psd_eig * max(1.0, float(np.abs(C).max())), tau


def _nesting_winner(estimates: Sequence[Estimate], tol: Tolerance) -> Optional[int]:
    for i, outer in enumerate(estimates):
        if all(j == i or contains(outer, inner, tol)[0] for j, inner in enumerate(estimates)):
            return i
    return None


def solve_mee(
    estimates: Sequence[Estimate],
    params: BarrierParams = BarrierParams(),
    tol: Tolerance = DEFAULT_TOL,
    on_iteration=None,
    check_theorem: bool = True,
) -> UnionResult:
    """Minimum-determinant GCU solution via the enclosing-ellipsoid Maxdet problem.

    When one input already encloses all the others it is returned without
    running the solver.  Multipliers ``tau_i`` are reported as the weights;
    every converged solution is checked for ``tau_i <= 1``.
    """
    prob = assemble(estimates)
    m = len(estimates)
    winner = _nesting_winner(estimates, tol)
    if winner is not None:
        e = estimates[winner]
        taus = [1.0 if j == winner else contains(e, f, tol)[1] for j, f in enumerate(estimates)]
        sign, ld = np.linalg.slogdet(e.cov)
        return UnionResult(
            Estimate(e.mean, e.cov), OmegaWeights(tuple(taus)), ld, [winner],
            "converged", {"nested": winner, "tau": taus},
        )
    p = prob.assembled
    report = solve(p, params, tol=tol, on_iteration=on_iteration)
    if report.status == "infeasible-detected":
        raise InvalidInputError("no strictly feasible enclosing ellipsoid found")
    x = report.solution
    W = p.W(x)
    U_s = symmetrize(np.linalg.inv(W))
    u_s = -U_s @ p.v(x)
    s = prob.coordinate_scale
    U = U_s * s**2
    u = prob.coordinate_shift + s * u_s
    tau = p.tau(x)
    if check_theorem and report.status == "optimal" and np.any(tau > TAU_LIMIT):
        raise TheoremCheckError(f"S-lemma multipliers exceed 1: {tau.tolist()}")
    slack_scale = tol.active_slack
    active = [i for i in range(m) if tau[i] > tol.active_slack and report.slack_min_eigs[i] <= slack_scale]
    sign, ld = np.linalg.slogdet(U)
    status = "converged" if report.status == "optimal" else "iteration-capped"
    return UnionResult(
        Estimate(u, U),
        OmegaWeights(tuple(float(t) for t in np.clip(tau, 0.0, 1.0))),
        ld,
        active,
        status,
        {"tau": tau.tolist(), "report": report},
    )


def _shifted_bordered(U, A, d, omega):
    """Bordered matrix ``[[U^-1, -U^-1 d],[., d^T U^-1 d - 1]] - w [[A^-1, 0],[0, -1]]`` (a at the origin)."""
    n = d.shape[0]
    Ui = np.linalg.inv(U)
    Ai = np.linalg.inv(A)
    M = np.empty((n + 1, n + 1))
    M[:n, :n] = Ui - omega * Ai
    M[:n, n] = M[n, :n] = -Ui @ d
    M[n, n] = float(d @ Ui @ d) - 1.0 + omega
    return symmetrize(M)


def check_single_enclosure_equivalence(u, U, a, A, omega: float, tol: Tolerance = Tolerance(psd_eig=1e-8)):
    """Evaluate both sides of the single-ellipsoid GCU/S-lemma equivalence.

    ``lhs``: ``U >= A/w + (u-a)(u-a)^T/(1-w)``.
    ``rhs``: the bordered matrix inequality with multiplier ``w`` after
    moving ``a`` to the origin is negative semidefinite.
    """
    if not 0.0 < omega < 1.0:
        raise InvalidInputError("omega must be strictly inside (0, 1); use gcu_feasible for the endpoints")
    u = np.asarray(u, dtype=float)
    a = np.asarray(a, dtype=float)
    U = np.asarray(U, dtype=float)
    A = np.asarray(A, dtype=float)
    d = u - a
    lhs = is_psd(U - A / omega - np.outer(d, d) / (1.0 - omega), tol)
    rhs = is_psd(-_shifted_bordered(U, A, d, omega), tol)
    return lhs, rhs


def check_single_enclosure_schur(u, U, a, A, omega: float, tol: Tolerance = Tolerance(psd_eig=1e-8)) -> bool:
    """Intermediate Schur form ``[[w A^-1 - U^-1, U^-1 d], [., 1 - w - d^T U^-1 d]] >= 0``."""
    d = np.asarray(u, dtype=float) - np.asarray(a, dtype=float)
    Ui = np.linalg.inv(U)
    return schur_expand_psd_check(omega * np.linalg.inv(A) - Ui, Ui @ d, 1.0 - omega - float(d @ Ui @ d), tol)


def boundary_points(e: Estimate, samples: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(samples, e.dim))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return e.mean + z @ np.linalg.cholesky(e.cov).T


def check_containment_geometric(
    outer: Estimate,
    inner: Estimate,
    samples: int = 200,
    seed: int = 0,
    level_tol: float = 1e-6,
    tol: Tolerance = DEFAULT_TOL,
) -> bool:
    """Sampled 1-sigma boundary of ``inner`` lies in ``E(outer)``, cross-checked with :func:`contains`.

    Raises :class:`TheoremCheckError` when the sampled and S-lemma verdicts disagree.
    """
    pts = boundary_points(inner, samples, np.random.default_rng(seed))
    d = pts - outer.mean
    levels = np.einsum("ki,ij,kj->k", d, np.linalg.inv(outer.cov), d)
    sampled = bool(np.all(levels <= 1.0 + level_tol))
    exact, _ = contains(outer, inner, tol)
    if sampled and not exact:
        # the S-lemma check is exact; a sampling "pass" can only be a miss of the violating region
        return False
    if exact and not sampled:
        raise TheoremCheckError("S-lemma certifies containment but a boundary sample lies outside")
    return sampled
