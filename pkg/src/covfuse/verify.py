"""Seeded random sweeps that check the fusion and union guarantees.

Each case draws from its own generator ``default_rng([seed, k])`` so that
cases are reproducible individually and independent of the sweep length.
"""
from __future__ import annotations

import time
from typing import List

import numpy as np

from .estimates import Estimate
from .fusion import ci_fuse, ci_joint_bound_check
from .maxdet import BarrierParams
from .mee import (
    TAU_LIMIT,
    TheoremCheckError,
    check_containment_geometric,
    check_single_enclosure_equivalence,
    check_single_enclosure_schur,
    contains,
    solve_mee,
)
from .psd import Tolerance, sqrtm_psd, symmetrize
from .union import UnionConfig, gcu_direct, gcu_feasible

LOGDET_AGREEMENT = 1e-3
ENCLOSURE_TOL = Tolerance(psd_eig=1e-8)


def random_spd(rng: np.random.Generator, n: int, max_condition: float = 100.0, scale=(0.2, 5.0)) -> np.ndarray:
    """Random SPD matrix with condition number at most ``max_condition``."""
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    ev = np.exp(rng.uniform(0.0, np.log(max_condition), n))
    ev = ev / ev.max() * rng.uniform(*scale)
    return symmetrize(Q @ np.diag(ev) @ Q.T)


def random_estimate(rng: np.random.Generator, n: int, radius: float = 10.0, max_condition: float = 100.0) -> Estimate:
    """Mean uniform in the ball of ``radius``; covariance from :func:`random_spd`."""
    x = rng.normal(size=n)
    x *= radius * rng.uniform() ** (1.0 / n) / np.linalg.norm(x)
    return Estimate(x, random_spd(rng, n, max_condition))


def random_instance(rng: np.random.Generator, dims=(2, 3), max_inputs: int = 5) -> List[Estimate]:
    n = int(rng.choice(dims))
    m = int(rng.integers(1, max_inputs + 1))
    return [random_estimate(rng, n) for _ in range(m)]


def random_enclosure_tuple(rng: np.random.Generator):
    """``(u, U, a, A, w)`` with ``U = B^1/2 (I + R) B^1/2`` for the constraint right-hand side ``B``.

    ``R`` has eigenvalues of random sign and magnitude in [0.01, 0.5], so
    every tuple is at least 1% (relative) away from the boundary and both
    outcomes occur.
    """
    n = int(rng.integers(2, 4))
    a = rng.normal(size=n) * 3.0
    u = rng.normal(size=n) * 3.0
    A = random_spd(rng, n)
    w = float(rng.uniform(0.02, 0.98))
    d = u - a
    B = A / w + np.outer(d, d) / (1.0 - w)
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    r = rng.choice([-1.0, 1.0], size=n) * rng.uniform(0.01, 0.5, size=n)
    Bh = sqrtm_psd(B)
    U = Bh @ (np.eye(n) + Q @ np.diag(r) @ Q.T) @ Bh
    return u, symmetrize(U), a, A, w


def _equivalence_case(rng, trace: bool) -> dict:
    estimates = random_instance(rng)
    trace_log: list = []
    case = {"n": estimates[0].dim, "m": len(estimates)}
    direct = gcu_direct(estimates, UnionConfig())
    mee = solve_mee(estimates, BarrierParams(), on_iteration=trace_log.append if trace else None)
    gap = abs(direct.objective - mee.objective)
    mee_ok, _ = gcu_feasible(mee.estimate, estimates)
    direct_ok = all(contains(direct.estimate, e)[0] for e in estimates)
    geometric = all(
        check_containment_geometric(mee.estimate, e, samples=200, seed=i) for i, e in enumerate(estimates)
    )
    taus = mee.info.get("tau", [])
    tau_max = max(taus) if taus else 0.0
    case.update(
        logdet_direct=direct.objective,
        logdet_mee=mee.objective,
        logdet_gap=gap,
        mee_feasible_for_gcu=mee_ok,
        direct_encloses_inputs=direct_ok,
        containment=geometric,
        tau_max=tau_max,
        status_direct=direct.status,
        status_mee=mee.status,
    )
    case["pass"] = bool(
        gap <= LOGDET_AGREEMENT and mee_ok and direct_ok and geometric
        and (mee.status != "converged" or tau_max <= TAU_LIMIT)
    )
    if trace:
        case["trace"] = trace_log
    return case


def _ci_bounds_case(rng, trace: bool, cross_samples: int = 50) -> dict:
    n = int(rng.integers(2, 4))
    estimates = [random_estimate(rng, n) for _ in range(2)]
    fused = ci_fuse(estimates)
    sub_seed = int(rng.integers(2**31))
    ok = ci_joint_bound_check(estimates, fused.weights, cross_samples=cross_samples, seed=sub_seed)
    return {"n": n, "weights": list(fused.weights.weights), "samples": cross_samples, "pass": bool(ok)}


def _single_enclosure_case(rng, trace: bool) -> dict:
    u, U, a, A, w = random_enclosure_tuple(rng)
    lhs, rhs = check_single_enclosure_equivalence(u, U, a, A, w, ENCLOSURE_TOL)
    schur = check_single_enclosure_schur(u, U, a, A, w, ENCLOSURE_TOL)
    return {"n": len(u), "omega": w, "lhs": lhs, "rhs": rhs, "schur": schur, "pass": lhs == rhs == schur}


SUITES = {
    "equivalence": _equivalence_case,
    "ci-bounds": _ci_bounds_case,
    "single-enclosure": _single_enclosure_case,
}


def run_suite(suite: str, n: int, seed: int, trace: bool = False) -> dict:
    """Run ``n`` cases of ``suite``.  A :class:`TheoremCheckError` inside a case marks it failed."""
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}")
    case_fn = SUITES[suite]
    start = time.perf_counter()
    cases = []
    for k in range(n):
        rng = np.random.default_rng([seed, k])
        try:
            case = case_fn(rng, trace)
        except TheoremCheckError as exc:
            case = {"pass": False, "theorem_violation": str(exc)}
        case["index"] = k
        cases.append(case)
    failed = [c["index"] for c in cases if not c["pass"]]
    return {
        "suite": suite,
        "n": n,
        "seed": seed,
        "passed": n - len(failed),
        "failed": failed,
        "cases": cases,
        "wall_time": time.perf_counter() - start,
    }
