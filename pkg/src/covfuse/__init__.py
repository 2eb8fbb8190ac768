"""Covariance fusion (Kalman, Covariance Intersection) and covariance union (CU, GCU).

GCU is available two ways: a direct search over the union constraints and a
minimum-enclosing-ellipsoid solve with a log-det barrier method.
"""
from .errors import (
    ConditioningError,
    CovfuseError,
    DegenerateTripleError,
    DimensionError,
    InconsistentJointError,
    InfeasibleError,
    InvalidInputError,
    SingularMatrixError,
)
from .estimates import EllipsoidTriple, Estimate, JointEstimate, assemble_joint, from_triple, mahalanobis, to_triple
from .fusion import (
    CIConfig,
    FusionResult,
    OmegaWeights,
    ci_bound,
    ci_fuse,
    ci_joint_bound_check,
    covariance_addition,
    kalman_fuse,
    translate_ca,
    translate_cu,
)
from .maxdet import BarrierParams, MaxdetProblem, SolverReport
from .maxdet import solve as solve_maxdet
from .mee import (
    TheoremCheckError,
    check_containment_geometric,
    check_single_enclosure_equivalence,
    check_single_enclosure_schur,
    contains,
    solve_mee,
)
from .psd import DEFAULT_TOL, Tolerance, is_psd, psd_order
from .union import UnionConfig, UnionResult, cu_union, gcu_direct, gcu_feasible, matrix_union

__version__ = "0.1.0"

__all__ = [
    "BarrierParams",
    "CIConfig",
    "ConditioningError",
    "CovfuseError",
    "DEFAULT_TOL",
    "DegenerateTripleError",
    "DimensionError",
    "EllipsoidTriple",
    "Estimate",
    "FusionResult",
    "InconsistentJointError",
    "InfeasibleError",
    "InvalidInputError",
    "JointEstimate",
    "MaxdetProblem",
    "OmegaWeights",
    "SingularMatrixError",
    "SolverReport",
    "TheoremCheckError",
    "Tolerance",
    "UnionConfig",
    "UnionResult",
    "assemble_joint",
    "check_containment_geometric",
    "check_single_enclosure_equivalence",
    "check_single_enclosure_schur",
    "ci_bound",
    "ci_fuse",
    "ci_joint_bound_check",
    "contains",
    "covariance_addition",
    "cu_union",
    "from_triple",
    "gcu_direct",
    "gcu_feasible",
    "is_psd",
    "kalman_fuse",
    "mahalanobis",
    "matrix_union",
    "psd_order",
    "solve_maxdet",
    "solve_mee",
    "to_triple",
    "translate_ca",
    "translate_cu",
]
