"""Preconditioned proximal gradient methods with subspace momentum.

Solves ``min_x f(x) + g(A x)`` with a preconditioner chosen so that
``A P^{-1} A^T`` is diagonal, which turns every proximal subproblem into a
closed-form dual update.
"""

from .baselines import CapabilityError, fista_bt, fista_bt_rs, pdhg
from .problem import (
    CappedSimplex,
    CompositeProblem,
    EllipsoidIndicator,
    GenericWorkingSet,
    L1,
    LinearMap,
    SimplexConstraint,
    eval_objective,
    least_squares,
    quadratic,
)
from .solver import RunResult, SolverConfig, Variant, run

__all__ = [
    "CapabilityError",
    "CappedSimplex",
    "CompositeProblem",
    "EllipsoidIndicator",
    "GenericWorkingSet",
    "L1",
    "LinearMap",
    "RunResult",
    "SimplexConstraint",
    "SolverConfig",
    "Variant",
    "eval_objective",
    "fista_bt",
    "fista_bt_rs",
    "least_squares",
    "pdhg",
    "quadratic",
    "run",
]
