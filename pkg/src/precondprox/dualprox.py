"""Closed-form dual updates for the preconditioned proximal subproblem.

For ``P = M^T D M`` with ``A`` the leading rows of ``M`` the subproblem

    min_v  grad^T v + g(Ax + Av) + 0.5 ||v||_P^2

has the dual

    min_y  0.5 y^T D^{-1} y + g*(y) - a^T y,     a = Ax - A P^{-1} grad,

whose solution is a cheap projection or clipping for every supported term.
The primal direction is recovered as ``v = -P^{-1}(grad + A^T y)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .precond import Preconditioner, WorkingMatrix, apply_inverse, working_preconditioner
from .problem import (
    CappedSimplex,
    CompositeProblem,
    EllipsoidIndicator,
    GenericWorkingSet,
    L1,
    SimplexConstraint,
    FEAS_TOL,
    domain_contains,
)

__all__ = [
    "DualSolution",
    "dual_coefficient",
    "solve_dual",
    "prox_direction",
    "precond_project",
    "working_prox",
    "working_kind",
]


@dataclass(frozen=True)
class DualSolution:
    y: np.ndarray
    a: np.ndarray
    v: np.ndarray


def working_kind(term) -> Optional[str]:
    if isinstance(term, SimplexConstraint):
        return "simplex"
    if isinstance(term, CappedSimplex):
        return "capped"
    return None


def dual_coefficient(x, grad, P: Preconditioner, A) -> np.ndarray:
    """``a = A x - A P^{-1} grad``."""
    x = np.asarray(x, dtype=float)
    return A.matvec(x) - A.matvec(apply_inverse(P, grad))


def solve_dual(term, a, D, index: Optional[int] = None) -> np.ndarray:
    """Minimizer of ``0.5 ||y||^2_{D^{-1}} + g*(y) - a^T y``.

    Parameters
    ----------
    term : NonsmoothTerm
    a : ndarray, shape (m,)
    D : float or ndarray, shape (m,)
        Positive diagonal of the dual metric.
    index : int, optional
        Working index, required for the simplex-type terms.
    """
    a = np.asarray(a, dtype=float)
    d = np.broadcast_to(np.asarray(D, dtype=float), a.shape)
    if np.any(d <= 0):
        raise ValueError("dual metric must have positive entries")

    if isinstance(term, L1):
        return np.clip(d * a, -term.lam, term.lam)

    if isinstance(term, EllipsoidIndicator):
        if not np.all(d == d[0]):
            raise ValueError("the ball dual has a closed form only for a scalar metric")
        # g* is the support function r||y||; Moreau: y = D (a - proj_ball(a))
        r = term.radius
        na = float(np.linalg.norm(a))
        shrink = 0.0 if na <= r else 1.0 - r / na
        return d * (shrink * a)

    if isinstance(term, SimplexConstraint):
        if index is None:
            raise ValueError("simplex dual needs the working index")
        y = np.maximum(a, 0.0)
        y[index] = a[index] - 1.0
        return d * y

    if isinstance(term, CappedSimplex):
        if index is None:
            raise ValueError("capped simplex dual needs the working index")
        y = a - np.clip(a, 0.0, 1.0)
        y[index] = max(a[index] - term.s, 0.0)
        return d * y

    if isinstance(term, GenericWorkingSet):
        p = term.n_ineq
        y = np.empty_like(a)
        y[:p] = np.maximum(a[:p] - term.upper, 0.0)
        y[p:] = a[p:] - term.eq
        return d * y

    raise TypeError(f"unsupported nonsmooth term {term!r}")


def _dual_operator(term, A, P: Preconditioner):
    if working_kind(term) is not None:
        factor = P.factor
        if not isinstance(factor, WorkingMatrix) or factor.kind != working_kind(term):
            raise ValueError("simplex-type terms need a working-matrix preconditioner")
        return factor, factor.index
    return A, None


def _prox(term, A, x, grad, P: Preconditioner) -> DualSolution:
    op, index = _dual_operator(term, A, P)
    a = dual_coefficient(x, grad, P, op)
    y = solve_dual(term, a, P.dual_weights(), index)
    v = -apply_inverse(P, grad + op.rmatvec(y))
    return DualSolution(y=y, a=a, v=v)


def prox_direction(problem: CompositeProblem, x, grad, P: Preconditioner) -> DualSolution:
    """Preconditioned proximal gradient direction at ``x``."""
    return _prox(problem.nonsmooth, problem.op, np.asarray(x, float), np.asarray(grad, float), P)


def precond_project(term, P: Preconditioner, A, z) -> np.ndarray:
    """``argmin_{w in dom(g o A)} ||w - z||_P``; identity for ``L1``."""
    z = np.asarray(z, dtype=float)
    if isinstance(term, L1):
        return z.copy()
    sol = _prox(term, A, z, np.zeros_like(z), P)
    return z + sol.v


def _next_index(kind: str, z: np.ndarray) -> int:
    if kind == "simplex":
        return int(np.argmax(z))
    # most interior coordinate of the box
    return int(np.argmax(np.minimum(z, 1.0 - z)))


def working_prox(
    problem: CompositeProblem,
    x,
    grad,
    scale: float,
    index: Optional[int] = None,
    attempts: int = 8,
    tol: float = FEAS_TOL,
):
    """Prox direction for simplex-type terms with working-index re-selection.

    The working matrix drops the bound constraints of one coordinate.  When
    the resulting point ``x + v`` violates a dropped bound, the index is
    re-selected from ``x + v`` and the step recomputed.  Returns the dual
    solution and the preconditioner that produced it.
    """
    term = problem.nonsmooth
    kind = working_kind(term)
    x = np.asarray(x, dtype=float)
    grad = np.asarray(grad, dtype=float)
    n = problem.dim
    i = term.policy(x) if index is None else index
    tried = set()
    best = None
    for _ in range(max(attempts, 1)):
        tried.add(i)
        P = working_preconditioner(kind, n, i, scale)
        sol = _prox(term, problem.op, x, grad, P)
        z = x + sol.v
        if domain_contains(problem, z, tol):
            return sol, P
        viol = _bound_violation(kind, z)
        if best is None or viol < best[0]:
            best = (viol, sol, P)
        i = _next_index(kind, z)
        if i in tried:
            candidates = [j for j in np.argsort(-z) if j not in tried]
            if not candidates:
                break
            i = int(candidates[0])
    return best[1], best[2]


def working_project(problem: CompositeProblem, z, scale: float, index: Optional[int] = None, attempts: int = 8):
    """Metric projection onto the simplex-type domain with index re-selection."""
    sol, P = working_prox(problem, z, np.zeros(problem.dim), scale, index, attempts)
    return np.asarray(z, float) + sol.v, P


def _bound_violation(kind, z):
    low = float(np.max(-z, initial=0.0))
    if kind == "simplex":
        return low
    return max(low, float(np.max(z - 1.0, initial=0.0)))
