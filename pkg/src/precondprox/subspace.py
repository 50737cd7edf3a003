"""Two-dimensional conjugate-momentum subspace step.

The search direction is built in ``span{v_k, s_k}`` where ``v_k`` is the
preconditioned proximal gradient direction and ``s_k`` the (projected)
previous direction.  ``s_k`` is made conjugate to ``v_k`` in a
finite-difference Hessian inner product, after which three exact 1-D
minimizations give the final direction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dualprox import precond_project, working_kind, working_project
from .oned import PiecewiseQuadratic1D, feasible_range, min_quad_on_segment, min_quad_plus_l1
from .precond import Preconditioner
from .problem import L1, CompositeProblem, SmoothOracle, domain_contains, eval_nonsmooth

__all__ = [
    "CurvatureProbe",
    "SubspaceStep",
    "momentum_direction",
    "hvp_fd",
    "fd_step",
    "curvature",
    "conjugate_orthogonalize",
    "ray_minimize",
    "model_decrement",
    "build_direction",
]

_SQRT_EPS = float(np.sqrt(np.finfo(float).eps))
_DEGENERATE = 1e-12


@dataclass(frozen=True)
class CurvatureProbe:
    hv: np.ndarray
    q: float
    eps_used: float


@dataclass(frozen=True)
class SubspaceStep:
    v: np.ndarray
    s: np.ndarray
    s_tilde: np.ndarray
    alpha1: float
    alpha2: float
    alpha3: float
    q_v: float
    q_s: float
    q_d: float
    d: np.ndarray
    degenerate: bool = False


def fd_step(x, v, scale: float = 1.0) -> float:
    """``sqrt(eps) (1 + ||x||) / ||v||``."""
    return scale * _SQRT_EPS * (1.0 + float(np.linalg.norm(x))) / float(np.linalg.norm(v))


def hvp_fd(oracle: SmoothOracle, x, v, eps: float, grad_x=None) -> np.ndarray:
    """``(grad f(x + eps v) - grad f(x)) / eps``."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    g0 = oracle.gradient(x) if grad_x is None else grad_x
    return (oracle.gradient(x + eps * v) - g0) / eps


def curvature(v, hv, c1: float, c2: float) -> float:
    """Safeguarded curvature ``q(v)``, always within ``[c1, c2]``."""
    v = np.asarray(v, dtype=float)
    hv = np.asarray(hv, dtype=float)
    vhv = float(v @ hv)
    vv = float(v @ v)
    if vhv > 0:
        raw = vhv / vv
    elif vhv < 0:
        raw = float(np.linalg.norm(hv)) / np.sqrt(vv)
    else:
        return c1
    return max(c1, min(raw, c2))


def conjugate_orthogonalize(v, s, hv, q_v: float) -> np.ndarray:
    """``s - (s^T Hv / (q_v ||v||^2)) v``."""
    v = np.asarray(v, dtype=float)
    s = np.asarray(s, dtype=float)
    coef = float(s @ hv) / (q_v * float(v @ v))
    return s - coef * v


def momentum_direction(problem: CompositeProblem, P: Preconditioner, x, d_prev, attempts: int = 8):
    """Previous direction, projected back onto the domain when it leaves it."""
    x = np.asarray(x, dtype=float)
    d_prev = np.asarray(d_prev, dtype=float)
    trial = x + d_prev
    if domain_contains(problem, trial):
        return d_prev.copy()
    term = problem.nonsmooth
    if working_kind(term) is not None:
        proj, _ = working_project(problem, trial, P.scale, P.factor.index, attempts)
    else:
        proj = precond_project(term, P, problem.op, trial)
    return proj - x


def ray_minimize(problem: CompositeProblem, x, u, slope: float, quad: float) -> float:
    """Exact minimizer of ``slope * t + g(Ax + t Au) + 0.5 * quad * t^2``."""
    if not quad > 0:
        raise ValueError("ray curvature must be positive")
    term = problem.nonsmooth
    if isinstance(term, L1):
        w = problem.op.matvec(u)
        if not np.any(w):
            return -slope / quad
        z = problem.op.matvec(x)
        lam = term.lam
        return min_quad_plus_l1(PiecewiseQuadratic1D(0.5 * quad / lam, slope / lam, z, w))
    t_l, t_u = feasible_range(term, problem.op, x, u)
    return min_quad_on_segment(0.5 * quad, slope, t_l, t_u)


def model_decrement(problem: CompositeProblem, x, grad, d, g_x: Optional[float] = None) -> float:
    """``grad^T d + g(A(x + d)) - g(Ax)``."""
    if g_x is None:
        g_x = eval_nonsmooth(problem, x)
    return float(grad @ d) + eval_nonsmooth(problem, x + d) - g_x


def _probe(problem, x, grad, u, config, hess):
    if hess is not None:
        return hess @ u, 0.0
    eps = fd_step(x, u, config.fd_eps_scale)
    return hvp_fd(problem.smooth, x, u, eps, grad_x=grad), eps


def build_direction(
    problem: CompositeProblem,
    x,
    grad,
    v,
    s,
    config,
    hess: Optional[np.ndarray] = None,
) -> SubspaceStep:
    """Direction from the conjugate subspace model.

    ``s`` is the momentum direction (already projected).  ``config`` supplies
    ``c1``, ``c2``, ``fd_eps_scale`` and ``conjugate`` (False skips the
    orthogonalization).  ``hess`` switches the probes to exact products.
    """
    c1, c2 = config.c1, config.c2
    hv, _ = _probe(problem, x, grad, v, config, hess)
    q_v = curvature(v, hv, c1, c2)
    vv = float(v @ v)
    if config.conjugate:
        s_tilde = conjugate_orthogonalize(v, s, hv, q_v)
    else:
        s_tilde = np.array(s, dtype=float)

    alpha1 = ray_minimize(problem, x, v, float(grad @ v), q_v * vv)

    degenerate = float(np.linalg.norm(s_tilde)) <= _DEGENERATE * (1.0 + float(np.linalg.norm(s)))
    if degenerate:
        alpha2, q_s = 0.0, c1
    else:
        hs, _ = _probe(problem, x, grad, s_tilde, config, hess)
        q_s = curvature(s_tilde, hs, c1, c2)
        alpha2 = ray_minimize(problem, x, s_tilde, float(grad @ s_tilde), q_s * float(s_tilde @ s_tilde))

    d_tilde = alpha1 * v + alpha2 * s_tilde
    q_d = q_v * alpha1**2 * vv + q_s * alpha2**2 * float(s_tilde @ s_tilde)
    if not np.any(d_tilde) or not q_d > 0:
        d = alpha1 * v
        return SubspaceStep(v, s, s_tilde, alpha1, 0.0, 1.0, q_v, q_s, q_v * alpha1**2 * vv, d, True)

    alpha3 = ray_minimize(problem, x, d_tilde, float(grad @ d_tilde), q_d)
    d = alpha3 * d_tilde
    return SubspaceStep(v, s, s_tilde, alpha1, alpha2, alpha3, q_v, q_s, q_d, d, degenerate)
