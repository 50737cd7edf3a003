"""First-order reference methods: FISTA (with and without restart) and PDHG."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .problem import L1, CompositeProblem, SimplexConstraint, eval_objective
from .solver import RunResult, TraceRecord

__all__ = [
    "CapabilityError",
    "PdhgConfig",
    "euclid_simplex_project",
    "soft_threshold",
    "fista_bt",
    "fista_bt_rs",
    "pdhg",
    "supports",
]


class CapabilityError(ValueError):
    """The method cannot handle this nonsmooth term."""


def soft_threshold(z, thresh):
    return np.sign(z) * np.maximum(np.abs(z) - thresh, 0.0)


def euclid_simplex_project(z) -> np.ndarray:
    """Euclidean projection onto the unit simplex (sort and threshold)."""
    z = np.asarray(z, dtype=float)
    u = np.sort(z)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, z.size + 1)
    rho = np.nonzero(u - css / ind > 0)[0][-1]
    tau = css[rho] / (rho + 1.0)
    return np.maximum(z - tau, 0.0)


def _prox_for(problem: CompositeProblem):
    term = problem.nonsmooth
    if isinstance(term, L1) and problem.op.is_identity:
        lam = term.lam
        return lambda z, step: soft_threshold(z, lam * step)
    if isinstance(term, SimplexConstraint):
        return lambda z, step: euclid_simplex_project(z)
    raise CapabilityError("no closed-form prox of g o A")


def supports(algo: str, problem: CompositeProblem) -> bool:
    try:
        if algo in ("FISTA_bt", "FISTA_bt_rs"):
            _prox_for(problem)
        elif algo == "PDHG":
            _check_pdhg(problem)
    except CapabilityError:
        return False
    return True


_ROUND_SLACK = 10.0 * np.finfo(float).eps


def _fista(problem: CompositeProblem, x0, max_iter: int, restart: bool, lipschitz0: float = 1.0,
           eta: float = 2.0, tol: float = 0.0) -> RunResult:
    prox = _prox_for(problem)
    f = problem.smooth
    x = np.array(x0, dtype=float)
    y = x.copy()
    t = 1.0
    lip = lipschitz0
    f0 = eval_objective(problem, x)
    out = RunResult(x=x, objective=f0, initial_objective=f0, status="max_iter",
                    algo="FISTA_bt_rs" if restart else "FISTA_bt")
    out.extra["restarts"] = 0
    elapsed = 0.0
    for k in range(max_iter):
        tic = time.perf_counter()
        gy = f.gradient(y)
        fy = f.value(y)
        # rounding slack, otherwise L doubles without bound once diff is at noise level
        slack = _ROUND_SLACK * (1.0 + abs(fy))
        while True:
            p = prox(y - gy / lip, 1.0 / lip)
            diff = p - y
            if f.value(p) <= fy + gy @ diff + 0.5 * lip * (diff @ diff) + slack:
                break
            lip *= eta
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        step = p - x
        if restart and float((y - p) @ step) > 0:
            t, t_new = 1.0, 1.0
            y = p.copy()
            out.extra["restarts"] += 1
        else:
            y = p + ((t - 1.0) / t_new) * step
        x = p
        t = t_new
        fx = eval_objective(problem, x)
        elapsed += time.perf_counter() - tic
        res = float(np.linalg.norm(step))
        out.trace.append(TraceRecord(k + 1, fx, res, 1.0 / lip, elapsed))
        if res <= tol:
            out.status = "converged"
            break
    out.x, out.objective = x, eval_objective(problem, x)
    return out


def fista_bt(problem: CompositeProblem, x0, max_iter: int, **kw) -> RunResult:
    """FISTA with backtracking estimation of the Lipschitz constant."""
    return _fista(problem, x0, max_iter, restart=False, **kw)


def fista_bt_rs(problem: CompositeProblem, x0, max_iter: int, **kw) -> RunResult:
    """FISTA with backtracking and gradient-based adaptive restart.

    The momentum is reset whenever ``<y - x_next, x_next - x> > 0``.
    """
    return _fista(problem, x0, max_iter, restart=True, **kw)


@dataclass(frozen=True)
class PdhgConfig:
    tau: float
    theta: float
    sigma_dual: float

    def __post_init__(self):
        if not (self.tau > 0 and self.theta > 0 and self.sigma_dual > 0):
            raise ValueError("PDHG parameters must be positive")

    @classmethod
    def from_problem(cls, problem: CompositeProblem, theta: float = 0.9) -> "PdhgConfig":
        """``tau = 1/L``, ``sigma = 4 / (tau (1 + theta)^2 ||A^T A||)``."""
        lip = problem.smooth.lipschitz
        if lip is None:
            raise ValueError("PDHG needs the Lipschitz constant of grad f")
        tau = 1.0 / lip
        ata = float(problem.op.svd_sigma[0]) ** 2
        return cls(tau, theta, 4.0 / (tau * (1.0 + theta) ** 2 * ata))


def _check_pdhg(problem):
    if not isinstance(problem.nonsmooth, L1):
        raise CapabilityError("PDHG is implemented for the l1 term only")


def pdhg(problem: CompositeProblem, x0, y0=None, config: Optional[PdhgConfig] = None,
         max_iter: int = 1000) -> RunResult:
    """Linearized primal-dual iteration for ``f(x) + lam ||Ax||_1``.

    ``x+ = x - tau (grad f(x) + A^T y)``, ``xbar = x+ + theta (x+ - x)``,
    ``y+ = clip(y + sigma A xbar, -lam, lam)``.
    """
    _check_pdhg(problem)
    config = config or PdhgConfig.from_problem(problem)
    lam = problem.nonsmooth.lam
    op = problem.op
    x = np.array(x0, dtype=float)
    y = np.zeros(op.rows) if y0 is None else np.clip(np.asarray(y0, float), -lam, lam)
    f0 = eval_objective(problem, x)
    out = RunResult(x=x, objective=f0, initial_objective=f0, status="max_iter", algo="PDHG")
    elapsed = 0.0
    for k in range(max_iter):
        tic = time.perf_counter()
        x_new = x - config.tau * (problem.smooth.gradient(x) + op.rmatvec(y))
        xbar = x_new + config.theta * (x_new - x)
        y = np.clip(y + config.sigma_dual * op.matvec(xbar), -lam, lam)
        res = float(np.linalg.norm(x_new - x))
        x = x_new
        fx = eval_objective(problem, x)
        elapsed += time.perf_counter() - tic
        out.trace.append(TraceRecord(k + 1, fx, res, config.tau, elapsed))
        if not np.isfinite(fx):
            out.status = "diverged"
            break
    out.x, out.objective = x, eval_objective(problem, x)
    out.extra["dual"] = y
    return out
