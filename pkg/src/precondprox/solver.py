"""Preconditioned proximal gradient method with (conjugate) momentum."""

from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .dualprox import prox_direction, working_kind, working_prox
from .precond import (
    DEFAULT_CLIP,
    Preconditioner,
    apply_inverse,
    apply_unit,
    bb_rescale,
    build_preconditioner,
    working_preconditioner,
)
from .problem import CompositeProblem, domain_contains, eval_nonsmooth, eval_objective
from .subspace import SubspaceStep, build_direction, fd_step, hvp_fd, model_decrement, momentum_direction

__all__ = [
    "Variant",
    "SolverConfig",
    "TraceRecord",
    "StepInfo",
    "SolverState",
    "RunResult",
    "LineSearchError",
    "InfeasibleStartError",
    "armijo_search",
    "init_state",
    "step",
    "run",
]

logger = logging.getLogger(__name__)


class Variant(enum.Enum):
    CONJUGATE_MOMENTUM = "P2GM_CM"
    PLAIN_MOMENTUM = "P2GM_M"


class LineSearchError(RuntimeError):
    """Backtracking did not find an acceptable step."""


class InfeasibleStartError(ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    c1: float = 1e-8
    c2: float = 1e8
    sigma: float = 1e-4
    gamma: float = 0.5
    fd_eps_scale: float = 1.0
    tol: float = 1e-10
    max_iter: int = 5000
    variant: Variant = Variant.CONJUGATE_MOMENTUM
    alpha_clip: tuple = DEFAULT_CLIP
    initial_scale: Optional[float] = None
    exact_hessian: bool = False
    max_backtracks: int = 100
    working_attempts: int = 8
    stall_rtol: float = 1e-12

    def __post_init__(self):
        if not 0 < self.c1 <= self.c2:
            raise ValueError("need 0 < c1 <= c2")
        if not 0 < self.sigma < 1 or not 0 < self.gamma < 1:
            raise ValueError("sigma and gamma must lie in (0, 1)")
        lo, hi = self.alpha_clip
        if not 0 < lo <= hi:
            raise ValueError("need 0 < alpha_lo <= alpha_hi")
        if self.tol < 0 or self.max_iter < 0:
            raise ValueError("tol and max_iter must be nonnegative")

    @property
    def conjugate(self) -> bool:
        return self.variant is Variant.CONJUGATE_MOMENTUM


@dataclass(frozen=True)
class TraceRecord:
    iter: int
    objective: float
    residual: float
    stepsize: float
    wall_seconds: float


@dataclass(frozen=True)
class StepInfo:
    """Quantities behind the descent guarantees of one iteration."""

    decrement: float
    norm_d: float
    norm_v: float
    c3: float
    c4: float
    scale: float
    subspace: Optional[SubspaceStep] = None


@dataclass
class SolverState:
    x: np.ndarray
    fx: float
    grad: np.ndarray
    k: int = 0
    x_prev: Optional[np.ndarray] = None
    grad_prev: Optional[np.ndarray] = None
    d_prev: Optional[np.ndarray] = None
    scale: Optional[float] = None
    residual: float = np.nan
    status: str = "running"
    elapsed: float = 0.0

    @property
    def done(self) -> bool:
        return self.status != "running"


@dataclass
class RunResult:
    x: np.ndarray
    objective: float
    initial_objective: float
    status: str
    trace: List[TraceRecord] = field(default_factory=list)
    info: List[StepInfo] = field(default_factory=list)
    algo: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return len(self.trace)


def _armijo(problem, x, fx, d, decrement, sigma, gamma, max_backtracks):
    if not decrement < 0:
        raise LineSearchError(f"model decrement {decrement!r} is not negative")
    t = 1.0
    for _ in range(max_backtracks + 1):
        f_new = eval_objective(problem, x + t * d)
        if f_new - fx <= sigma * t * decrement:
            return t, f_new
        t *= gamma
    raise LineSearchError(f"no acceptable step after {max_backtracks} backtracks")


def armijo_search(problem: CompositeProblem, x, d, model_decrement: float, sigma: float, gamma: float, max_backtracks: int = 100) -> float:
    """Largest ``gamma**j`` meeting the sufficient-decrease test."""
    x = np.asarray(x, dtype=float)
    t, _ = _armijo(problem, x, eval_objective(problem, x), np.asarray(d, float), model_decrement, sigma, gamma, max_backtracks)
    return t


class _Metric:
    """Per-run source of the unit-scale preconditioner."""

    def __init__(self, problem: CompositeProblem, config: SolverConfig):
        self.problem = problem
        self.config = config
        self.kind = working_kind(problem.nonsmooth)
        self.base = None if self.kind is not None else build_preconditioner(problem.op)

    def unit(self, x) -> Preconditioner:
        if self.kind is None:
            return self.base
        return working_preconditioner(self.kind, self.problem.dim, self.problem.nonsmooth.policy(x))

    def direction(self, x, grad, P: Preconditioner):
        if self.kind is None:
            return prox_direction(self.problem, x, grad, P).v, P
        sol, P = working_prox(self.problem, x, grad, P.scale, P.factor.index, self.config.working_attempts)
        return sol.v, P


def _hessian(problem, x, config):
    if not config.exact_hessian:
        return None
    if problem.smooth.hessian is None:
        raise ValueError("exact_hessian requested but the oracle has no Hessian")
    return np.asarray(problem.smooth.hessian(x), dtype=float)


def _initial_scale(problem, P1, x, grad, config, hess):
    """Rayleigh quotient of f's curvature against ``P_1`` along ``P_1^{-1} grad``."""
    if config.initial_scale is not None:
        return float(config.initial_scale)
    u = apply_inverse(P1, grad)
    if not np.any(u):
        return 1.0
    hu = hess @ u if hess is not None else hvp_fd(problem.smooth, x, u, fd_step(x, u, config.fd_eps_scale), grad)
    num = float(u @ hu)
    if not num > 0:
        return 1.0
    lo, hi = config.alpha_clip
    return min(max(num / float(u @ apply_unit(P1, u)), lo), hi)


def init_state(problem: CompositeProblem, x0) -> SolverState:
    x0 = np.array(x0, dtype=float)
    if not domain_contains(problem, x0, 1e-8):
        raise InfeasibleStartError("x0 must lie in dom(g o A)")
    return SolverState(x=x0, fx=eval_objective(problem, x0, 1e-8), grad=problem.smooth.gradient(x0))


def step(problem: CompositeProblem, state: SolverState, config: SolverConfig, _metric: Optional[_Metric] = None):
    """One iteration.  Returns ``(state, record, info)``; record is None on exit."""
    metric = _metric or _Metric(problem, config)
    t0 = time.perf_counter()
    x, grad = state.x, state.grad
    hess = _hessian(problem, x, config)

    P = metric.unit(x)
    if state.k == 0 or state.x_prev is None:
        scale = _initial_scale(problem, P, x, grad, config, hess)
        P = P.with_scale(scale)
    else:
        P = bb_rescale(P.with_scale(state.scale), x - state.x_prev, grad - state.grad_prev, config.alpha_clip)

    v, P = metric.direction(x, grad, P)
    res = float(np.linalg.norm(v))
    state.residual = res
    if res <= config.tol * (1.0 + float(np.linalg.norm(x))):
        state.status = "converged"
        return state, None, None

    sub = None
    if state.d_prev is None:
        d = v
    else:
        s = momentum_direction(problem, P, x, state.d_prev, config.working_attempts)
        sub = build_direction(problem, x, grad, v, s, config, hess)
        d = sub.d

    g_x = eval_nonsmooth(problem, x)
    dec = model_decrement(problem, x, grad, d, g_x)
    stall = config.stall_rtol * (1.0 + abs(state.fx))
    try:
        t, f_new = _armijo(problem, x, state.fx, d, dec, config.sigma, config.gamma, config.max_backtracks)
    except LineSearchError:
        if np.isfinite(dec) and abs(dec) <= stall:
            state.status = "stalled"
            return state, None, None
        raise

    x_new = x + t * d
    c3, c4 = P.bounds
    info = StepInfo(dec, float(np.linalg.norm(d)), res, c3, c4, P.scale, sub)
    state.x_prev, state.grad_prev = x, grad
    state.x, state.fx = x_new, f_new
    state.grad = problem.smooth.gradient(x_new)
    state.d_prev = d
    state.scale = P.scale
    state.k += 1
    state.elapsed += time.perf_counter() - t0
    record = TraceRecord(state.k, f_new, res, t, state.elapsed)
    return state, record, info


def run(
    problem: CompositeProblem,
    x0,
    config: SolverConfig = SolverConfig(),
    callback: Optional[Callable[[SolverState, TraceRecord, StepInfo], None]] = None,
    record_info: bool = True,
) -> RunResult:
    """Iterate :func:`step` until the residual test fires or ``max_iter``.

    The status is ``converged``, ``stalled`` (no representable decrease left),
    ``max_iter`` or ``line_search_failed``; the last iterate is returned in
    every case.  ``record_info=False`` drops the per-iteration
    :class:`StepInfo` (which holds the subspace vectors) to save memory.
    """
    state = init_state(problem, x0)
    metric = _Metric(problem, config)
    result = RunResult(x=state.x, objective=state.fx, initial_objective=state.fx, status="max_iter",
                       algo=config.variant.value)
    for _ in range(config.max_iter):
        try:
            state, record, info = step(problem, state, config, metric)
        except LineSearchError as err:
            logger.warning("%s: %s at iteration %d", result.algo, err, state.k)
            result.status = "line_search_failed"
            break
        if record is None:
            result.status = state.status
            break
        result.trace.append(record)
        if record_info:
            result.info.append(info)
        if callback is not None:
            callback(state, record, info)
    result.x = state.x
    result.objective = state.fx
    logger.debug("%s: %s after %d iterations, F=%.16e", result.algo, result.status, result.iterations, result.objective)
    return result
