"""Composite problems ``F(x) = f(x) + g(Ax)``.

A problem couples a smooth oracle ``f`` with a linear map ``A`` and a
structured nonsmooth term ``g``.  The nonsmooth terms supported here are the
ones whose dual proximal update has a closed form under the structure
exploiting preconditioner (see :mod:`precondprox.dualprox`).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

__all__ = [
    "RankClass",
    "LinearMap",
    "SmoothOracle",
    "L1",
    "EllipsoidIndicator",
    "SimplexConstraint",
    "CappedSimplex",
    "GenericWorkingSet",
    "NonsmoothTerm",
    "CompositeProblem",
    "DimensionError",
    "RankError",
    "FEAS_TOL",
    "eval_objective",
    "eval_gradient",
    "eval_nonsmooth",
    "domain_contains",
    "quadratic",
    "least_squares",
]

#: Absolute feasibility tolerance for indicator terms.
FEAS_TOL = 1e-10

_RANK_RTOL = 1e-12


class DimensionError(ValueError):
    """Raised when vector or matrix shapes do not agree."""


class RankError(ValueError):
    """Raised when a matrix is neither full column nor full row rank."""


class RankClass(enum.Enum):
    FULL_COLUMN = "full_column"
    FULL_ROW = "full_row"
    DEFICIENT = "deficient"


class LinearMap:
    """Dense operator with a cached full SVD ``A = U diag(sigma) V^T``.

    Parameters
    ----------
    entries : array_like, shape (m, n)
        The matrix.
    """

    def __init__(self, entries):
        a = np.array(entries, dtype=float, copy=True)
        if a.ndim != 2 or a.size == 0:
            raise DimensionError("LinearMap needs a nonempty 2-D matrix")
        a.setflags(write=False)
        self.entries = a
        self.rows, self.cols = a.shape
        u, sigma, vt = np.linalg.svd(a, full_matrices=True)
        self.svd_u = u
        self.svd_sigma = sigma
        self.svd_v = vt.T
        self._identity = False
        for arr in (self.svd_u, self.svd_sigma, self.svd_v):
            arr.setflags(write=False)
        self.rank_class = self._classify()

    @classmethod
    def identity(cls, n: int) -> "LinearMap":
        """Identity map on ``R^n`` with trivial SVD factors."""
        obj = cls.__new__(cls)
        eye = np.eye(n)
        eye.setflags(write=False)
        ones = np.ones(n)
        ones.setflags(write=False)
        obj.entries = eye
        obj.rows = obj.cols = n
        obj.svd_u = eye
        obj.svd_sigma = ones
        obj.svd_v = eye
        obj._identity = True
        obj.rank_class = RankClass.FULL_COLUMN
        return obj

    @property
    def is_identity(self) -> bool:
        return self._identity

    @property
    def shape(self):
        return (self.rows, self.cols)

    def _classify(self) -> RankClass:
        m, n = self.shape
        sigma = self.svd_sigma
        smax = sigma[0] if sigma.size else 0.0
        if smax == 0.0:
            return RankClass.DEFICIENT
        k = min(m, n)
        if np.all(sigma[:k] > _RANK_RTOL * smax):
            return RankClass.FULL_COLUMN if m >= n else RankClass.FULL_ROW
        return RankClass.DEFICIENT

    def matvec(self, x: np.ndarray) -> np.ndarray:
        if self._identity:
            return np.array(x, dtype=float)
        return self.entries @ x

    def rmatvec(self, y: np.ndarray) -> np.ndarray:
        if self._identity:
            return np.array(y, dtype=float)
        return self.entries.T @ y

    def __repr__(self):
        return f"LinearMap({self.rows}x{self.cols}, {self.rank_class.value})"


@dataclass(frozen=True)
class SmoothOracle:
    """Smooth part ``f`` of the objective.

    ``hessian`` is optional and only used by exact-Hessian test modes.
    """

    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    dim: int
    hessian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    lipschitz: Optional[float] = None


def quadratic(q, c=None, const: float = 0.0) -> SmoothOracle:
    """``f(x) = 0.5 x^T Q x + c^T x + const`` with exact Hessian ``Q``."""
    q = np.array(q, dtype=float)
    n = q.shape[0]
    c = np.zeros(n) if c is None else np.array(c, dtype=float)
    q.setflags(write=False)
    c.setflags(write=False)
    lmax = float(np.linalg.eigvalsh(0.5 * (q + q.T))[-1])

    def value(x):
        return float(0.5 * x @ (q @ x) + c @ x + const)

    def gradient(x):
        return q @ x + c

    return SmoothOracle(value, gradient, n, hessian=lambda x: q, lipschitz=lmax)


def least_squares(a, b) -> SmoothOracle:
    """``f(x) = 0.5 ||Ax - b||^2``.

    The value is evaluated as ``0.5 ||Rx - Q^T b||^2 + 0.5 ||b_perp||^2``
    from a reduced QR of ``A``; this avoids the cancellation against
    ``0.5 ||b||^2`` that the Gram form suffers near the optimum.
    """
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    gram = a.T @ a
    atb = a.T @ b
    q, r = np.linalg.qr(a)
    qb = q.T @ b
    rest = 0.5 * float(np.sum((b - q @ qb) ** 2))
    for arr in (gram, atb, r, qb):
        arr.setflags(write=False)
    lmax = float(np.linalg.eigvalsh(gram)[-1])

    def value(x):
        res = r @ x - qb
        return 0.5 * float(res @ res) + rest

    def gradient(x):
        return gram @ x - atb

    return SmoothOracle(value, gradient, a.shape[1], hessian=lambda x: gram, lipschitz=lmax)


def _check_positive(name, value):
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value!r}")


def argmax_policy(x: np.ndarray) -> int:
    """Default working-index rule: the largest coordinate."""
    return int(np.argmax(x))


@dataclass(frozen=True)
class L1:
    """``g(z) = lam * ||z||_1``."""

    lam: float
    tag = "l1"

    def __post_init__(self):
        _check_positive("lam", self.lam)

    def to_dict(self):
        return {"variant": self.tag, "lam": self.lam}


@dataclass(frozen=True)
class EllipsoidIndicator:
    """Indicator of the Euclidean ball of radius ``sqrt(b)``."""

    b: float
    tag = "ellipsoid"

    def __post_init__(self):
        _check_positive("b", self.b)

    @property
    def radius(self) -> float:
        return float(np.sqrt(self.b))

    def to_dict(self):
        return {"variant": self.tag, "b": self.b}


@dataclass(frozen=True)
class SimplexConstraint:
    """Unit simplex ``x >= 0, sum(x) = 1`` handled through a working matrix."""

    policy: Callable[[np.ndarray], int] = field(default=argmax_policy, compare=False)
    tag = "simplex"

    def to_dict(self):
        return {"variant": self.tag}


@dataclass(frozen=True)
class CappedSimplex:
    """Capped simplex ``0 <= x <= 1, sum(x) <= s``."""

    s: float
    policy: Callable[[np.ndarray], int] = field(default=argmax_policy, compare=False)
    tag = "capped_simplex"

    def __post_init__(self):
        _check_positive("s", self.s)

    def to_dict(self):
        return {"variant": self.tag, "s": self.s}


@dataclass(frozen=True)
class GenericWorkingSet:
    """Polyhedral term for a caller-supplied full-row-rank working matrix.

    The operator of the problem stacks ``p`` inequality rows (``B_k x <= upper``)
    over ``q`` equality rows (``C x = eq``).
    """

    upper: np.ndarray
    eq: np.ndarray
    tag = "generic"

    def __post_init__(self):
        object.__setattr__(self, "upper", np.atleast_1d(np.asarray(self.upper, dtype=float)))
        object.__setattr__(self, "eq", np.atleast_1d(np.asarray(self.eq, dtype=float)))

    @property
    def n_ineq(self) -> int:
        return self.upper.size

    def to_dict(self):
        return {"variant": self.tag, "upper": self.upper.tolist(), "eq": self.eq.tolist()}


NonsmoothTerm = Union[L1, EllipsoidIndicator, SimplexConstraint, CappedSimplex, GenericWorkingSet]

WORKING_SET_TERMS = (SimplexConstraint, CappedSimplex)
INDICATOR_TERMS = (EllipsoidIndicator, SimplexConstraint, CappedSimplex, GenericWorkingSet)


@dataclass(frozen=True)
class CompositeProblem:
    """``F(x) = f(x) + g(Ax)``.

    For the simplex and capped-simplex terms ``op`` is the identity; the
    working matrix is formed per iteration by the dual solver.
    """

    smooth: SmoothOracle
    op: LinearMap
    nonsmooth: NonsmoothTerm
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.op.cols != self.smooth.dim:
            raise DimensionError(
                f"operator has {self.op.cols} columns but f lives in R^{self.smooth.dim}"
            )
        if isinstance(self.nonsmooth, WORKING_SET_TERMS) and not self.op.is_identity:
            raise ValueError("simplex-type terms act on x directly; op must be the identity")
        if isinstance(self.nonsmooth, GenericWorkingSet):
            term = self.nonsmooth
            if term.n_ineq + term.eq.size != self.op.rows:
                raise DimensionError("working-set right-hand sides do not match operator rows")

    @property
    def dim(self) -> int:
        return self.smooth.dim

    @property
    def is_indicator(self) -> bool:
        return isinstance(self.nonsmooth, INDICATOR_TERMS)

    def to_dict(self) -> dict:
        out = {"n": self.dim, "m": self.op.rows}
        out.update(self.nonsmooth.to_dict())
        out.update(self.meta)
        return out


def _as_vector(problem: CompositeProblem, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.dim,):
        raise DimensionError(f"expected shape ({problem.dim},), got {x.shape}")
    return x


def _violation(term, z: np.ndarray) -> float:
    """Largest constraint violation of ``z`` (already mapped through A)."""
    if isinstance(term, L1):
        return 0.0
    if isinstance(term, EllipsoidIndicator):
        return max(float(np.linalg.norm(z)) - term.radius, 0.0)
    if isinstance(term, SimplexConstraint):
        return max(float(np.max(-z, initial=0.0)), abs(float(z.sum()) - 1.0))
    if isinstance(term, CappedSimplex):
        box = max(float(np.max(-z, initial=0.0)), float(np.max(z - 1.0, initial=0.0)))
        return max(box, float(z.sum()) - term.s, 0.0)
    if isinstance(term, GenericWorkingSet):
        p = term.n_ineq
        ineq = float(np.max(z[:p] - term.upper, initial=0.0))
        eq = float(np.max(np.abs(z[p:] - term.eq), initial=0.0))
        return max(ineq, eq)
    raise TypeError(f"unknown nonsmooth term {term!r}")


def domain_contains(problem: CompositeProblem, x, tol: float = FEAS_TOL) -> bool:
    """Whether ``Ax`` lies in ``dom g`` up to ``tol``."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    term = problem.nonsmooth
    if isinstance(term, L1):
        return True
    z = problem.op.matvec(_as_vector(problem, x))
    return _violation(term, z) <= tol


def eval_nonsmooth(problem: CompositeProblem, x, tol: float = FEAS_TOL) -> float:
    """``g(Ax)``; ``+inf`` outside the domain of indicator terms."""
    term = problem.nonsmooth
    z = problem.op.matvec(_as_vector(problem, x))
    if isinstance(term, L1):
        return term.lam * float(np.abs(z).sum())
    return 0.0 if _violation(term, z) <= tol else np.inf


def eval_objective(problem: CompositeProblem, x, tol: float = FEAS_TOL) -> float:
    """``F(x) = f(x) + g(Ax)``."""
    x = _as_vector(problem, x)
    if not np.all(np.isfinite(x)):
        raise ValueError("x must be finite")
    g = eval_nonsmooth(problem, x, tol)
    if not np.isfinite(g):
        return np.inf
    return problem.smooth.value(x) + g


def eval_gradient(problem: CompositeProblem, x) -> np.ndarray:
    x = _as_vector(problem, x)
    if not np.all(np.isfinite(x)):
        raise ValueError("x must be finite")
    return np.asarray(problem.smooth.gradient(x), dtype=float)
