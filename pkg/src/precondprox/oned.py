"""Exact one-dimensional minimizers used by the subspace step."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .problem import (
    CappedSimplex,
    EllipsoidIndicator,
    GenericWorkingSet,
    L1,
    SimplexConstraint,
)

__all__ = [
    "PiecewiseQuadratic1D",
    "feasible_range",
    "min_quad_on_segment",
    "min_quad_plus_l1",
    "subgradient_interval",
    "EmptyRangeError",
]

_EQ_RTOL = 1e-9
_DEDUP = 1e-14
# direction entries below this fraction of ||w||_inf are rounding noise
_NOISE_RTOL = 1e-13
_NOISE_ATOL = 1e-15


class EmptyRangeError(ValueError):
    pass


@dataclass(frozen=True)
class PiecewiseQuadratic1D:
    """``h(t) = a t^2 + b t + ||v + t d||_1`` with ``a > 0``."""

    a: float
    b: float
    v: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("quadratic coefficient must be positive")
        object.__setattr__(self, "v", np.atleast_1d(np.asarray(self.v, dtype=float)))
        object.__setattr__(self, "d", np.atleast_1d(np.asarray(self.d, dtype=float)))

    def __call__(self, t: float) -> float:
        return self.a * t * t + self.b * t + float(np.abs(self.v + t * self.d).sum())


def _ratio_upper(slack, w):
    """Largest ``t >= 0`` with ``t * w <= slack`` (slack clipped at zero)."""
    slack = np.maximum(slack, 0.0)
    pos = w > 0
    if not np.any(pos):
        return np.inf
    return float(np.min(slack[pos] / w[pos]))


def _box_range(z, w, lo=None, hi=None):
    t_l, t_u = -np.inf, np.inf
    if hi is not None:
        t_u = min(t_u, _ratio_upper(hi - z, w))
        t_l = max(t_l, -_ratio_upper(hi - z, -w))
    if lo is not None:
        t_u = min(t_u, _ratio_upper(z - lo, -w))
        t_l = max(t_l, -_ratio_upper(z - lo, w))
    return t_l, t_u


def _equal_zero(total, w):
    return abs(total) <= _EQ_RTOL * (1.0 + float(np.abs(w).sum()))


def feasible_range(term, A, x, d) -> Tuple[float, float]:
    """Maximal ``[t_l, t_u]`` with ``x + t d`` in ``dom(g o A)``.

    ``x`` is assumed feasible; tiny violations from rounding are treated as
    sitting on the boundary so that ``0`` always belongs to the range.
    """
    x = np.asarray(x, dtype=float)
    d = np.asarray(d, dtype=float)
    if isinstance(term, L1) or not np.any(d):
        return -np.inf, np.inf
    z = A.matvec(x)
    w = A.matvec(d)
    noise = max(_NOISE_RTOL * float(np.abs(w).max()), _NOISE_ATOL * (1.0 + float(np.abs(z).max())))
    w = np.where(np.abs(w) <= noise, 0.0, w)

    if isinstance(term, EllipsoidIndicator):
        aa = float(w @ w)
        if aa == 0.0:
            return -np.inf, np.inf
        bb = 2.0 * float(z @ w)
        cc = min(float(z @ z) - term.b, 0.0)
        disc = np.sqrt(max(bb * bb - 4.0 * aa * cc, 0.0))
        # stable root pair
        qq = -0.5 * (bb + np.copysign(disc, bb)) if bb != 0 else 0.5 * disc
        if qq == 0.0:
            return 0.0, 0.0
        r1, r2 = qq / aa, cc / qq
        return float(min(r1, r2, 0.0)), float(max(r1, r2, 0.0))

    if isinstance(term, SimplexConstraint):
        if not _equal_zero(float(w.sum()), w):
            return 0.0, 0.0
        return _box_range(z, w, lo=0.0)

    if isinstance(term, CappedSimplex):
        t_l, t_u = _box_range(z, w, lo=0.0, hi=1.0)
        total = float(w.sum())
        slack = max(term.s - float(z.sum()), 0.0)
        if total > 0:
            t_u = min(t_u, slack / total)
        elif total < 0:
            t_l = max(t_l, slack / total)
        return t_l, t_u

    if isinstance(term, GenericWorkingSet):
        p = term.n_ineq
        weq = w[p:]
        if weq.size and float(np.abs(weq).max()) > _EQ_RTOL * (1.0 + float(np.abs(w).sum())):
            return 0.0, 0.0
        return _box_range(z[:p], w[:p], hi=term.upper)

    raise TypeError(f"unsupported nonsmooth term {term!r}")


def min_quad_on_segment(a: float, b: float, t_l: float, t_u: float) -> float:
    """Exact minimizer of ``a t^2 + b t`` over ``[t_l, t_u]``."""
    if not a > 0:
        raise ValueError("quadratic coefficient must be positive")
    if not t_l <= t_u:
        raise EmptyRangeError(f"empty range [{t_l}, {t_u}]")
    return float(min(max(-b / (2.0 * a), t_l), t_u))


def _one_sided(p: PiecewiseQuadratic1D, t: float, kinks: np.ndarray):
    """``(dh^-(t), dh^+(t))``; ``kinks`` flags the terms with a breakpoint at ``t``."""
    r = p.v + t * p.d
    core = 2.0 * p.a * t + p.b + float((np.sign(r[~kinks]) * p.d[~kinks]).sum())
    spread = float(np.abs(p.d[kinks]).sum())
    return core - spread, core + spread


def subgradient_interval(p: PiecewiseQuadratic1D, t: float, tol: float = 0.0):
    """Interval ``[lo, hi]`` of ``dh(t)``; kinks within ``tol`` of zero count as active."""
    r = p.v + t * p.d
    active = (np.abs(r) <= tol) & (p.d != 0)
    base = 2.0 * p.a * t + p.b + float((np.sign(r[~active]) * p.d[~active]).sum())
    spread = float(np.abs(p.d[active]).sum())
    return base - spread, base + spread


def min_quad_plus_l1(p: PiecewiseQuadratic1D) -> float:
    """Minimize ``a t^2 + b t + ||v + t d||_1`` by breakpoint partitioning.

    Bisects on the median of the breakpoints ``-v_i/d_i`` inside the bracket
    ``[(-D - b)/2a, (D - b)/2a]`` (``D = sum |d_i|``) and finishes in closed
    form once no breakpoint remains strictly inside.
    """
    a, b, v, d = p.a, p.b, p.v, p.d
    dsum = float(np.abs(d).sum())
    lo = (-dsum - b) / (2.0 * a)
    hi = (dsum - b) / (2.0 * a)
    nz = d != 0
    bp_all = np.full(d.shape, np.nan)
    bp_all[nz] = -v[nz] / d[nz]
    bp = bp_all[nz]
    bp = bp[(bp > lo) & (bp < hi)]
    pts = np.sort(np.concatenate([[lo], bp, [hi]]))
    keep = np.concatenate([[True], np.diff(pts) > _DEDUP])
    pts = pts[keep]

    while pts.size > 2:
        med = float(pts[(pts.size - 1) // 2])
        kinks = np.abs(bp_all - med) <= _DEDUP * max(1.0, abs(med))
        dminus, dplus = _one_sided(p, med, kinks)
        ztol = 1e-12 * (abs(b) + 2.0 * a * abs(med) + dsum)
        if dminus <= ztol and dplus >= -ztol:
            return med
        if dplus < 0:
            lo = med
            pts = pts[pts >= med]
        else:
            hi = med
            pts = pts[pts <= med]

    if hi <= lo:
        return float(lo)
    mid = 0.5 * (lo + hi)
    slope = float((np.sign(v + mid * d) * d).sum())
    s = -(b + slope) / (2.0 * a)
    return float(min(max(s, lo), hi))
