"""Structure-exploiting preconditioners ``P = M^T D M``.

``M`` is invertible and its leading ``m`` rows reproduce the operator ``A``,
so that ``A P^{-1} A^T`` equals the leading block of ``D^{-1}``.  With ``D``
the identity this is ``I_m`` and the dual proximal problem decouples.

Two factor types are provided:

* :class:`SvdFactor` built from the SVD of a full-rank :class:`LinearMap`;
* :class:`WorkingMatrix`, the rank-one modification of the identity used for
  simplex and capped-simplex constraints, inverted by Sherman-Morrison.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Optional, Tuple, Union

import numpy as np

from .problem import LinearMap, RankClass, RankError

__all__ = [
    "SvdFactor",
    "WorkingMatrix",
    "Preconditioner",
    "build_preconditioner",
    "working_preconditioner",
    "apply",
    "apply_inverse",
    "bb_rescale",
    "DEFAULT_CLIP",
]

DEFAULT_CLIP = (1e-8, 1e8)


def _spd_sqrt(mat: np.ndarray):
    w, q = np.linalg.eigh(0.5 * (mat + mat.T))
    if w[0] <= 0:
        raise ValueError("tilde_p must be symmetric positive definite")
    root = (q * np.sqrt(w)) @ q.T
    inv_root = (q / np.sqrt(w)) @ q.T
    return root, inv_root, w


class SvdFactor:
    """``M = blockdiag(U diag(sigma), R) V^T`` with ``R = tilde_p^{1/2}``.

    For a square full-rank ``A`` there is no ``R`` block and ``M = A``.
    """

    def __init__(self, op: LinearMap, tilde_p=None):
        m, n = op.shape
        if op.rank_class is RankClass.DEFICIENT:
            raise RankError("operator is rank deficient")
        if op.rank_class is RankClass.FULL_COLUMN and m != n:
            raise RankError(
                "a tall full-column-rank operator cannot satisfy A P^-1 A^T = I_m; "
                "only square operators are accepted"
            )
        self.op = op
        self.identity = op.is_identity
        self.rows = m
        self.n = n
        self.sigma = op.svd_sigma[:m]
        self.u = op.svd_u
        self.v1 = op.svd_v[:, :m]
        self.v2 = op.svd_v[:, m:]
        k = n - m
        if k == 0:
            self.root = self.inv_root = np.zeros((0, 0))
            tail = np.zeros(0)
        elif tilde_p is None:
            self.root = self.inv_root = None  # identity block
            tail = np.ones(k)
        else:
            tp = np.asarray(tilde_p, dtype=float)
            if tp.shape != (k, k):
                raise ValueError(f"tilde_p must be {k}x{k}")
            self.root, self.inv_root, tail = _spd_sqrt(tp)
        self.spectrum = np.sort(np.concatenate([self.sigma**2, tail]))

    def _tail(self, mat, z):
        return z if mat is None else mat @ z

    def apply(self, w):
        """``M w``."""
        if self.identity:
            return np.array(w, dtype=float)
        head = self.u @ (self.sigma * (self.v1.T @ w))
        tail = self._tail(self.root, self.v2.T @ w)
        return np.concatenate([head, tail])

    def apply_t(self, z):
        """``M^T z``."""
        if self.identity:
            return np.array(z, dtype=float)
        m = self.rows
        out = self.v1 @ (self.sigma * (self.u.T @ z[:m]))
        if self.n > m:
            out = out + self.v2 @ self._tail(self.root, z[m:])
        return out

    def solve(self, z):
        """``M^{-1} z``."""
        if self.identity:
            return np.array(z, dtype=float)
        m = self.rows
        out = self.v1 @ ((self.u.T @ z[:m]) / self.sigma)
        if self.n > m:
            out = out + self.v2 @ self._tail(self.inv_root, z[m:])
        return out

    def solve_t(self, w):
        """``M^{-T} w``."""
        if self.identity:
            return np.array(w, dtype=float)
        head = self.u @ ((self.v1.T @ w) / self.sigma)
        tail = self._tail(self.inv_root, self.v2.T @ w)
        return np.concatenate([head, tail])

    # the operator A itself
    def matvec(self, x):
        return self.op.matvec(x)

    def rmatvec(self, y):
        return self.op.rmatvec(y)


class WorkingMatrix:
    """Rank-one working matrix for simplex-type constraints.

    ``simplex``: ``A_k = -I + e_i (1 + e_i)^T``, which is its own inverse.
    ``capped``:  ``A_k = I + e_i (1 - e_i)^T`` with inverse ``I - e_i (1 - e_i)^T``.
    Row ``i`` of either matrix is the all-ones row.
    """

    def __init__(self, kind: str, n: int, index: int):
        if kind not in ("simplex", "capped"):
            raise ValueError(f"unknown working matrix kind {kind!r}")
        if not 0 <= index < n:
            raise IndexError("working index out of range")
        self.kind = kind
        self.n = self.rows = n
        self.index = index
        self.spectrum = _working_spectrum(kind, n)

    def apply(self, w):
        i = self.index
        if self.kind == "simplex":
            out = -w
            out[i] = w.sum()
        else:
            out = np.array(w, dtype=float)
            out[i] = w.sum()
        return out

    def apply_t(self, z):
        i = self.index
        if self.kind == "simplex":
            out = -z + z[i]
            out[i] = z[i]
        else:
            out = z + z[i]
            out[i] = z[i]
        return out

    def solve(self, z):
        i = self.index
        if self.kind == "simplex":
            return self.apply(z)
        out = np.array(z, dtype=float)
        out[i] = z[i] - (z.sum() - z[i])
        return out

    def solve_t(self, w):
        i = self.index
        if self.kind == "simplex":
            return self.apply_t(w)
        out = w - w[i]
        out[i] = w[i]
        return out

    matvec = apply
    rmatvec = apply_t

    def dense(self) -> np.ndarray:
        return np.array([self.apply(e) for e in np.eye(self.n)]).T


@lru_cache(maxsize=64)
def _working_spectrum(kind, n):
    # eigenvalues do not depend on the index (permutation similarity)
    wm = WorkingMatrix.__new__(WorkingMatrix)
    wm.kind, wm.n, wm.rows, wm.index = kind, n, n, 0
    dense = wm.dense()
    spec = np.linalg.eigvalsh(dense.T @ dense)
    spec.setflags(write=False)
    return spec


Factor = Union[SvdFactor, WorkingMatrix]


@dataclass(frozen=True)
class Preconditioner:
    """``P = scale * M^T diag(d) M``; ``d`` defaults to all ones."""

    factor: Factor
    scale: float = 1.0
    diag: Optional[np.ndarray] = None
    diag_bounds: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if self.diag is not None:
            d = np.asarray(self.diag, dtype=float)
            if d.shape != (self.n,) or np.any(d <= 0):
                raise ValueError("diag must be a positive n-vector")
            if self.diag_bounds is not None:
                lo, hi = self.diag_bounds
                if np.any(d < lo) or np.any(d > hi):
                    raise ValueError("diag entries outside their bounds")
            object.__setattr__(self, "diag", d)

    @property
    def n(self) -> int:
        return self.factor.n

    @property
    def m(self) -> int:
        return self.factor.rows

    def weights(self) -> np.ndarray:
        """Diagonal of ``D`` including the scale."""
        if self.diag is None:
            return np.full(self.n, self.scale)
        return self.scale * self.diag

    def dual_weights(self) -> np.ndarray:
        """Leading ``m x m`` block of ``D``, the metric of the dual problem."""
        return self.weights()[: self.m]

    @property
    def bounds(self) -> Tuple[float, float]:
        """``(c3, c4)`` with ``c3 I <= P <= c4 I``."""
        w = self.weights()
        spec = self.factor.spectrum
        return float(w.min() * spec[0]), float(w.max() * spec[-1])

    def with_scale(self, scale: float) -> "Preconditioner":
        return replace(self, scale=float(scale))

    def dense(self) -> np.ndarray:
        eye = np.eye(self.n)
        return np.array([apply(self, e) for e in eye]).T


def build_preconditioner(op: LinearMap, tilde_p=None) -> Preconditioner:
    """Unit-scale preconditioner for ``op``.

    Full column rank (square): ``P = A^T A``.  Full row rank:
    ``P = A^T A + V blockdiag(0, tilde_p) V^T`` with ``tilde_p`` defaulting to
    the identity.
    """
    return Preconditioner(SvdFactor(op, tilde_p))


def working_preconditioner(kind: str, n: int, index: int, scale: float = 1.0) -> Preconditioner:
    return Preconditioner(WorkingMatrix(kind, n, index), scale=scale)


def apply(p: Preconditioner, w) -> np.ndarray:
    """``P w``."""
    w = np.asarray(w, dtype=float)
    return p.factor.apply_t(p.weights() * p.factor.apply(w))


def apply_unit(p: Preconditioner, w) -> np.ndarray:
    """``P_1 w`` for the unit-scale preconditioner."""
    w = np.asarray(w, dtype=float)
    z = p.factor.apply(w)
    if p.diag is not None:
        z = p.diag * z
    return p.factor.apply_t(z)


def apply_inverse(p: Preconditioner, v) -> np.ndarray:
    """``P^{-1} v`` through the factors."""
    v = np.asarray(v, dtype=float)
    return p.factor.solve(p.factor.solve_t(v) / p.weights())


def bb_rescale(p: Preconditioner, step, grad_diff, clip=DEFAULT_CLIP) -> Preconditioner:
    """Barzilai-Borwein scale in the ``P_1`` geometry.

    The new scale is ``<s, y> / <s, P_1 s>`` clipped to ``clip``; with
    nonpositive ``<s, y>`` the previous scale is kept.
    """
    s = np.asarray(step, dtype=float)
    y = np.asarray(grad_diff, dtype=float)
    sy = float(s @ y)
    if not sy > 0:
        return p
    sps = float(s @ apply_unit(p, s))
    lo, hi = clip
    alpha = min(max(sy / sps, lo), hi)
    return p.with_scale(alpha)
