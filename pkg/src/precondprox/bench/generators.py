"""Synthetic problem families: LASSO, simplex QP and structured l1.

Every random draw comes from its own named stream spawned from one
``numpy.random.SeedSequence(seed)`` (PCG64), in a fixed order per family, so a
manifest seed determines the problem data exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..problem import (
    CompositeProblem,
    L1,
    LinearMap,
    SimplexConstraint,
    least_squares,
    quadratic,
)

__all__ = [
    "Instance",
    "streams",
    "random_orthogonal",
    "spd_with_spectrum",
    "gen_lasso",
    "gen_simplex_qp",
    "gen_structured_l1",
]


@dataclass
class Instance:
    problem: CompositeProblem
    x0: np.ndarray
    data: dict = field(default_factory=dict)


def streams(seed: int, names):
    """One independent generator per name, spawned in the given order."""
    children = np.random.SeedSequence(seed).spawn(len(names))
    return {name: np.random.default_rng(child) for name, child in zip(names, children)}


def random_orthogonal(rng, rows, cols=None):
    """Orthonormal columns from the QR factorization of a Gaussian matrix."""
    cols = rows if cols is None else cols
    q, r = np.linalg.qr(rng.standard_normal((rows, cols)))
    return q * np.sign(np.diag(r))


def spd_with_spectrum(rng, eigenvalues):
    u = random_orthogonal(rng, eigenvalues.size)
    q = (u * eigenvalues) @ u.T
    return 0.5 * (q + q.T), u


def gen_lasso(seed: int, m: int = 5000, n: int = 500, kappa: float = 1e6,
              sparsity: float = 0.005, noise: float = 1e-3, lam: float = 1e-4) -> Instance:
    """``0.5 ||Ax - b||^2 + lam ||x||_1`` with an ill-conditioned design.

    Singular values of ``A`` are log-spaced in ``[kappa^{-1/2}, 1] * sqrt(m)``,
    so ``A^T A`` has condition number ``kappa``.
    """
    if not m >= n >= 1:
        raise ValueError("need m >= n >= 1")
    rs = streams(seed, ["u", "v", "support", "values", "noise"])
    u = random_orthogonal(rs["u"], m, n)
    v = random_orthogonal(rs["v"], n)
    sv = np.logspace(-0.5 * math.log10(kappa), 0.0, n)[::-1] * math.sqrt(m)
    a = (u * sv) @ v.T
    k = math.ceil(sparsity * n)
    x_true = np.zeros(n)
    support = rs["support"].choice(n, size=k, replace=False)
    x_true[support] = rs["values"].uniform(1.0, 2.0, size=k)
    b = a @ x_true + noise * rs["noise"].standard_normal(m)
    meta = {"family": "lasso", "seed": seed, "kappa": kappa, "sparsity": sparsity,
            "noise": noise, "lam": lam}
    problem = CompositeProblem(least_squares(a, b), LinearMap.identity(n), L1(lam), meta)
    return Instance(problem, np.zeros(n), {"A": a, "b": b, "x_true": x_true, "singular_values": sv,
                                           "U": u, "V": v})


def _quadratic_part(rs, n, kappa):
    eig = np.logspace(0.0, math.log10(kappa), n)
    q, u = spd_with_spectrum(rs["q"], eig)
    c = rs["c"].standard_normal(n)
    return q, c, eig, u


def gen_simplex_qp(seed: int, n: int = 100, kappa: float = 5e5) -> Instance:
    """``0.5 x^T Q x + c^T x`` over the unit simplex, eigenvalues of Q in ``[1, kappa]``."""
    if n < 2:
        raise ValueError("need n >= 2")
    rs = streams(seed, ["q", "c"])
    q, c, eig, u = _quadratic_part(rs, n, kappa)
    meta = {"family": "simplex-qp", "seed": seed, "kappa": kappa}
    problem = CompositeProblem(quadratic(q, c), LinearMap.identity(n), SimplexConstraint(), meta)
    return Instance(problem, np.full(n, 1.0 / n), {"Q": q, "c": c, "eigenvalues": eig, "U": u})


def gen_structured_l1(seed: int, n: int = 100, m: int = 50, kappa: float = 5e4,
                      sigma_a: float = math.sqrt(5000.0), lam: float = 1.0 / 16) -> Instance:
    """``0.5 x^T Q x + c^T x + lam ||Ax||_1`` with a full-row-rank ``A``."""
    if not m < n:
        raise ValueError("need m < n")
    rs = streams(seed, ["q", "c", "ua", "va"])
    q, c, eig, u = _quadratic_part(rs, n, kappa)
    ua = random_orthogonal(rs["ua"], m)
    va = random_orthogonal(rs["va"], n)
    sv = np.logspace(0.0, math.log10(sigma_a), m)[::-1]
    a = (ua * sv) @ va[:, :m].T
    meta = {"family": "structured-l1", "seed": seed, "kappa": kappa, "sigma_a": sigma_a, "lam": lam}
    problem = CompositeProblem(quadratic(q, c), LinearMap(a), L1(lam), meta)
    return Instance(problem, np.zeros(n), {"Q": q, "c": c, "A": a, "eigenvalues": eig,
                                           "singular_values": sv, "U": u, "UA": ua, "VA": va})
