"""Randomized invariants, drawn with hypothesis."""

import numpy as np
from hypothesis import given, strategies as st

from oracles import dual_inclusion_residual, golden_section
from precondprox.bench.generators import gen_lasso, gen_simplex_qp, gen_structured_l1
from precondprox.dualprox import prox_direction, solve_dual, working_prox
from precondprox.oned import PiecewiseQuadratic1D, min_quad_plus_l1
from precondprox.precond import DEFAULT_CLIP, apply, apply_inverse, bb_rescale, build_preconditioner
from precondprox.problem import (
    CompositeProblem,
    EllipsoidIndicator,
    L1,
    LinearMap,
    SimplexConstraint,
    domain_contains,
    eval_nonsmooth,
    eval_objective,
    quadratic,
)

seeds = st.integers(0, 2**32 - 1)
scales = st.floats(1e-3, 1e3)


def _full_row(rng, m, n):
    return rng.standard_normal((m, n)) * np.exp(rng.uniform(-1, 1, (m, 1)))


@given(seeds, st.integers(1, 6), st.integers(0, 5), scales)
def test_precond_inverts_dual_operator(seed, m, extra, alpha):
    rng = np.random.default_rng(seed)
    a = _full_row(rng, m, m + extra)
    P = build_preconditioner(LinearMap(a)).with_scale(alpha)
    apa = np.array([a @ apply_inverse(P, row) for row in a])
    np.testing.assert_allclose(alpha * apa, np.eye(m), atol=1e-8)


@given(seeds, st.integers(1, 6), st.integers(0, 5), scales)
def test_apply_inverse_roundtrip(seed, m, extra, alpha):
    rng = np.random.default_rng(seed)
    P = build_preconditioner(LinearMap(_full_row(rng, m, m + extra))).with_scale(alpha)
    w = rng.standard_normal(m + extra)
    back = apply_inverse(P, apply(P, w))
    np.testing.assert_allclose(back, w, atol=1e-8 * (1 + np.abs(w).max()) * np.linalg.cond(P.dense()))


@given(seeds, st.floats(-1e12, 1e12), st.floats(1e-12, 1e12))
def test_bb_scale_clipped(seed, sy_scale, s_scale):
    rng = np.random.default_rng(seed)
    P = build_preconditioner(LinearMap.identity(4))
    s = s_scale * rng.standard_normal(4)
    y = sy_scale * s + rng.standard_normal(4)
    new = bb_rescale(P, s, y)
    lo, hi = DEFAULT_CLIP
    assert new.scale == P.scale or lo <= new.scale <= hi


@given(seeds, st.integers(1, 10), st.floats(1e-3, 10.0))
def test_l1_dual_inclusion(seed, m, lam):
    rng = np.random.default_rng(seed)
    a = 3 * rng.standard_normal(m)
    D = np.exp(rng.uniform(-2, 2, m))
    y = solve_dual(L1(lam), a, D)
    assert dual_inclusion_residual("l1", y, a, D, lam) <= 1e-12 * (1 + np.abs(a).max())


@given(seeds, st.integers(2, 8), st.floats(1e-2, 10.0))
def test_ball_prox_feasible(seed, n, b):
    rng = np.random.default_rng(seed)
    prob = CompositeProblem(quadratic(np.eye(n)), LinearMap.identity(n), EllipsoidIndicator(b))
    x = rng.standard_normal(n)
    x *= rng.uniform(0, 1) * np.sqrt(b) / np.linalg.norm(x)
    P = build_preconditioner(prob.op).with_scale(float(rng.uniform(0.1, 10)))
    v = prox_direction(prob, x, 5 * rng.standard_normal(n), P).v
    assert np.linalg.norm(x + v) <= np.sqrt(b) * (1 + 1e-12)


@given(seeds, st.integers(2, 8), st.floats(0.1, 10.0))
def test_simplex_prox_feasible(seed, n, alpha):
    rng = np.random.default_rng(seed)
    prob = CompositeProblem(quadratic(np.eye(n)), LinearMap.identity(n), SimplexConstraint())
    x = rng.dirichlet(np.ones(n))
    sol, _ = working_prox(prob, x, 3 * rng.standard_normal(n), alpha)
    assert domain_contains(prob, x + sol.v)


@given(seeds, st.integers(1, 5), st.integers(1, 5), scales)
def test_prox_direction_descent_bound(seed, m, extra, alpha):
    # <grad, v> + h(x + v) - h(x) <= -||v||_P^2
    rng = np.random.default_rng(seed)
    a = _full_row(rng, m, m + extra)
    prob = CompositeProblem(quadratic(np.eye(m + extra)), LinearMap(a), L1(float(rng.uniform(0.1, 2))))
    P = build_preconditioner(prob.op).with_scale(alpha)
    x, g = rng.standard_normal(m + extra), rng.standard_normal(m + extra)
    v = prox_direction(prob, x, g, P).v
    lhs = g @ v + eval_nonsmooth(prob, x + v) - eval_nonsmooth(prob, x)
    vpv = v @ apply(P, v)
    assert lhs <= -vpv + 1e-9 * (1 + abs(vpv) + np.abs(g).max() * np.abs(v).max())


@given(seeds, st.integers(1, 8), st.floats(1e-2, 1e2))
def test_min_quad_plus_l1_matches_golden(seed, k, a):
    rng = np.random.default_rng(seed)
    p = PiecewiseQuadratic1D(a, float(rng.standard_normal() * 5), rng.standard_normal(k), rng.standard_normal(k))
    t = min_quad_plus_l1(p)
    dsum = np.abs(p.d).sum()
    ref = golden_section(p, (-dsum - p.b) / (2 * a) - 1, (dsum - p.b) / (2 * a) + 1)
    assert p(t) <= p(ref) + 1e-10 * (1 + abs(p(ref)))


@given(seeds, st.integers(2, 6), st.floats(0.0, 0.3))
def test_objective_finite_iff_feasible(seed, n, spread):
    rng = np.random.default_rng(seed)
    prob = CompositeProblem(quadratic(np.eye(n)), LinearMap.identity(n), SimplexConstraint())
    x = rng.dirichlet(np.ones(n)) + spread * rng.standard_normal(n)
    assert np.isfinite(eval_objective(prob, x, 0.0)) == domain_contains(prob, x, 0.0)


def _fd_check(oracle, x, rng):
    g = oracle.gradient(x)
    d = rng.standard_normal(x.size)
    h = 1e-6 * (1 + np.linalg.norm(x))
    fd = (oracle.value(x + h * d) - oracle.value(x - h * d)) / (2 * h)
    scale = 1 + abs(g @ d) + np.linalg.norm(g) * np.linalg.norm(d)
    assert abs(fd - g @ d) <= 1e-6 * scale


@given(seeds)
def test_generator_gradients(seed):
    rng = np.random.default_rng(seed)
    for inst in (gen_lasso(seed, m=30, n=10, kappa=1e2, sparsity=0.2),
                 gen_simplex_qp(seed, n=8, kappa=1e2),
                 gen_structured_l1(seed, n=8, m=4, kappa=1e2, sigma_a=5.0)):
        _fd_check(inst.problem.smooth, rng.standard_normal(inst.x0.size), rng)
