import numpy as np
import pytest

from oracles import simplex_qp_enumerate
from precondprox.bench.generators import gen_simplex_qp
from precondprox.problem import (
    CompositeProblem,
    EllipsoidIndicator,
    L1,
    LinearMap,
    SimplexConstraint,
    domain_contains,
    quadratic,
)
from precondprox.solver import (
    InfeasibleStartError,
    LineSearchError,
    SolverConfig,
    Variant,
    armijo_search,
    init_state,
    run,
    step,
)


def _scalar_quadratic(lipschitz):
    # F(x) = 0.5 L x^2 with a huge ball, so g vanishes on the trial points
    return CompositeProblem(quadratic([[lipschitz]]), LinearMap.identity(1), EllipsoidIndicator(1e12))


def _enumerate_armijo(f, x, d, dec, sigma, gamma):
    for j in range(101):
        t = gamma**j
        if f(x + t * d) - f(x) <= sigma * t * dec:
            return t
    raise AssertionError("no step")


def test_armijo_full_step():
    prob = _scalar_quadratic(1.0)
    assert armijo_search(prob, [1.0], [-1.0], -1.0, 1e-4, 0.5) == 1.0


@pytest.mark.parametrize("d, expected", [(-1.0, 1.0), (-4.0, 0.25)])
def test_armijo_matches_enumeration(d, expected):
    lip = 8.0
    prob = _scalar_quadratic(lip)
    dec = lip * 1.0 * d
    ref = _enumerate_armijo(lambda z: 0.5 * lip * z * z, 1.0, d, dec, 0.5, 0.5)
    t = armijo_search(prob, [1.0], [d], dec, 0.5, 0.5)
    assert t == ref == expected


def test_armijo_rejects_ascent():
    with pytest.raises(LineSearchError):
        armijo_search(_scalar_quadratic(1.0), [1.0], [1.0], 0.0, 1e-4, 0.5)


def test_armijo_rejects_infeasible_trials():
    prob = CompositeProblem(quadratic(np.eye(2)), LinearMap.identity(2), EllipsoidIndicator(1.0))
    # the full step leaves the ball, the half step does not
    t = armijo_search(prob, [0.9, 0.0], [-1.9, 0.0], -1.0, 1e-4, 0.5)
    assert t == 0.5


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(c1=2.0, c2=1.0)
    with pytest.raises(ValueError):
        SolverConfig(sigma=1.0)
    with pytest.raises(ValueError):
        SolverConfig(alpha_clip=(1.0, 0.5))


def test_simplex_two_dim_converges():
    target = np.array([0.2, 0.8])
    prob = CompositeProblem(quadratic(np.eye(2), -target, 0.5 * target @ target), LinearMap.identity(2),
                            SimplexConstraint())
    res = run(prob, [0.5, 0.5], SolverConfig(max_iter=50))
    np.testing.assert_allclose(res.x, target, atol=1e-8)
    assert res.objective <= 1e-10


def test_scalar_lasso():
    prob = CompositeProblem(quadratic([[1.0]], [-2.0], 2.0), LinearMap.identity(1), L1(1.0))
    res = run(prob, [0.0], SolverConfig(max_iter=100))
    assert res.x[0] == pytest.approx(1.0, abs=1e-9)


def test_hessian_equal_to_metric_converges_fast(rng):
    n = 5
    a = rng.standard_normal((n, n)) + 3 * np.eye(n)
    c = rng.standard_normal(n)
    prob = CompositeProblem(quadratic(a.T @ a, c), LinearMap(a), EllipsoidIndicator(1e12))
    res = run(prob, np.zeros(n), SolverConfig(max_iter=3))
    xstar = np.linalg.solve(a.T @ a, -c)
    fstar = prob.smooth.value(xstar)
    assert res.iterations <= 3
    assert res.objective - fstar <= 1e-10


def test_optimal_start_takes_zero_iterations():
    prob = CompositeProblem(quadratic(np.eye(2)), LinearMap.identity(2), L1(1.0))
    res = run(prob, [0.0, 0.0])
    assert res.iterations == 0 and res.status == "converged"


def test_max_iter_records():
    inst = gen_simplex_qp(1, n=30, kappa=1e4)
    res = run(inst.problem, inst.x0, SolverConfig(max_iter=5))
    assert res.iterations == 5 and len(res.info) == 5 and res.status == "max_iter"


def test_infeasible_start():
    prob = CompositeProblem(quadratic(np.eye(2)), LinearMap.identity(2), SimplexConstraint())
    with pytest.raises(InfeasibleStartError):
        run(prob, [0.7, 0.7])


@pytest.mark.parametrize("variant", list(Variant))
def test_small_simplex_qp_gap(variant):
    inst = gen_simplex_qp(3, n=10, kappa=1e3)
    q, c = inst.data["Q"], inst.data["c"]
    w = simplex_qp_enumerate(q, c)
    fstar = 0.5 * w @ q @ w + c @ w
    res = run(inst.problem, inst.x0, SolverConfig(max_iter=200, variant=variant))
    if variant is Variant.CONJUGATE_MOMENTUM:
        assert res.objective - fstar <= 1e-8
    objs = [inst.problem.smooth.value(inst.x0)] + [r.objective for r in res.trace]
    assert np.all(np.diff(objs) <= 0)


def test_iterates_feasible_and_stationary_exit():
    inst = gen_simplex_qp(5, n=20, kappa=1e2)
    cfg = SolverConfig(max_iter=2000, tol=1e-9)
    state = init_state(inst.problem, inst.x0)
    for _ in range(cfg.max_iter):
        state, record, _ = step(inst.problem, state, cfg)
        assert domain_contains(inst.problem, state.x, 1e-8)
        if record is None:
            break
    assert state.status in ("converged", "stalled")
    if state.status == "converged":
        assert state.residual <= cfg.tol * (1 + np.linalg.norm(state.x))


def test_run_is_deterministic():
    inst = gen_simplex_qp(2, n=15, kappa=1e3)
    a = run(inst.problem, inst.x0, SolverConfig(max_iter=50))
    b = run(inst.problem, inst.x0, SolverConfig(max_iter=50))
    assert [r.objective for r in a.trace] == [r.objective for r in b.trace]
    np.testing.assert_array_equal(a.x, b.x)
