import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from convexify1d.galerkin import BoundaryVectors, GalerkinSystem, SeedFunction
from convexify1d.mesh import BoundaryConstraint, SpatialGrid
from convexify1d.objective import (ObjectiveParams, carleman_weight, convexity_probe, eval_J,
                                   eval_Phi, grad_J, h2_norm, make_objective, project_ball,
                                   random_admissible_perturbation)
from convexify1d.optimizer import ShiftedObjective
from convexify1d.pipeline import galerkin_setup

GRID = SpatialGrid(50)
F0 = np.array([-0.15886175 - 0.11421548j, 0.05433519 + 0.12110895j, -0.00598085 - 0.04424158j])
F1 = np.array([0.23623512 - 0.36646456j, -0.16216466 - 0.00335766j, 0.00995559 + 0.01728918j])


@pytest.fixture(scope="module")
def system():
    return galerkin_setup(0.5, 1.5, 3)[1]


@pytest.fixture(scope="module")
def obj(system):
    return make_objective(system, GRID, ObjectiveParams(3.0, 0.05), F0, F1)


def test_params_validation():
    for kw in (dict(lam=0.5), dict(alpha=0.0), dict(alpha=1.0), dict(R=-1.0)):
        with pytest.raises(ValueError):
            ObjectiveParams(**kw)


def test_zero_state_zero_data(system):
    assert eval_J(np.zeros((51, 3)), ObjectiveParams(), system, GRID) == 0.0
    assert np.all(grad_J(np.zeros((51, 3)), ObjectiveParams(), system, GRID) == 0)


def test_alpha_term_isolated():
    zero = GalerkinSystem.zero(2)
    y = np.outer(GRID.x, [1 + 1j, -2.0]) + np.array([0.5, 1j])
    p = ObjectiveParams(2.0, 0.3)
    assert eval_J(y, p, zero, GRID) == pytest.approx(0.3 * GRID.h2_norm_sq(y), rel=1e-13)
    # H2 norm of a linear function by hand
    expect = sum(abs(a) ** 2 / 3 + (a * b.conjugate()).real + abs(b) ** 2 + abs(a) ** 2
                 for a, b in [(1 + 1j, 0.5), (-2.0, 1j)])
    assert GRID.h2_norm_sq(y) == pytest.approx(expect, rel=1e-3)


def test_nonnegative_and_dominates_alpha_term(obj):
    rng = np.random.default_rng(0)
    f = SeedFunction(GRID, BoundaryVectors(F0, F1)).admissible()
    for _ in range(10):
        y = f + random_admissible_perturbation(rng, GRID, 3, 10 * rng.uniform())
        assert obj.value(y) >= 0.05 * GRID.h2_norm_sq(y)


def test_gradient_matches_central_differences(obj):
    rng = np.random.default_rng(11)
    f = SeedFunction(GRID, BoundaryVectors(F0, F1)).admissible()
    for _ in range(20):
        v = obj.constraint.to_vector(f + random_admissible_perturbation(rng, GRID, 3, 5.0))
        h = rng.standard_normal(v.size)
        _, g = obj.fg(v)
        fd = oracles.central_difference(obj.f, v, h)
        assert abs(fd - g @ h) <= 1e-5 * abs(g @ h)


def test_grad_J_function_matches_handle(obj):
    y = SeedFunction(GRID, BoundaryVectors(F0, F1)).admissible()
    g = grad_J(y, obj.params, obj.system, GRID, obj.constraint)
    assert np.array_equal(g, obj.fg(obj.constraint.to_vector(y))[1])


def test_phi_is_shifted_J(obj, system):
    seed = SeedFunction(GRID, BoundaryVectors(F0, F1))
    f = seed.admissible()
    rng = np.random.default_rng(2)
    p = random_admissible_perturbation(rng, GRID, 3, 3.0)
    assert eval_Phi(np.zeros_like(f), seed, obj.params, system) == eval_J(f, obj.params, system, GRID)
    assert eval_Phi(p, seed, obj.params, system) == eval_J(p + f, obj.params, system, GRID)
    shift = obj.constraint.to_vector(f)
    phi = ShiftedObjective(obj, shift)
    vp = BoundaryConstraint.homogeneous(GRID, 3).to_vector(p)
    assert np.allclose(phi.fg(vp)[1], obj.fg(vp + shift)[1], rtol=0, atol=0)
    assert np.allclose(obj.constraint.to_state(vp + shift), p + f, atol=1e-14)


def test_random_perturbation_admissible():
    rng = np.random.default_rng(5)
    p = random_admissible_perturbation(rng, GRID, 3, 7.5)
    bc = BoundaryConstraint.homogeneous(GRID, 3)
    assert all(np.abs(r).max() < 1e-12 for r in bc.residuals(p))
    assert h2_norm(p, GRID) == pytest.approx(7.5, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 50), st.floats(0.1, 50), st.integers(0, 1000))
def test_ball_projection(radius, R, seed):
    p = random_admissible_perturbation(np.random.default_rng(seed), GRID, 2, radius)
    q = project_ball(p, R, GRID)
    if radius <= R:
        assert np.allclose(q, p, rtol=1e-12, atol=0)
    else:
        assert h2_norm(q, GRID) == pytest.approx(R, rel=1e-12)
    assert np.array_equal(project_ball(q, R, GRID), q)
    bc = BoundaryConstraint.homogeneous(GRID, 2)
    assert all(np.abs(r).max() < 1e-10 for r in bc.residuals(q))


def test_convexity_probe_zero_on_diagonal(obj):
    y = SeedFunction(GRID, BoundaryVectors(F0, F1)).admissible()
    assert convexity_probe(y, y, obj) == 0.0


def test_convexity_probe_quadratic_case():
    # with F = 0 the functional is a quadratic form, so the probe is exact
    zero = GalerkinSystem.zero(3)
    obj = make_objective(zero, GRID, ObjectiveParams(3.0, 0.05), F0, F1)
    rng = np.random.default_rng(8)
    f = SeedFunction(GRID, BoundaryVectors(F0, F1)).admissible()
    for _ in range(20):
        y1 = f + random_admissible_perturbation(rng, GRID, 3, 20 * rng.uniform())
        y2 = f + random_admissible_perturbation(rng, GRID, 3, 20 * rng.uniform())
        d = y2 - y1
        quad = np.sum(obj._cw * np.abs(GRID.d2 @ d) ** 2) + 0.05 * GRID.h2_norm_sq(d)
        assert convexity_probe(y1, y2, obj) == pytest.approx(quad, rel=1e-9)
        assert convexity_probe(y1, y2, obj) >= 0.05 * GRID.h2_norm_sq(d)


def test_carleman_weight_monotone_in_lambda():
    x = np.linspace(0, 1, 11)
    assert np.all(carleman_weight(x[:-1], 3.0) > 1.0)
    ratio = lambda lam: carleman_weight(x, lam) / carleman_weight(0.0, lam)
    assert np.all(ratio(4.0)[1:] < ratio(3.0)[1:])
