import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from convexify1d.errors import DataError
from convexify1d.forward import (ComplexSamples, FrequencyGrid, MediumProfile, add_noise,
                                 boundary_data, derivative_data, incident_field, smooth,
                                 solve_lippmann_schwinger)
from convexify1d.mesh import SpatialGrid
from convexify1d.preprocess import (PhaseResolutionWarning, complex_log_unwrapped, compute_q,
                                    estimate_location, propagate_data, qrm_objective, qrm_system)

GRID = FrequencyGrid(0.5, 1.5, 100)


@pytest.fixture(scope="module")
def g_target():
    return boundary_data(MediumProfile.step(5.0, 0.4), GRID)


def test_log_of_one_is_zero():
    g = ComplexSamples(GRID, np.ones(101))
    assert np.all(complex_log_unwrapped(g).values == 0)


def test_log_follows_phase_across_branch_cut():
    k = GRID.nodes
    g = ComplexSamples(GRID, np.exp(1j * np.pi * k))
    assert np.allclose(complex_log_unwrapped(g).values.imag, np.pi * k, atol=1e-12)


def test_exp_log_identity(g_target):
    assert np.abs(np.exp(complex_log_unwrapped(g_target).values) - g_target.values).max() < 1e-12


def test_zero_sample_named():
    vals = np.ones(101, dtype=complex)
    vals[7] = 0
    with pytest.raises(DataError, match="node 7"):
        complex_log_unwrapped(ComplexSamples(GRID, vals))


def test_coarse_phase_warns():
    g = ComplexSamples(FrequencyGrid(0.5, 1.5, 4), np.exp(1j * np.array([0, 2.0, 4.0, 6.0, 8.0])))
    with pytest.warns(PhaseResolutionWarning):
        complex_log_unwrapped(g)


def test_phase_continuity_on_noisy_targets():
    for i, (c, x) in enumerate([(3.0, 0.1), (6.0, 0.4)]):
        g = smooth(add_noise(boundary_data(MediumProfile.step(c, x), GRID), 0.05, i), 5)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            ph = complex_log_unwrapped(g).values.imag
        assert np.abs(np.diff(ph)).max() < np.pi


def test_q_of_homogeneous_medium():
    g0 = ComplexSamples(GRID, np.ones(101))
    q = compute_q(g0, derivative_data(g0))
    assert np.all(q.q0.values == 0) and np.all(q.q1.values == 0)


def test_q1_identity(g_target):
    q = compute_q(g_target, derivative_data(g_target))
    k, g = GRID.nodes, g_target.values
    assert np.allclose(q.q1.values, 2j * (g - 1) / (g * k), rtol=1e-13)


def test_q_frozen_values(g_target):
    # forward solve -> log chain for c=5 at x=0.4; the end values are also
    # checked against the finite-difference oracle below
    q = compute_q(g_target, derivative_data(g_target))
    assert q.q0.values[0] == pytest.approx(-0.17824359511050533 - 0.36505963291062127j, abs=1e-12)
    assert q.q0.values[100] == pytest.approx(-0.14665292743501895 - 0.014537023673422302j, abs=1e-12)
    assert q.q1.values[50] == pytest.approx(0.2973537885820146 - 0.35275549484984486j, abs=1e-12)


def test_q_against_fdm_oracle(g_target):
    k = 1.5
    g_ref = oracles.fdm_u_at(oracles.step_profile(5.0, 0.4), k) / oracles.incident(0.0, -1.0, k)
    q0_ref = np.log(g_ref) / k**2
    q = compute_q(g_target, derivative_data(g_target))
    assert abs(q.q0.values[-1] - q0_ref) < 1e-4


def test_qrm_zero_data():
    loc = estimate_location(0j, 0j)
    assert np.all(loc.r == 0) and loc.x_est == 0.0 and loc.x_tar == 0.0


def test_qrm_stationarity_and_optimality():
    grid = SpatialGrid(50)
    bc, H, rhs = qrm_system(0.1 - 0.2j, 0.3 + 0.1j, 55.0, grid)
    loc = estimate_location(0.1 - 0.2j, 0.3 + 0.1j, 55.0, 50)
    z = bc.free_part(loc.r[:, None])[:, 0]
    assert np.linalg.norm(H @ z - rhs) < 1e-8 * np.linalg.norm(rhs)
    base = qrm_objective(loc.r, 55.0, grid)
    rng = np.random.default_rng(0)
    for _ in range(5):
        dz = rng.standard_normal(z.size) * 1e-3
        other = bc.embed((z + dz)[:, None])[:, 0]
        assert qrm_objective(other, 55.0, grid) > base


def test_qrm_boundary_conditions():
    loc = estimate_location(0.2 + 0.1j, -0.4j)
    grid = SpatialGrid(50)
    assert loc.r[0] == pytest.approx(0.2 + 0.1j)
    assert grid.d1[0] @ loc.r == pytest.approx(-0.4j)
    assert grid.d1[-1] @ loc.r == pytest.approx(0, abs=1e-12)


def test_qrm_locates_reference_target(g_target):
    q = compute_q(g_target, derivative_data(g_target))
    loc = estimate_location(q.q0.values[-1], q.q1.values[-1])
    assert abs(loc.x_est - 0.4) <= 0.05
    assert 0 <= loc.x_tar <= 0.9


def test_qrm_gamma_validation():
    with pytest.raises(ValueError):
        estimate_location(1j, 1j, gamma=0.0)


def test_propagation_zero_distance(g_target):
    assert np.array_equal(propagate_data(g_target, 0.0).values, g_target.values)


def test_propagation_of_unit_data():
    g = ComplexSamples(GRID, np.ones(101))
    assert np.allclose(propagate_data(g, 0.27).values, 1.0, atol=0)


def test_propagation_matches_shifted_observation(g_target):
    got = propagate_data(g_target, 0.3).values[[0, 50, 100]]
    for val, k in zip(got, GRID.nodes[[0, 50, 100]]):
        sol = solve_lippmann_schwinger(MediumProfile.step(5.0, 0.4), k)
        ref = sol.at(0.3) / incident_field(0.3, -1.0, k)
        assert abs(val - ref) / abs(ref) < 1e-3


@settings(max_examples=25, deadline=None)
@given(st.floats(0, 0.45), st.floats(0, 0.45))
def test_propagation_composes(a, b):
    g = boundary_data(MediumProfile.step(4.0, 0.95 - 0.02), FrequencyGrid(nk=5))
    two = propagate_data(propagate_data(g, a), b)
    one = propagate_data(g, a + b)
    assert np.abs(two.values - one.values).max() < 1e-12
