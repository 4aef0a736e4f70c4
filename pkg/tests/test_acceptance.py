"""The ten acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line, printed again in the terminal
summary.  Seeds: batch target i (row-major over contrast then location)
uses noise seed ``PipelineConfig().seed + i`` = i.
"""
import time

import numpy as np
import pytest

import oracles
from conftest import record
from convexify1d.basis import build_basis, build_projection_matrix
from convexify1d.forward import (FrequencyGrid, MediumProfile, boundary_data, derivative_data,
                                 solve_lippmann_schwinger)
from convexify1d.galerkin import BoundaryVectors, SeedFunction, project_boundary
from convexify1d.mesh import SpatialGrid
from convexify1d.objective import (ObjectiveParams, convexity_probe, h2_norm, make_objective,
                                   random_admissible_perturbation)
from convexify1d.pipeline import (ContrastEstimate, PipelineConfig, galerkin_setup, locate,
                                  n_study, run_synthetic, run_table1, synthetic_data,
                                  batch_targets, write_result)
from convexify1d.preprocess import compute_q

CFG = PipelineConfig()


def test_1_basis_algebra():
    t = time.perf_counter()
    worst = dict(gram=0.0, diag=0.0, lower=0.0, det=0.0)
    for n in range(1, 7):
        b = build_basis(0.5, 1.5, n)
        m = build_projection_matrix(b)
        worst["gram"] = max(worst["gram"], np.abs(b.gram() - np.eye(n)).max())
        worst["diag"] = max(worst["diag"], np.abs(np.diag(m.matrix) - 1).max())
        worst["lower"] = max(worst["lower"], np.abs(np.tril(m.matrix, -1)).max(initial=0.0))
        worst["det"] = max(worst["det"], abs(m.det - 1))
    elapsed = time.perf_counter() - t
    ok = (worst["gram"] <= 1e-10 and worst["diag"] <= 1e-9 and worst["lower"] <= 1e-9
          and worst["det"] <= 1e-8 and elapsed < 1.0)
    record(1, ok, "gram {gram:.1e}, diag {diag:.1e}, lower {lower:.1e}, det {det:.1e}".format(**worst)
           + f", {elapsed:.2f}s")
    assert ok


def test_2_forward_oracle_equivalence():
    t = time.perf_counter()
    worst = 0.0
    for c_hat, x_loc in batch_targets():
        med, cf = MediumProfile.step(c_hat, x_loc), oracles.step_profile(c_hat, x_loc)
        for k in (0.5, 1.0, 1.5):
            a = solve_lippmann_schwinger(med, k).u_at_zero
            b = oracles.fdm_u_at(cf, k)
            worst = max(worst, abs(a - b) / abs(b))
    elapsed = time.perf_counter() - t
    ok = worst <= 1e-3 and elapsed < 30
    record(2, ok, f"max relative difference {worst:.2e} over 48 cases, {elapsed:.1f}s")
    assert ok


def test_3_zero_contrast_identity():
    g0 = boundary_data(MediumProfile.homogeneous(), FrequencyGrid(0.5, 1.5, 100))
    err = np.abs(g0.values - 1).max()
    record(3, err <= 1e-12, f"max |g0 - 1| = {err:.1e}")
    assert err <= 1e-12


@pytest.fixture(scope="module")
def reference_objective():
    g0 = boundary_data(MediumProfile.step(5.0, 0.4), CFG.data_grid)
    q = compute_q(g0, derivative_data(g0))
    basis, system = galerkin_setup(0.5, 1.5, 3)
    bv = project_boundary(q, basis)
    grid = SpatialGrid(50)
    obj = make_objective(system, grid, ObjectiveParams(3.0, 0.05), bv.f0, bv.f1)
    return obj, SeedFunction(grid, BoundaryVectors(bv.f0, bv.f1)).admissible()


def test_4_gradient_correctness(reference_objective):
    obj, f = reference_objective
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(20):
        y = f + random_admissible_perturbation(rng, obj.grid, 3, 20 * rng.uniform())
        v = obj.constraint.to_vector(y)
        h = rng.standard_normal(v.size)
        _, g = obj.fg(v)
        fd = oracles.central_difference(obj.f, v, h)
        worst = max(worst, abs(fd - g @ h) / abs(g @ h))
    record(4, worst < 1e-5, f"max relative error {worst:.2e} over 20 random (y, h)")
    assert worst < 1e-5


def test_5_convexity_sampling(reference_objective):
    """Falsification check only: lambda_1 of the theory is not computable."""
    obj, f = reference_objective
    rng = np.random.default_rng(7)
    probes, ratios = [], []
    for _ in range(1000):
        p1 = random_admissible_perturbation(rng, obj.grid, 3, 20 * rng.uniform())
        p2 = random_admissible_perturbation(rng, obj.grid, 3, 20 * rng.uniform())
        probes.append(convexity_probe(f + p1, f + p2, obj))
        ratios.append(probes[-1] / h2_norm(p2 - p1, obj.grid) ** 2)
    probes = np.array(probes)
    neg = int(np.sum(probes < 0))
    record(5, neg == 0, f"{neg} negative probes of 1000 (min {probes.min():.3e}, "
                        f"min probe/||dy||^2 {min(ratios):.3e})")
    assert neg == 0


def test_6_n_study():
    t = time.perf_counter()
    eps = n_study(CFG, 5.0, 0.4, (1, 2, 3, 4))
    elapsed = time.perf_counter() - t
    ok = eps[3] <= 0.15 and eps[4] < eps[3] and eps[4] <= 0.05 and elapsed < 60
    record(6, ok, "eps_N " + ", ".join(f"N={n}: {e:.4f}" for n, e in eps.items())
           + f", {elapsed:.1f}s")
    assert ok


@pytest.fixture(scope="module")
def table1():
    t = time.perf_counter()
    results = run_table1(CFG, workers=4)
    return results, time.perf_counter() - t


@pytest.mark.slow
def test_7_batch_reconstruction(table1):
    results, elapsed = table1
    eps = np.array([np.inf if r.eps_comp is None else r.eps_comp for r in results])
    rows = " ".join(f"{r.c_true:g}/{r.x_loc:g}:{r.c_hat_comp:.2f}" for r in results)
    ok = bool(np.all(eps <= 10.0) and eps.mean() <= 6.0)
    record(7, ok, f"max eps {eps.max():.2f}%, mean eps {eps.mean():.2f}%, {elapsed:.0f}s; "
                  f"c_hat_comp {rows}")
    assert ok


def test_8_location_estimation():
    errs = []
    for i, (c_hat, x_loc) in enumerate(batch_targets()):
        g0 = synthetic_data(CFG, MediumProfile.step(c_hat, x_loc), CFG.seed + i)
        errs.append(locate(g0, CFG).x_est - x_loc)
    errs = np.array(errs)
    worst = np.abs(errs).max()
    ok = worst <= 0.05 + 1e-12
    record(8, ok, f"max |x_est - x_loc| = {worst:.2f}; errors {np.round(errs, 2).tolist()}")
    assert ok


def test_9_contrast_arithmetic():
    high = ContrastEstimate(4.91, 3.0, 5.0).interval
    low = ContrastEstimate(0.59, 3.0, 5.0).interval
    got = [round(v, 2) for v in high + low]
    ok = got == [14.73, 24.55, 1.77, 2.95]
    record(9, ok, f"contrast 4.91 -> {got[:2]}, contrast 0.59 -> {got[2:]}")
    assert ok


@pytest.mark.slow
def test_10_optimizer_contract(table1, tmp_path):
    results, _ = table1
    monotone = all(r.trace.is_monotone() for r in results if r.trace is not None)
    ran = sum(r.trace is not None for r in results)
    for name in ("a", "b"):
        write_result(tmp_path / name, run_synthetic(CFG, 5.0, 0.3, seed=CFG.seed + 10,
                                                    trace_rows=True))
    same = all((tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
               for f in ("c_comp.csv", "summary.json", "r_of_x.csv", "trace.csv"))
    ok = monotone and same and ran == 16
    record(10, ok, f"monotone on {ran}/16 runs: {monotone}; rerun byte-identical: {same}")
    assert ok
