"""End-to-end reconstruction: data, localization, inversion, post-processing."""
from __future__ import annotations

import dataclasses
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import forward
from .basis import build_basis, build_projection_matrix, gauss_legendre
from .errors import StageError
from .forward import ComplexSamples, FrequencyGrid, MediumProfile
from .galerkin import (GalerkinSystem, SeedFunction, build_system, postprocess_c,
                       project_boundary, recover_c)
from .mesh import SpatialGrid
from .objective import ObjectiveParams, make_objective
from .optimizer import RunTrace, ScheduleParams, h2_metric, minimize_cg
from .preprocess import LocationEstimate, compute_q, estimate_location, propagate_data

BATCH_CONTRASTS = (3.0, 4.0, 5.0, 6.0)
BATCH_LOCATIONS = (0.1, 0.2, 0.3, 0.4)


def batch_targets() -> list[tuple[float, float]]:
    return [(c, x) for c in BATCH_CONTRASTS for x in BATCH_LOCATIONS]


@dataclass(frozen=True)
class PipelineConfig:
    k_lo: float = 0.5
    k_hi: float = 1.5
    nk_data: int = 100        # subintervals of the simulated data grid
    nk_inv: int = 100         # subintervals used for the boundary projection
    nx: int = 50
    n_basis: int = 3
    lam: float = 3.0
    alpha: float = 0.05
    rho: float = 0.5
    delta: float = 0.05
    seed: int = 0
    x0: float = -1.0
    nq: int = 401
    target_width: float = 0.1
    smooth_window: int = 5
    avg_window: int = 5
    qrm_gamma: float = 55.0
    locate: bool = True
    metric: str = "h2"        # "h2" or "euclidean"
    step0: float = 1e-7
    shrink: float = 10.0
    grow_every: int = 1000
    grow: float = 10.0
    max_iter: int = 15000
    min_step: float = 1e-14
    restart_every: int = 50
    mode: str = "synthetic"   # "synthetic" or "experimental"
    targets: tuple = field(default_factory=lambda: tuple(batch_targets()))

    def __post_init__(self):
        if self.metric not in ("h2", "euclidean"):
            raise ValueError(f"metric must be 'h2' or 'euclidean', got {self.metric!r}")
        if self.mode not in ("synthetic", "experimental"):
            raise ValueError(f"mode must be 'synthetic' or 'experimental', got {self.mode!r}")
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must lie in (0, 1)")
        if self.delta < 0:
            raise ValueError("delta must be non-negative")
        object.__setattr__(self, "targets", tuple(tuple(map(float, t)) for t in self.targets))
        # surface range errors at construction rather than mid-run
        FrequencyGrid(self.k_lo, self.k_hi, self.nk_data).subgrid(self.nk_inv)
        self.objective_params
        self.schedule

    @property
    def objective_params(self) -> ObjectiveParams:
        return ObjectiveParams(self.lam, self.alpha)

    @property
    def schedule(self) -> ScheduleParams:
        return ScheduleParams(self.step0, self.shrink, self.grow_every, self.grow,
                              self.max_iter, self.min_step, self.restart_every)

    @property
    def data_grid(self) -> FrequencyGrid:
        return FrequencyGrid(self.k_lo, self.k_hi, self.nk_data)

    def replace(self, **changes) -> "PipelineConfig":
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "PipelineConfig":
        with open(path) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError("config file must hold a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["targets"] = [list(t) for t in self.targets]
        return d


@lru_cache(maxsize=16)
def galerkin_setup(k_lo: float, k_hi: float, n: int):
    basis = build_basis(k_lo, k_hi, n)
    projection = build_projection_matrix(basis)
    return basis, build_system(basis, projection)


@dataclass
class Inversion:
    x: np.ndarray
    y: np.ndarray
    beta: np.ndarray
    c_comp: np.ndarray
    trace: RunTrace


@dataclass
class ReconstructionResult:
    x: np.ndarray
    c_comp: np.ndarray
    c_hat_comp: float
    c_true: float | None = None
    x_loc: float | None = None
    location: LocationEstimate | None = None
    trace: RunTrace | None = None
    error: str | None = None

    @property
    def eps_comp(self) -> float | None:
        if self.c_true is None or self.error is not None:
            return None
        return abs(self.c_hat_comp - self.c_true) / self.c_true * 100.0

    @property
    def x_est(self) -> float | None:
        return None if self.location is None else self.location.x_est

    def summary(self) -> dict:
        t = self.trace
        return {
            "c_true": self.c_true,
            "x_loc": self.x_loc,
            "c_hat_comp": self.c_hat_comp,
            "eps_comp": self.eps_comp,
            "x_est": self.x_est,
            "x_tar": None if self.location is None else self.location.x_tar,
            "iterations": None if t is None else t.iterations,
            "final_J": None if t is None else t.final_value,
            "final_step": None if t is None else t.final_step,
            "termination": None if t is None else t.reason,
            "error": self.error,
        }


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


def invert(g0: ComplexSamples, config: PipelineConfig, mode: str = "max",
           trace_rows: bool = False) -> Inversion:
    """From boundary data g0 (already smoothed or propagated) to c_comp."""
    grid_k, idx = g0.grid.subgrid(config.nk_inv)
    g0_inv = ComplexSamples(grid_k, g0.values[idx])
    g1_inv = forward.derivative_data(g0_inv)
    q = _stage("log", compute_q, g0_inv, g1_inv)
    basis, system = _stage("galerkin", galerkin_setup, grid_k.k_lo, grid_k.k_hi, config.n_basis)
    bv = _stage("boundary", project_boundary, q, basis)
    mesh = SpatialGrid(config.nx)
    obj = make_objective(system, mesh, config.objective_params, bv.f0, bv.f1)
    y0 = SeedFunction(mesh, bv).admissible()
    metric = h2_metric(obj.constraint) if config.metric == "h2" else None
    v, trace = _stage("optimize", minimize_cg, obj.constraint.to_vector(y0), obj,
                      config.schedule, metric, trace_rows)
    y = obj.constraint.to_state(v)
    rec = recover_c(y, basis, mesh, basis.k_lo)
    c = _stage("postprocess", postprocess_c, rec.beta, config.rho, mode, config.avg_window)
    return Inversion(mesh.x.copy(), y, rec.beta, c, trace)


def _shift_back(x: np.ndarray, c: np.ndarray, x_tar: float) -> np.ndarray:
    """c was reconstructed in coordinates starting at x_tar; map to [0, 1]."""
    if x_tar == 0.0:
        return c
    return np.where(x < x_tar, 1.0, np.interp(x - x_tar, x, c))


def synthetic_data(config: PipelineConfig, medium: MediumProfile, seed: int) -> ComplexSamples:
    g0 = _stage("forward", forward.boundary_data, medium, config.data_grid, config.x0, config.nq)
    g0 = _stage("noise", forward.add_noise, g0, config.delta, seed)
    return _stage("smooth", forward.smooth, g0, config.smooth_window)


def locate(g0: ComplexSamples, config: PipelineConfig) -> LocationEstimate:
    q = _stage("log", compute_q, g0, forward.derivative_data(g0))
    return _stage("location", estimate_location, q.q0.values[-1], q.q1.values[-1],
                  config.qrm_gamma, config.nx)


def run_synthetic(config: PipelineConfig, c_true: float, x_loc: float, seed: int | None = None,
                  trace_rows: bool = False, medium: MediumProfile | None = None) -> ReconstructionResult:
    seed = config.seed if seed is None else seed
    if medium is None:
        medium = _stage("forward", MediumProfile.step, c_true, x_loc, config.target_width)
    g0 = synthetic_data(config, medium, seed)
    loc = None
    if config.locate:
        loc = locate(g0, config)
        if loc.propagate:
            g0 = _stage("propagate", propagate_data, g0, loc.x_tar)
    inv = invert(g0, config, "max", trace_rows)
    x_tar = loc.x_tar if (loc is not None and loc.propagate) else 0.0
    c = _shift_back(inv.x, inv.c_comp, x_tar)
    return ReconstructionResult(inv.x, c, float(c.max()), c_true, x_loc, loc, inv.trace)


def _batch_job(args):
    config, index, (c_true, x_loc) = args
    try:
        return run_synthetic(config, c_true, x_loc, seed=config.seed + index)
    except Exception as exc:  # one failed target must not stop the batch
        x = SpatialGrid(config.nx).x
        return ReconstructionResult(x, np.ones_like(x), float("nan"), c_true, x_loc,
                                    error=f"{type(exc).__name__}: {exc}")


def run_table1(config: PipelineConfig, workers: int | None = None) -> list[ReconstructionResult]:
    """Reconstruct every configured target; target i uses seed config.seed + i."""
    jobs = [(config, i, t) for i, t in enumerate(config.targets)]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_batch_job, jobs))
    return [_batch_job(j) for j in jobs]


def true_v(medium: MediumProfile, config: PipelineConfig, n_quad: int = 64):
    """v(x, k) = log(u/u0)/k^2 on the collocation nodes at Gauss points in k."""
    k, w = gauss_legendre(config.k_lo, config.k_hi, n_quad)
    rows = []
    for kk in k:
        sol = forward.solve_lippmann_schwinger(medium, kk, config.x0, config.nq)
        rows.append(sol.u / forward.incident_field(sol.xi, config.x0, kk))
    ratio = np.array(rows)                                    # (k, x)
    phase = np.unwrap(np.angle(ratio), axis=0)
    v = (np.log(np.abs(ratio)) + 1j * phase) / k[:, None] ** 2
    return sol.xi, k, w, v


def n_study(config: PipelineConfig, c_true: float = 5.0, x_loc: float = 0.4,
            ns=(1, 2, 3, 4)) -> dict[int, float]:
    """L2 error of c recovered from the N-term projection of the true v."""
    if min(ns) < 1:
        raise ValueError("basis size must be >= 1")
    medium = MediumProfile.step(c_true, x_loc, config.target_width)
    xi, k, w, v = true_v(medium, config)
    mesh = SpatialGrid(len(xi) - 1)
    c_ref = medium(xi)
    out = {}
    for n in ns:
        basis = build_basis(config.k_lo, config.k_hi, n)
        y = ((basis.psi(k) * w) @ v).T                        # (x, N)
        c = recover_c(y, basis, mesh, config.k_lo).c
        out[n] = float(np.sqrt(mesh.integrate((c - c_ref) ** 2)))
    return out


@dataclass(frozen=True)
class ContrastEstimate:
    c_contrast: float
    c_bg_lo: float
    c_bg_hi: float

    def __post_init__(self):
        if self.c_bg_lo > self.c_bg_hi:
            raise ValueError("background range must be ordered")

    @property
    def interval(self) -> tuple[float, float]:
        return self.c_bg_lo * self.c_contrast, self.c_bg_hi * self.c_contrast


def run_experimental(data: ComplexSamples | str | os.PathLike, c_bg_lo: float, c_bg_hi: float,
                     mode: str = "max", config: PipelineConfig | None = None,
                     trace_rows: bool = False):
    """Contrast of a buried target from measured g0; no localization step."""
    config = PipelineConfig(mode="experimental") if config is None else config
    if not isinstance(data, ComplexSamples):
        data = _stage("read", forward.read_samples, data)
    if not (np.isclose(data.grid.k_lo, config.k_lo) and np.isclose(data.grid.k_hi, config.k_hi)):
        config = config.replace(k_lo=data.grid.k_lo, k_hi=data.grid.k_hi)
    if data.grid.nk % config.nk_inv:
        config = config.replace(nk_inv=data.grid.nk)
    config = config.replace(nk_data=data.grid.nk)
    inv = invert(data, config, mode, trace_rows)
    c_hat = float(inv.c_comp.max() if mode == "max" else inv.c_comp.min())
    result = ReconstructionResult(inv.x, inv.c_comp, c_hat, trace=inv.trace)
    return ContrastEstimate(c_hat, float(c_bg_lo), float(c_bg_hi)), result


# writers ---------------------------------------------------------------

def _fmt(v: float) -> str:
    return f"{v:.17g}"


def write_c_comp(path, x, c) -> None:
    lines = ["x,c"] + [f"{_fmt(a)},{_fmt(b)}" for a, b in zip(x, c)]
    Path(path).write_text("\n".join(lines) + "\n")


def write_r_of_x(path, location: LocationEstimate) -> None:
    lines = ["x,re,im"] + [f"{_fmt(a)},{_fmt(b.real)},{_fmt(b.imag)}"
                           for a, b in zip(location.x, location.r)]
    Path(path).write_text("\n".join(lines) + "\n")


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def write_table1(path, results: list[ReconstructionResult]) -> None:
    lines = ["c_true,x_loc,c_hat_comp,eps_comp_percent,x_est,error"]
    for r in results:
        eps = "" if r.eps_comp is None else f"{r.eps_comp:.2f}"
        x_est = "" if r.x_est is None else f"{r.x_est:.2f}"
        err = (r.error or "").replace(",", ";")
        lines.append(f"{r.c_true:.1f},{r.x_loc:.1f},{r.c_hat_comp:.2f},{eps},{x_est},{err}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_result(out_dir, result: ReconstructionResult) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_c_comp(out / "c_comp.csv", result.x, result.c_comp)
    write_json(out / "summary.json", result.summary())
    if result.location is not None:
        write_r_of_x(out / "r_of_x.csv", result.location)
    if result.trace is not None and result.trace.rows:
        result.trace.write_csv(out / "trace.csv")
