"""Forward scattering model for the 1-D Helmholtz equation.

The total field of a point source at ``x0 < 0`` is computed from the
Lippmann-Schwinger equation on ``[0, 1]``::

    u(x) = u0(x) + (k / 2i) * int_0^1 exp(-ik|x - xi|) (c(xi) - 1) u(xi) dxi

discretized by Nystrom collocation with composite trapezoid weights.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg as sla

from .errors import DataFormatError, ForwardSolverError

C_MIN = 0.1
DEFAULT_X0 = -1.0


def trapezoid_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


@dataclass(frozen=True)
class MediumProfile:
    """Dielectric constant c(x), equal to 1 outside (0, 1).

    Use :meth:`step` for the piecewise-constant targets and :meth:`gridded`
    for sampled profiles (linearly interpolated between samples).
    """

    kind: str
    c_hat: float = 1.0
    x_loc: float = 0.5
    d: float = 0.0
    x: np.ndarray | None = field(default=None, repr=False, compare=False)
    values: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind == "step":
            if self.c_hat < C_MIN:
                raise ValueError(f"c_hat={self.c_hat} below the floor {C_MIN}")
            a, b = self.edges
            if self.d < 0 or a <= 0.0 or b >= 1.0:
                raise ValueError(
                    f"target ({a:g}, {b:g}) must lie strictly inside (0, 1)")
        elif self.kind == "gridded":
            if self.x is None or self.values is None:
                raise ValueError("gridded profile needs x and values")
            if len(self.x) != len(self.values) or len(self.x) < 2:
                raise ValueError("x and values must have equal length >= 2")
            if np.any(np.diff(self.x) <= 0):
                raise ValueError("grid must be strictly increasing")
            if np.min(self.values) < C_MIN:
                raise ValueError(f"c(x) must stay >= {C_MIN}")
        else:
            raise ValueError(f"unknown medium kind {self.kind!r}")

    @classmethod
    def step(cls, c_hat: float, x_loc: float, d: float = 0.1) -> "MediumProfile":
        return cls("step", c_hat=float(c_hat), x_loc=float(x_loc), d=float(d))

    @classmethod
    def homogeneous(cls) -> "MediumProfile":
        return cls("step", c_hat=1.0, x_loc=0.5, d=0.0)

    @classmethod
    def gridded(cls, x, values) -> "MediumProfile":
        x = np.asarray(x, dtype=float)
        values = np.asarray(values, dtype=float)
        return cls("gridded", x=x, values=values)

    @property
    def edges(self) -> tuple[float, float]:
        return self.x_loc - 0.5 * self.d, self.x_loc + 0.5 * self.d

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "gridded":
            c = np.interp(x, self.x, self.values, left=1.0, right=1.0)
            return np.where((x < 0.0) | (x > 1.0), 1.0, c)
        a, b = self.edges
        c = np.where((x > a) & (x < b), self.c_hat, 1.0)
        # a jump sitting on a node gets the mean of both sides, which keeps
        # the trapezoid rule second order across the discontinuity
        on_edge = np.isclose(x, a, rtol=0, atol=1e-12) | np.isclose(x, b, rtol=0, atol=1e-12)
        return np.where(on_edge & (self.d > 0), 0.5 * (self.c_hat + 1.0), c)


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform wave-number grid k_m = k_lo + m h_k, m = 0..nk."""

    k_lo: float = 0.5
    k_hi: float = 1.5
    nk: int = 100

    def __post_init__(self):
        if not 0 < self.k_lo < self.k_hi:
            raise ValueError("need 0 < k_lo < k_hi")
        if self.nk < 1:
            raise ValueError("nk must be >= 1")

    @property
    def h(self) -> float:
        return (self.k_hi - self.k_lo) / self.nk

    @property
    def nodes(self) -> np.ndarray:
        return self.k_lo + self.h * np.arange(self.nk + 1)

    @property
    def weights(self) -> np.ndarray:
        return trapezoid_weights(self.nk + 1, self.h)

    def subgrid(self, nk: int) -> tuple["FrequencyGrid", np.ndarray]:
        """Coarser grid on the same interval and the indices it keeps."""
        if self.nk % nk:
            raise ValueError(f"cannot downsample nk={self.nk} to nk={nk}")
        stride = self.nk // nk
        return FrequencyGrid(self.k_lo, self.k_hi, nk), np.arange(0, self.nk + 1, stride)


@dataclass(frozen=True)
class ComplexSamples:
    grid: FrequencyGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (self.grid.nk + 1,):
            raise ValueError(
                f"expected {self.grid.nk + 1} samples, got shape {values.shape}")
        object.__setattr__(self, "values", values)

    @property
    def k(self) -> np.ndarray:
        return self.grid.nodes

    def replace(self, values) -> "ComplexSamples":
        return ComplexSamples(self.grid, values)

    def restrict(self, nk: int) -> "ComplexSamples":
        grid, idx = self.grid.subgrid(nk)
        return ComplexSamples(grid, self.values[idx])


def incident_field(x, x0: float, k: float):
    """Free-space field e^{-ik|x-x0|} / (2ik) of a unit point source."""
    if np.any(np.asarray(k) <= 0):
        raise ValueError("wave number must be positive")
    x = np.asarray(x, dtype=float)
    return np.exp(-1j * k * np.abs(x - x0)) / (2j * k)


@dataclass(frozen=True)
class ScatteredField:
    """Solution of the collocation system at one wave number."""

    k: float
    x0: float
    xi: np.ndarray
    weights: np.ndarray
    contrast: np.ndarray  # c(xi) - 1 at the nodes
    u: np.ndarray

    @property
    def u_at_zero(self) -> complex:
        return complex(self.at(0.0))

    def at(self, x):
        """Nystrom interpolation of u at arbitrary points."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        kernel = np.exp(-1j * self.k * np.abs(x[:, None] - self.xi[None, :]))
        scat = (self.k / 2j) * kernel @ (self.weights * self.contrast * self.u)
        out = incident_field(x, self.x0, self.k) + scat
        return out if out.size > 1 else out[0]


def solve_lippmann_schwinger(medium: MediumProfile, k: float, x0: float = DEFAULT_X0,
                             nq: int = 401) -> ScatteredField:
    if x0 >= 0:
        raise ValueError("source must sit at x0 < 0")
    if nq < 2:
        raise ValueError("need at least two quadrature nodes")
    if k <= 0:
        raise ValueError("wave number must be positive")
    xi = np.linspace(0.0, 1.0, nq)
    w = trapezoid_weights(nq, xi[1] - xi[0])
    contrast = medium(xi) - 1.0
    u_inc = incident_field(xi, x0, k)
    if not np.any(contrast):
        return ScatteredField(k, x0, xi, w, contrast, u_inc)

    kernel = np.exp(-1j * k * np.abs(xi[:, None] - xi[None, :]))
    A = np.eye(nq, dtype=complex) - (k / 2j) * kernel * (w * contrast)[None, :]
    anorm = np.linalg.norm(A, 1)
    lu, piv, info = sla.lapack.zgetrf(A)
    rcond = 0.0
    if info == 0:
        rcond, _ = sla.lapack.zgecon(lu, anorm)
    if info != 0 or rcond < np.finfo(float).eps:
        cond = np.inf if rcond == 0 else 1.0 / rcond
        raise ForwardSolverError(
            f"collocation matrix singular at k={k:g} (condition ~ {cond:.3e})")
    u, _ = sla.lapack.zgetrs(lu, piv, u_inc)
    return ScatteredField(k, x0, xi, w, contrast, u)


def boundary_data(medium: MediumProfile, grid: FrequencyGrid, x0: float = DEFAULT_X0,
                  nq: int = 401, x_obs: float = 0.0) -> ComplexSamples:
    """g0(k) = u(x_obs, k) / u0(x_obs, k) on every grid node."""
    vals = np.empty(grid.nk + 1, dtype=complex)
    for m, k in enumerate(grid.nodes):
        sol = solve_lippmann_schwinger(medium, k, x0=x0, nq=nq)
        vals[m] = sol.at(x_obs) / incident_field(x_obs, x0, k)
    return ComplexSamples(grid, vals)


def derivative_data(g0: ComplexSamples) -> ComplexSamples:
    """g1(k) = 2ik (g0(k) - 1), the x-derivative of u/u0 at the boundary."""
    k = g0.k
    return g0.replace(2j * k * (g0.values - 1.0))


def add_noise(g0: ComplexSamples, delta: float, seed: int | None = 0) -> ComplexSamples:
    """Multiplicative noise g0 (1 + delta (s_r + i s_i)), s_r, s_i ~ U[-1, 1]."""
    if delta < 0:
        raise ValueError("noise level must be non-negative")
    if delta == 0:
        return g0.replace(g0.values.copy())
    rng = np.random.default_rng(seed)
    n = g0.values.size
    sigma = rng.uniform(-1.0, 1.0, n) + 1j * rng.uniform(-1.0, 1.0, n)
    return g0.replace(g0.values * (1.0 + delta * sigma))


def moving_average(values: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average; the ends average over what is available."""
    values = np.asarray(values)
    n = values.shape[0]
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be a positive odd integer, got {window}")
    if window > n:
        raise ValueError(f"window {window} exceeds sample count {n}")
    kernel = np.ones(window)
    # direct sums keep constant data exactly constant
    return np.convolve(values, kernel, "same") / np.convolve(np.ones(n), kernel, "same")


def smooth(samples: ComplexSamples, window: int = 5) -> ComplexSamples:
    return samples.replace(moving_average(samples.values, window))


def write_samples(path, samples: ComplexSamples) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["k", "re", "im"])
        for k, v in zip(samples.k, samples.values):
            out.writerow([f"{k:.17g}", f"{v.real:.17g}", f"{v.imag:.17g}"])


def read_samples(path) -> ComplexSamples:
    """Parse a ``k,re,im`` CSV written by :func:`write_samples`."""
    path = Path(path)
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["k", "re", "im"]:
            raise DataFormatError(f"{path}:1: expected header 'k,re,im', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not s.strip() for s in row):
                continue
            if len(row) != 3:
                raise DataFormatError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            try:
                rows.append([float(s) for s in row])
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: {exc}") from None
    if len(rows) < 2:
        raise DataFormatError(f"{path}: need at least two samples")
    data = np.array(rows)
    k = data[:, 0]
    nk = len(k) - 1
    grid = FrequencyGrid(float(k[0]), float(k[-1]), nk)
    if not np.allclose(k, grid.nodes, rtol=1e-9, atol=1e-12):
        raise DataFormatError(f"{path}: wave numbers are not equally spaced")
    return ComplexSamples(grid, data[:, 1] + 1j * data[:, 2])
