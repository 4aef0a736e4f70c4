"""Galerkin reduction of the k-differentiated equation for v = log(u/u0)/k^2.

Writing v(x, k) = sum_n y_n(x) psi_n(k) and projecting the k-derivative of

    v'' - 2ik v' + k^2 (v')^2 = -beta(x)

onto psi_s gives M y'' + Qt(y', y') + Lt y' = 0, i.e.
y'' + F(y') = 0 with F = M^{-1}(Qt + Lt).  Here ' is d/dx.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .basis import BasisSet, ProjectionMatrix, gauss_legendre
from .forward import FrequencyGrid, moving_average
from .mesh import BoundaryConstraint, SpatialGrid
from .preprocess import LogData

CHI_FLAT_END = 0.5
CHI_ZERO_START = 0.75


def chi(x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """C^2 cut-off: 1 on [0, 1/2], 0 on [3/4, 1], quintic smoothstep between.

    Returns (chi, chi', chi'').
    """
    x = np.asarray(x, dtype=float)
    width = CHI_ZERO_START - CHI_FLAT_END
    t = np.clip((x - CHI_FLAT_END) / width, 0.0, 1.0)
    val = 1.0 - t**3 * (10.0 - 15.0 * t + 6.0 * t**2)
    d1 = -30.0 * t**2 * (1.0 - t) ** 2 / width
    d2 = -60.0 * t * (1.0 - t) * (1.0 - 2.0 * t) / width**2
    return val, d1, d2


@dataclass(frozen=True)
class BoundaryVectors:
    f0: np.ndarray
    f1: np.ndarray

    def __post_init__(self):
        for name in ("f0", "f1"):
            arr = np.asarray(getattr(self, name), dtype=complex)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} has non-finite entries")
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.f0.size

    def constraint(self, grid: SpatialGrid) -> BoundaryConstraint:
        return BoundaryConstraint(grid, self.f0, self.f1)


def project_boundary(q: LogData, basis: BasisSet, grid: FrequencyGrid | None = None) -> BoundaryVectors:
    """Trapezoid-weighted inner products of q0, q1 with every psi_n."""
    if grid is not None and grid != q.grid:
        raise ValueError("boundary data and requested frequency grid differ")
    g = q.grid
    if not (np.isclose(g.k_lo, basis.k_lo) and np.isclose(g.k_hi, basis.k_hi)):
        raise ValueError(
            f"data on [{g.k_lo}, {g.k_hi}] but basis on [{basis.k_lo}, {basis.k_hi}]")
    pw = basis.psi(g.nodes) * g.weights
    return BoundaryVectors(pw @ q.q0.values, pw @ q.q1.values)


@dataclass(frozen=True)
class SeedFunction:
    """f(x) = (f0 + x f1) chi(x) sampled on the mesh, with analytic derivatives."""

    grid: SpatialGrid
    bv: BoundaryVectors

    @cached_property
    def _parts(self):
        x = self.grid.x[:, None]
        c, c1, c2 = (a[:, None] for a in chi(self.grid.x))
        lin = self.bv.f0[None, :] + x * self.bv.f1[None, :]
        f = lin * c
        df = self.bv.f1[None, :] * c + lin * c1
        ddf = 2.0 * self.bv.f1[None, :] * c1 + lin * c2
        return f, df, ddf

    @property
    def values(self) -> np.ndarray:
        return self._parts[0]

    @property
    def d1(self) -> np.ndarray:
        return self._parts[1]

    @property
    def d2(self) -> np.ndarray:
        return self._parts[2]

    def admissible(self) -> np.ndarray:
        """Samples of f with the eliminated nodes reset to satisfy the discrete triple."""
        return self.bv.constraint(self.grid).project(self.values)


@dataclass(frozen=True)
class GalerkinSystem:
    """F(z)_s = sum_{n,m} Q[s,n,m] z_n z_m + sum_n L[s,n] z_n, with Q symmetric in (n, m)."""

    Q: np.ndarray
    L: np.ndarray
    Qt: np.ndarray
    Lt: np.ndarray
    projection: ProjectionMatrix | None = None

    @property
    def n(self) -> int:
        return self.L.shape[0]

    @classmethod
    def zero(cls, n: int) -> "GalerkinSystem":
        q = np.zeros((n, n, n), dtype=complex)
        l = np.zeros((n, n), dtype=complex)
        return cls(q, l, q, l)

    def F(self, z) -> np.ndarray:
        """Apply F to z of shape (..., N)."""
        z = np.asarray(z)
        return np.einsum("snm,...n,...m->...s", self.Q, z, z) + z @ self.L.T

    def quadratic(self, z) -> np.ndarray:
        z = np.asarray(z)
        return np.einsum("snm,...n,...m->...s", self.Q, z, z)

    def jacobian(self, z) -> np.ndarray:
        """dF_s/dz_n at z, shape (..., N, N) indexed [s, n]."""
        z = np.asarray(z)
        return 2.0 * np.einsum("snm,...m->...sn", self.Q, z) + self.L


def build_system(basis: BasisSet, projection: ProjectionMatrix, n_quad: int = 64) -> GalerkinSystem:
    k, w = gauss_legendre(basis.k_lo, basis.k_hi, n_quad)
    psi, dpsi = basis.psi(k), basis.dpsi(k)
    # d/dk of k^2 (v')^2 gives 2k (v')^2 + 2k^2 v' (d/dk v'); the second
    # product pairs psi_n' with psi_m (one factor carries no k-derivative)
    qt = (np.einsum("k,sk,nk,mk->snm", 2.0 * k**2 * w, psi, dpsi, psi)
          + np.einsum("k,sk,nk,mk->snm", 2.0 * k * w, psi, psi, psi))
    qt = 0.5 * (qt + qt.transpose(0, 2, 1))
    lt = (np.einsum("k,sk,nk->sn", -2j * k * w, psi, dpsi)
          + np.einsum("k,sk,nk->sn", -2j * w, psi, psi))
    qt = qt.astype(complex)
    minv = projection.inverse
    q = np.einsum("as,snm->anm", minv, qt)
    l = minv @ lt
    return GalerkinSystem(q, l, qt, lt, projection)


def write_system_csv(path, system: GalerkinSystem) -> None:
    """Dump Q and L as ``tensor,s,n,m,re,im`` rows (m = -1 for L)."""
    lines = ["tensor,s,n,m,re,im"]
    for (s, n, m), v in np.ndenumerate(system.Q):
        lines.append(f"Q,{s},{n},{m},{v.real:.17g},{v.imag:.17g}")
    for (s, n), v in np.ndenumerate(system.L):
        lines.append(f"L,{s},{n},-1,{v.real:.17g},{v.imag:.17g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def residual(y, system: GalerkinSystem, grid: SpatialGrid) -> np.ndarray:
    """y'' + F(y') at every mesh node, shape (nx+1, N).

    Interior nodes use central stencils; the end nodes use the one-sided
    second-order ones of :class:`SpatialGrid`.
    """
    y = np.asarray(y)
    return grid.d2 @ y + system.F(grid.d1 @ y)


@dataclass(frozen=True)
class Recovery:
    x: np.ndarray
    v: np.ndarray
    beta: np.ndarray  # complex; its real part feeds postprocess_c

    @property
    def c(self) -> np.ndarray:
        return 1.0 + self.beta.real


def recover_c(y, basis: BasisSet, grid: SpatialGrid, k_eval: float | None = None) -> Recovery:
    """beta = -(v'' + k^2 (v')^2 - 2ik v') for v = sum_n y_n psi_n(k_eval)."""
    k = basis.k_lo if k_eval is None else float(k_eval)
    if not basis.k_lo - 1e-12 <= k <= basis.k_hi + 1e-12:
        raise ValueError(f"k_eval={k} outside [{basis.k_lo}, {basis.k_hi}]")
    v = np.asarray(y) @ basis.psi(k)
    dv, ddv = grid.d1 @ v, grid.d2 @ v
    beta = -(ddv + k**2 * dv**2 - 2j * k * dv)
    return Recovery(grid.x.copy(), v, beta)


def postprocess_c(beta, rho: float = 0.5, mode: str = "max", window: int = 5) -> np.ndarray:
    """Average Re beta, keep only the strong part, return c = 1 + beta there.

    ``max`` keeps nodes with beta >= rho max(beta); ``min`` first drops
    beta < -1 (it would make c negative) and keeps beta <= rho min(beta).
    """
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    if mode not in ("max", "min"):
        raise ValueError(f"mode must be 'max' or 'min', got {mode!r}")
    b = moving_average(np.real(np.asarray(beta)), window)
    if mode == "max":
        top = b.max()
        if top <= 0.0:
            return np.ones_like(b)
        keep = b >= rho * top
    else:
        b = np.where(b < -1.0, 0.0, b)
        bottom = b.min()
        if bottom >= 0.0:
            return np.ones_like(b)
        keep = b <= rho * bottom
    return np.where(keep, 1.0 + b, 1.0)
