"""Carleman-weighted Tikhonov functional and its discrete gradient.

    J(y) = e^{2 lam} T(|y'' + F(y')|^2 e^{-2 lam x}) + alpha ||y||_{H^2}^2

with T the composite trapezoid rule on the mesh.  Admissible states carry
the boundary triple y(0)=f0, y'(0)=f1, y'(1)=0; the optimizers work on the
free nodes only (see :class:`~convexify1d.mesh.BoundaryConstraint`).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .galerkin import GalerkinSystem, SeedFunction, residual
from .mesh import BoundaryConstraint, SpatialGrid


@dataclass(frozen=True)
class ObjectiveParams:
    lam: float = 3.0
    alpha: float = 0.05
    R: float | None = None

    def __post_init__(self):
        if self.lam < 1.0:
            raise ValueError(f"lambda must be >= 1, got {self.lam}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.R is not None and self.R <= 0:
            raise ValueError("R must be positive")


def carleman_weight(x, lam: float) -> np.ndarray:
    """e^{2 lam} e^{-2 lam x}; exceeds 1 on [0, 1)."""
    return np.exp(2.0 * lam * (1.0 - np.asarray(x, dtype=float)))


def h2_norm(y, grid: SpatialGrid) -> float:
    return float(np.sqrt(grid.h2_norm_sq(y)))


@dataclass(frozen=True)
class Objective:
    """J bound to one system, mesh and boundary triple."""

    system: GalerkinSystem
    grid: SpatialGrid
    params: ObjectiveParams
    constraint: BoundaryConstraint

    @cached_property
    def _cw(self) -> np.ndarray:
        # trapezoid weights folded into the Carleman weight
        return (carleman_weight(self.grid.x, self.params.lam) * self.grid.weights)[:, None]

    def value(self, y) -> float:
        y = np.asarray(y)
        r = residual(y, self.system, self.grid)
        data = float(np.sum(self._cw * np.abs(r) ** 2))
        return data + self.params.alpha * self.grid.h2_norm_sq(y)

    def gradient(self, y) -> np.ndarray:
        """Complex G with dJ = Re sum conj(G) dy over all nodes and components."""
        y = np.asarray(y)
        g = self.grid
        dy = g.d1 @ y
        r = g.d2 @ y + self.system.F(dy)
        wr = 2.0 * self._cw * r
        jac = self.system.jacobian(dy)                      # (nodes, s, n)
        back = np.einsum("jsn,js->jn", jac.conj(), wr)      # Jac^H (w r) per node
        return g.d2.T @ wr + g.d1.T @ back + 2.0 * self.params.alpha * (g.h2_gram @ y)

    # packed real vector of free unknowns
    def fg(self, v) -> tuple[float, np.ndarray]:
        y = self.constraint.to_state(v)
        gz = self.constraint.matrix.T @ self.gradient(y)
        return self.value(y), np.concatenate([gz.real.ravel(), gz.imag.ravel()])

    def f(self, v) -> float:
        return self.value(self.constraint.to_state(v))


def make_objective(system: GalerkinSystem, grid: SpatialGrid, params: ObjectiveParams,
                   f0=None, f1=None) -> Objective:
    if f0 is None:
        bc = BoundaryConstraint.homogeneous(grid, system.n)
    else:
        bc = BoundaryConstraint(grid, np.asarray(f0, dtype=complex), np.asarray(f1, dtype=complex))
    return Objective(system, grid, params, bc)


def eval_J(y, params: ObjectiveParams, system: GalerkinSystem, grid: SpatialGrid) -> float:
    return make_objective(system, grid, params).value(y)


def grad_J(y, params: ObjectiveParams, system: GalerkinSystem, grid: SpatialGrid,
           constraint: BoundaryConstraint | None = None) -> np.ndarray:
    """Real gradient over the free unknowns, packed as [Re, Im].

    The eliminated nodes (those carrying the boundary triple) are held
    fixed, so they do not appear.
    """
    if constraint is None:
        constraint = BoundaryConstraint.homogeneous(grid, system.n)
    obj = Objective(system, grid, params, constraint)
    gz = constraint.matrix.T @ obj.gradient(y)
    return np.concatenate([gz.real.ravel(), gz.imag.ravel()])


def eval_Phi(p, seed: SeedFunction, params: ObjectiveParams, system: GalerkinSystem) -> float:
    """J(p + f) for p carrying the zero boundary triple."""
    return eval_J(np.asarray(p) + seed.admissible(), params, system, seed.grid)


def project_ball(p, R: float, grid: SpatialGrid) -> np.ndarray:
    """Radial projection onto the closed H^2 ball of radius R."""
    p = np.asarray(p)
    norm = h2_norm(p, grid)
    if norm <= R * (1.0 + 1e-12):  # rounding slack keeps the map idempotent
        return p
    return p * (R / norm)


def convexity_probe(y1, y2, obj: Objective) -> float:
    """J(y2) - J(y1) - <J'(y1), y2 - y1>."""
    y1, y2 = np.asarray(y1), np.asarray(y2)
    g = obj.gradient(y1)
    return obj.value(y2) - obj.value(y1) - float(np.real(np.sum(g.conj() * (y2 - y1))))


def random_admissible_perturbation(rng: np.random.Generator, grid: SpatialGrid, n: int,
                                   radius: float, degree: int = 5) -> np.ndarray:
    """Smooth random p with the zero boundary triple and ||p||_{H^2} = radius.

    p = x^2 q(x) - s x^3 / 3 with q a random complex polynomial: the x^2
    factor kills p(0) and p'(0), and s = p'(1) before correction zeroes the
    slope at 1.  The constraint projection then makes the triple hold for the
    discrete stencils too (an O(h^2) change at three nodes).
    """
    P = np.polynomial.polynomial
    x = grid.x
    coef = rng.standard_normal((degree + 1, n)) + 1j * rng.standard_normal((degree + 1, n))
    full = np.vstack([np.zeros((2, n)), coef])                # x^2 q(x)
    slope = P.polyval(1.0, P.polyder(full)).ravel()
    full[3] -= slope / 3.0
    p = P.polyval(x, full).T                                  # (nodes, n)
    p = BoundaryConstraint.homogeneous(grid, n).project(p)
    return p * (radius / h2_norm(p, grid))
