"""Uniform mesh on [0, 1], difference stencils and the boundary-triple map.

All x-derivatives in the package go through :class:`SpatialGrid` so that
the minimized residual, the H^2 norm and the recovered coefficient use the
same second-order stencils (central inside, one-sided at the ends).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .forward import trapezoid_weights


@dataclass(frozen=True)
class SpatialGrid:
    nx: int = 50

    def __post_init__(self):
        if self.nx < 4:
            raise ValueError("need nx >= 4")

    @property
    def h(self) -> float:
        return 1.0 / self.nx

    @cached_property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.nx + 1)

    @cached_property
    def weights(self) -> np.ndarray:
        return trapezoid_weights(self.nx + 1, self.h)

    @cached_property
    def d1(self) -> np.ndarray:
        n, h = self.nx + 1, self.h
        d = np.zeros((n, n))
        i = np.arange(1, n - 1)
        d[i, i - 1] = -0.5 / h
        d[i, i + 1] = 0.5 / h
        d[0, :3] = np.array([-3.0, 4.0, -1.0]) / (2 * h)
        d[-1, -3:] = np.array([1.0, -4.0, 3.0]) / (2 * h)
        return d

    @cached_property
    def d2(self) -> np.ndarray:
        n, h = self.nx + 1, self.h
        d = np.zeros((n, n))
        i = np.arange(1, n - 1)
        d[i, i - 1] = d[i, i + 1] = 1.0 / h**2
        d[i, i] = -2.0 / h**2
        d[0, :4] = np.array([2.0, -5.0, 4.0, -1.0]) / h**2
        d[-1, -4:] = np.array([-1.0, 4.0, -5.0, 2.0]) / h**2
        return d

    @cached_property
    def h2_gram(self) -> np.ndarray:
        """Matrix G with ||y||_{H^2}^2 = y^H G y for one component."""
        W = np.diag(self.weights)
        return W + self.d1.T @ W @ self.d1 + self.d2.T @ W @ self.d2

    def integrate(self, f) -> float:
        return float(np.tensordot(self.weights, f, axes=(0, 0)).sum())

    def h2_norm_sq(self, y) -> float:
        y = np.asarray(y)
        if y.ndim == 1:
            y = y[:, None]
        dy, ddy = self.d1 @ y, self.d2 @ y
        return self.integrate(np.abs(y) ** 2 + np.abs(dy) ** 2 + np.abs(ddy) ** 2)


@dataclass(frozen=True)
class BoundaryConstraint:
    """Affine parametrization of states with y(0)=f0, y'(0)=f1, y'(1)=0.

    The discrete conditions use the one-sided stencils of
    :attr:`SpatialGrid.d1`.  Nodes 0, 1 and nx are eliminated; the free
    unknowns are nodes 2..nx-1 of every component.  A state of shape
    ``(nx+1, N)`` is written ``y = A z + b`` with ``z`` of shape
    ``(nx-2, N)``.
    """

    grid: SpatialGrid
    f0: np.ndarray
    f1: np.ndarray

    @classmethod
    def homogeneous(cls, grid: SpatialGrid, n: int) -> "BoundaryConstraint":
        z = np.zeros(n, dtype=complex)
        return cls(grid, z, z)

    @property
    def n(self) -> int:
        return len(self.f0)

    @property
    def n_free(self) -> int:
        return self.grid.nx - 2

    @cached_property
    def matrix(self) -> np.ndarray:
        nodes = self.grid.nx + 1
        a = np.zeros((nodes, self.n_free))
        a[2:nodes - 1] = np.eye(self.n_free)
        a[1] = a[2] / 4.0                       # from (-3y0 + 4y1 - y2)/2h = f1
        a[nodes - 1] = (4.0 * a[nodes - 2] - a[nodes - 3]) / 3.0  # y'(1) = 0
        return a

    @cached_property
    def offset(self) -> np.ndarray:
        b = np.zeros((self.grid.nx + 1, self.n), dtype=complex)
        f0 = np.asarray(self.f0, dtype=complex)
        f1 = np.asarray(self.f1, dtype=complex)
        b[0] = f0
        b[1] = (2.0 * self.grid.h * f1 + 3.0 * f0) / 4.0
        return b

    def embed(self, z) -> np.ndarray:
        return self.matrix @ z + self.offset

    def free_part(self, y) -> np.ndarray:
        return np.asarray(y)[2:self.grid.nx]

    def project(self, y) -> np.ndarray:
        """Overwrite the eliminated nodes so that y satisfies the triple."""
        return self.embed(self.free_part(y))

    def residuals(self, y) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        y = np.asarray(y)
        d1 = self.grid.d1
        return y[0] - self.f0, d1[0] @ y - self.f1, d1[-1] @ y

    # real packing of the free unknowns: [Re z, Im z] flattened
    def pack(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return np.concatenate([z.real.ravel(), z.imag.ravel()])

    def unpack(self, v) -> np.ndarray:
        half = v.size // 2
        shape = (self.n_free, self.n)
        return v[:half].reshape(shape) + 1j * v[half:].reshape(shape)

    def to_vector(self, y) -> np.ndarray:
        return self.pack(self.free_part(y))

    def to_state(self, v) -> np.ndarray:
        return self.embed(self.unpack(v))

    @cached_property
    def free_gram(self) -> np.ndarray:
        """H^2 Gram matrix restricted to the free unknowns (per component)."""
        a = self.matrix
        return a.T @ self.grid.h2_gram @ a
