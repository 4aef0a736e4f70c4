"""From measured g0 to the Galerkin boundary data, plus target localization.

``q0 = log(g0) / k^2`` and ``q1 = g1 / (g0 k^2)`` with a logarithm that is
continuous in k: principal value at the first node, then node-to-node
unwrapping.  Location is estimated from a quasi-reversibility fit at the
top wave number and the data are then moved toward the target.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import DataError, LocationEstimateError
from .forward import ComplexSamples
from .mesh import BoundaryConstraint, SpatialGrid

# after unwrapping adjacent phases differ by at most pi by construction; a
# jump above this warns that the k grid under-resolves the phase
PHASE_JUMP_WARN = 0.5 * np.pi
QRM_GAMMA = 55.0
PROPAGATION_MARGIN = 0.1
# boundary values below this are rounding noise of unit data: no target
ZERO_DATA_TOL = 1e-12


class PhaseResolutionWarning(UserWarning):
    pass


@dataclass(frozen=True)
class LogData:
    q0: ComplexSamples
    q1: ComplexSamples

    def __post_init__(self):
        if self.q0.grid != self.q1.grid:
            raise ValueError("q0 and q1 live on different grids")
        if not (np.all(np.isfinite(self.q0.values)) and np.all(np.isfinite(self.q1.values))):
            raise DataError("non-finite boundary data")

    @property
    def grid(self):
        return self.q0.grid


@dataclass(frozen=True)
class LocationEstimate:
    x: np.ndarray
    r: np.ndarray
    x_est: float
    x_tar: float

    @property
    def propagate(self) -> bool:
        return self.x_est > PROPAGATION_MARGIN


def _check_nonzero(g: ComplexSamples) -> None:
    bad = np.flatnonzero(np.abs(g.values) == 0)
    if bad.size:
        m = int(bad[0])
        raise DataError(f"g vanishes at node {m} (k={g.k[m]:.6g}); log undefined")
    if not np.all(np.isfinite(g.values)):
        m = int(np.flatnonzero(~np.isfinite(g.values))[0])
        raise DataError(f"non-finite sample at node {m} (k={g.k[m]:.6g})")


def complex_log_unwrapped(g: ComplexSamples) -> ComplexSamples:
    """log g with the phase continued from the principal value at the first node."""
    _check_nonzero(g)
    phase = np.unwrap(np.angle(g.values))
    if phase.size > 1:
        jumps = np.abs(np.diff(phase))
        if jumps.max() > PHASE_JUMP_WARN:
            m = int(np.argmax(jumps))
            warnings.warn(
                f"phase of g changes by {jumps[m]:.3f} rad between nodes {m} and {m + 1}; "
                "the k grid may be too coarse", PhaseResolutionWarning, stacklevel=2)
    return g.replace(np.log(np.abs(g.values)) + 1j * phase)


def compute_q(g0: ComplexSamples, g1: ComplexSamples) -> LogData:
    if g0.grid != g1.grid:
        raise ValueError("g0 and g1 live on different grids")
    log_g = complex_log_unwrapped(g0)
    k2 = g0.k ** 2
    return LogData(g0.replace(log_g.values / k2), g1.replace(g1.values / (g0.values * k2)))


def qrm_system(q0: complex, q1: complex, gamma: float, grid: SpatialGrid):
    """Normal equations for min 1/2 (||r''||^2 + gamma ||r||^2) over the free nodes.

    Returns the constraint map and the real symmetric matrix H and complex
    right-hand side ``rhs`` with ``H z = rhs``.
    """
    bc = BoundaryConstraint(grid, np.array([q0], dtype=complex), np.array([q1], dtype=complex))
    a, b = bc.matrix, bc.offset[:, 0]
    W = np.diag(grid.weights)
    d2a = grid.d2 @ a
    H = d2a.T @ W @ d2a + gamma * a.T @ W @ a
    rhs = -(d2a.T @ W @ (grid.d2 @ b) + gamma * a.T @ W @ b)
    return bc, H, rhs


def qrm_objective(r, gamma: float, grid: SpatialGrid) -> float:
    r = np.asarray(r)
    return 0.5 * (grid.integrate(np.abs(grid.d2 @ r) ** 2) + gamma * grid.integrate(np.abs(r) ** 2))


def estimate_location(q0_top: complex, q1_top: complex, gamma: float = QRM_GAMMA,
                      nx: int = 50) -> LocationEstimate:
    """Quasi-reversibility fit of r = v(., k_hi) and the dip of Im r."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    grid = SpatialGrid(nx)
    bc, H, rhs = qrm_system(q0_top, q1_top, gamma, grid)
    try:
        cho = sla.cho_factor(H)
    except np.linalg.LinAlgError:
        raise LocationEstimateError(
            f"quasi-reversibility system singular at gamma={gamma:g}; increase gamma") from None
    z = sla.cho_solve(cho, rhs)
    r = bc.embed(z[:, None])[:, 0]
    if max(abs(q0_top), abs(q1_top)) < ZERO_DATA_TOL:
        x_est = 0.0  # no data, no target
    else:
        interior = np.arange(1, nx)
        x_est = float(grid.x[interior[np.argmin(r.imag[interior])]])
    return LocationEstimate(grid.x.copy(), r, x_est, max(x_est - PROPAGATION_MARGIN, 0.0))


def propagate_data(g0: ComplexSamples, x_tar: float) -> ComplexSamples:
    """Move the observation point from 0 to x_tar through the homogeneous layer.

    With u = D1 e^{ikx} + D2 e^{-ikx} on (0, x_tar), D1 = u0(0)(g0 - 1) and
    D2 = u0(0), the ratio u(x_tar)/u0(x_tar) collapses to
    (g0 - 1) e^{2ik x_tar} + 1.
    """
    if not 0.0 <= x_tar < 1.0:
        raise ValueError(f"x_tar={x_tar} outside [0, 1)")
    return g0.replace((g0.values - 1.0) * np.exp(2j * g0.k * x_tar) + 1.0)
