"""Orthonormal basis psi_n(k) = p_n(t) e^t, t = (k - k_lo)/(k_hi - k_lo).

Gram-Schmidt runs on the monomials t^n under the weight e^{2t} on [0, 1],
using the closed-form moments

    I_0 = (e^2 - 1) / 2,    I_j = (e^2 - j I_{j-1}) / 2,

in extended precision so the basis itself carries no quadrature error.
The forward recurrence loses roughly log10(j!/2^j) digits, hence the
working precision.
"""
from __future__ import annotations

from dataclasses import dataclass

import mpmath
import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import BasisConstructionError

N_MAX = 10
ORTHO_TOL = 1e-10


def gauss_legendre(a: float, b: float, n: int = 64) -> tuple[np.ndarray, np.ndarray]:
    t, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * t + 0.5 * (b + a), 0.5 * (b - a) * w


def exp2_moments(count: int, dps: int = 60) -> list:
    """I_j = int_0^1 t^j e^{2t} dt for j < count, as mpmath numbers."""
    with mpmath.workdps(dps):
        e2 = mpmath.e ** 2
        moments = [(e2 - 1) / 2]
        for j in range(1, count):
            moments.append((e2 - j * moments[-1]) / 2)
        return moments


def _gram_schmidt_coefficients(n: int, dps: int = 60) -> np.ndarray:
    with mpmath.workdps(dps):
        moments = exp2_moments(2 * n, dps)

        def inner(p, q):
            return mpmath.fsum(p[i] * q[j] * moments[i + j]
                               for i in range(n) for j in range(n) if p[i] and q[j])

        done = []
        for deg in range(n):
            v = [mpmath.mpf(0)] * n
            v[deg] = mpmath.mpf(1)
            proj = [inner(v, q) for q in done]  # classical: project the raw monomial
            for r, q in zip(proj, done):
                v = [a - r * b for a, b in zip(v, q)]
            norm = mpmath.sqrt(inner(v, v))
            done.append([a / norm for a in v])
        return np.array([[float(a) for a in p] for p in done])


@dataclass(frozen=True)
class BasisSet:
    k_lo: float
    k_hi: float
    coeffs: np.ndarray  # row n: ascending coefficients of p_n on [0, 1]

    @property
    def n(self) -> int:
        return self.coeffs.shape[0]

    @property
    def width(self) -> float:
        return self.k_hi - self.k_lo

    def _t(self, k):
        return (np.asarray(k, dtype=float) - self.k_lo) / self.width

    def phi(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.array([npoly.polyval(t, c) for c in self.coeffs]) * np.exp(t)

    def psi(self, k) -> np.ndarray:
        """Values psi_n(k), shape (N,) + shape(k)."""
        return self.phi(self._t(k)) / np.sqrt(self.width)

    def dpsi(self, k) -> np.ndarray:
        t = self._t(k)
        vals = np.array([npoly.polyval(t, c) + npoly.polyval(t, npoly.polyder(c))
                         for c in self.coeffs])
        return vals * np.exp(t) / self.width ** 1.5

    def gram(self, n_quad: int = 64) -> np.ndarray:
        k, w = gauss_legendre(self.k_lo, self.k_hi, n_quad)
        p = self.psi(k)
        return (p * w) @ p.T


def build_basis(k_lo: float, k_hi: float, n: int) -> BasisSet:
    if not 1 <= n <= N_MAX:
        raise ValueError(f"basis size must be in 1..{N_MAX}, got {n}")
    if not 0 < k_lo < k_hi:
        raise ValueError("need 0 < k_lo < k_hi")
    basis = BasisSet(float(k_lo), float(k_hi), _gram_schmidt_coefficients(n))
    err = np.abs(basis.gram() - np.eye(n)).max()
    if err > ORTHO_TOL:
        raise BasisConstructionError(
            f"orthogonality lost ({err:.2e} > {ORTHO_TOL:g}) at N={n}; "
            "re-orthogonalize or lower N")
    return basis


@dataclass(frozen=True)
class ProjectionMatrix:
    """M_N with entries a_mn = (psi_n', psi_m), and its inverse."""

    matrix: np.ndarray
    inverse: np.ndarray

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.matrix))


def build_projection_matrix(basis: BasisSet, n_quad: int = 64) -> ProjectionMatrix:
    k, w = gauss_legendre(basis.k_lo, basis.k_hi, n_quad)
    m = (basis.psi(k) * w) @ basis.dpsi(k).T  # [m, n] = (psi_n', psi_m)
    try:
        inv = np.linalg.inv(m)  # LU with partial pivoting
    except np.linalg.LinAlgError as exc:
        raise BasisConstructionError(f"M_N is singular: {exc}") from None
    if not np.all(np.isfinite(inv)):
        raise BasisConstructionError("M_N inverse is not finite")
    return ProjectionMatrix(m, inv)


def write_basis_csv(path, basis: BasisSet, projection: ProjectionMatrix | None = None) -> None:
    """Dump p_n coefficients (and optionally M_N) as ``kind,row,col,value`` rows."""
    lines = ["kind,row,col,value"]
    for i, row in enumerate(basis.coeffs):
        lines += [f"p,{i},{j},{v:.17g}" for j, v in enumerate(row)]
    if projection is not None:
        for i, row in enumerate(projection.matrix):
            lines += [f"M,{i},{j},{v:.17g}" for j, v in enumerate(row)]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
