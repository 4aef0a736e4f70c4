"""
Simulated backscattering data and the exponential basis
=======================================================

A point source at x0 = -1 illuminates a slab (0, 1) holding one small
inclusion.  We record the ratio g0 = u(0, k) / u0(0, k) over k in
[0.5, 1.5] and look at the orthonormal basis used to expand in k.
"""

# %%
import numpy as np

from convexify1d import FrequencyGrid, MediumProfile, boundary_data, build_basis
from convexify1d.basis import build_projection_matrix

# %%
# An inclusion of dielectric constant 5 centred at x = 0.4, width 0.1.
medium = MediumProfile.step(5.0, 0.4)
grid = FrequencyGrid(0.5, 1.5, 100)
g0 = boundary_data(medium, grid)
for m in (0, 25, 50, 75, 100):
    print(f"k={grid.nodes[m]:.2f}  g0={g0.values[m]:.4f}")

# %%
# Without an inclusion the ratio is exactly one.
flat = boundary_data(MediumProfile.homogeneous(), grid)
print("max |g0 - 1| for c = 1:", np.abs(flat.values - 1).max())

# %%
# Orthonormal basis psi_n(k) = p_n(t) e^t.  The matrix of (psi_n', psi_m)
# comes out upper triangular with unit diagonal, hence invertible.
basis = build_basis(0.5, 1.5, 4)
print("Gram error:", np.abs(basis.gram() - np.eye(4)).max())
M = build_projection_matrix(basis)
print(np.round(M.matrix, 4))
print("det M =", M.det)
