"""
Monodromy along loops
=====================

Loop matrices of a Fuchsian system with three poles, the product relation
M1 M2 M3 = I (infinity is regular because the residues sum to zero), and the
local exponents exp(2 pi i lambda) for the eigenvalues lambda of B_i.
"""
import numpy as np

from parmonodromy import check_product_relation, monodromy_rep
from parmonodromy.continuation import ordered_product
from parmonodromy.rh_solver import random_fuchsian

s = random_fuchsian(11)
grid = [(0.0,), (0.3,)]
md = monodromy_rep(s, grid=grid, tol=1e-10)

print("base point:", md.plan.base_point)
print("loop order (pole indices):", md.plan.pole_indices)
for t, mats in zip(md.grid, md.matrices):
    print(f"t = {t[0].real:.2f}  ||M1 M2 M3 - I|| = {np.linalg.norm(ordered_product(mats) - np.eye(2)):.2e}")
print("product relation (max over grid):", check_product_relation(md, s))

#####################################################################
# Each loop matrix is conjugate to exp(2 pi i B_i) only in its spectrum.

for i, M in zip(md.plan.pole_indices, md.matrices[0]):
    B = s.poles[i].principal[0].eval((0.0,))
    print(i, np.round(np.sort_complex(np.linalg.eigvals(M)), 8),
          np.round(np.sort_complex(np.exp(2j * np.pi * np.linalg.eigvals(B))), 8))

#####################################################################
# CSV output is flat and plot-ready.

print(md.to_csv().splitlines()[:3])
