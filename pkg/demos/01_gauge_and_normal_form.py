"""
Gauge transforms and local normal forms
=======================================

A double pole need not mean an irregular singularity.  Here a 2x2 system
with a double pole at the moving point x = t is transformed into a system
with a simple pole, and the local solution (x - t)^Atilde is read off.
"""
import numpy as np

from parmonodromy import (
    FuchsLocalSystem,
    LinearSystem,
    RationalMatrix,
    apply_gauge,
    classify_singularity,
    local_solution,
    verify_gauge,
)

#####################################################################
# The system and the gauge
# ------------------------
# Matrices are given deepest pole order first; entries may be strings in t.

A = LinearSystem(2, [("t", [[[0, -3], [0, 0]], [["t", 0], [0, "t-2"]]])])
P = RationalMatrix(2, [("t", [[[0, -1], [0, 0]], [[1, 0], [0, 0]]])], [[[0, 0], [0, "-t"]], [[0, 0], [0, 1]]])

print("A:", A)
print("without a witness:", classify_singularity(A, 0, (0.2,)).value)
print("with P as witness:", classify_singularity(A, 0, (0.2,), witness=P).value)

#####################################################################
# B = P' P^-1 + P A P^-1 has a single simple pole with residue (t-1) I.

B = apply_gauge(A, P)
print("B pole orders:", B.pole_orders())
print("residue at t=0.2:\n", B.poles[0].principal[0].eval((0.2,)).real)

samples = [(2.0, (0.0,)), (0.3 + 1j, (0.1,)), (-1.0, (-0.4,))]
print("gauge residual:", verify_gauge(A, B, P, samples))

#####################################################################
# Local solution at the simple pole
# ---------------------------------
# Y = Q(x) (x - t)^Atilde.  For B the series part is trivial and
# Atilde = (t - 1) I.

sol = local_solution(FuchsLocalSystem.from_system(B, 0, N=10, t=(0.5,)))
print("Atilde at t=0.5:\n", sol.Atilde.real)
x = 0.5 + 0.25j
print("Y(x) vs (x-t)^(t-1):", sol.evaluate(x)[0, 0], (x - 0.5) ** -0.5)

#####################################################################
# A resonant example needs shearing first: eigenvalues 0 and 1 of A_0.

rng = np.random.default_rng(0)
F = FuchsLocalSystem.from_coefficients([np.diag([0.0, 1.0])] + [0.3 * rng.normal(size=(2, 2)) for _ in range(10)])
sol = local_solution(F, N=10)
print("shear iterations:", sol.shear.iterations, "exponents:", sol.shear.S_exponents)
print("Atilde eigenvalues:", np.round(np.linalg.eigvals(sol.Atilde), 8))
