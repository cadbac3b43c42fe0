"""
Rational in x or not
====================

The Wronskian of (x^m f, ..., f, x^m, ..., 1) vanishes exactly when f is a
ratio of polynomials of degree <= m.  The detector searches m = 0, 1, ...
and then fits and checks the coefficients.
"""
import math

from parmonodromy import LinearSystem, SampledFunction, detect_rational_in_x, invariance_rationality_harness
from parmonodromy import monodromy_rep
from parmonodromy.jets import exp

v = detect_rational_in_x(lambda x, t: (t[0] * x + 1) / (x - t[0]), grid=[(0.3,), (0.8,)])
print(v, "a(x), b(x) at t=0.3:", v.coefficients[0])

print(detect_rational_in_x(lambda x, t: exp(x) / (1 + x * x), 5))

series = SampledFunction.from_series([1 / math.factorial(k) for k in range(20)])
print("degree-19 polynomial, searched up to 5:", detect_rational_in_x(series, 5))

#####################################################################
# Monodromy-invariant expressions in the solution are rational in x.
# For B0/x - B0/(x-1) with B0 = diag(1/3, -1/3), z11 z22 = 1.

B0 = [[1 / 3, 0], [0, -1 / 3]]
s = LinearSystem.fuchsian([0, 1], [B0, [[-1 / 3, 0], [0, 1 / 3]]])
md = monodromy_rep(s, grid=[(0.0,)])
rep = invariance_rationality_harness(s, md, lambda Z: Z[0, 0] * Z[1, 1])
print("z11*z22 invariant:", rep["invariant"], "rational:", rep["rational"], "m:", rep["m"])
rep = invariance_rationality_harness(s, md, lambda Z: Z[0, 0])
print("z11 invariant:", rep["invariant"])
