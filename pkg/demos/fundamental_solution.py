"""Walk through the frequency-side solution of the Laplace/heat transmission pair.

At xi' = 3, q = 4 the decaying solutions are e^{-3x} (elliptic side) and
e^{-5x} (parabolic side, beta = sqrt(xi'^2 + q^2)).  The script builds both,
the coupling matrix Psi, and checks the boundary normalization.
"""
import numpy as np

from ellparab.ode_core import basic_solutions, coupling_set, fundamental_solution, transmission_boundary_rows
from ellparab.symbols import Covariable, check_ellipticity, laplace_heat

spec = laplace_heat()
print(check_ellipticity(spec))

c = Covariable(np.array([3.0]), 4.0)
Y = basic_solutions(spec, c)
x = np.linspace(0, 1, 5)
print("x      :", x)
print("Y1(x)  :", np.round(Y.Y1[0](x).real, 6))
print("Y2(x)  :", np.round(Y.Y2[0](x), 6))

cs = coupling_set(Y, c)
print("Psi    :\n", np.round(cs.psi, 12))
print("direct vs Schur route:", cs.route_error)

omega = fundamental_solution(Y, cs)
rows = transmission_boundary_rows(spec.m)
B = np.array([rows.apply(omega[0][j], omega[1][j]) for j in range(2 * spec.m)]).T
print("B omega at the interface:\n", np.round(B, 12))
