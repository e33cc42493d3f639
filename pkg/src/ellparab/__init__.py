"""Half-space transmission problems coupling an elliptic and a parabolic operator.

The package builds the per-frequency solution operators of the model
problem, checks their multiplier properties numerically, solves the problem
on a torus times half-line grid and sweeps the a priori estimates in ``q``.
"""
from .estimates import EstimateReport, estimate_sweep, random_boundary_data
from .grids import BoxGrid, GridField, GridSpec, load_field_csv, save_field_csv
from .halfspace import (FullSolution, ZeroModeError, extend_boundary, hilbert_one_sided, manufactured_solution,
                        oracle_error, oracle_solve, solve_full, solve_homogeneous, volevich_T)
from .multipliers import M1_ell, M2_matrices, MichlinGrid, C_blocks, estimate_lambda0, michlin_scan
from .norms import lp_norm, param_norm, seminorm, sobolev_norm, trace_norm
from .ode_core import (basic_solutions, coupling_set, fundamental_solution, residue_Y, solve_ode_transmission,
                       wronskian_det)
from .symbols import (Covariable, ProblemSpec, RootError, SectorError, biharmonic_heat2, check_ellipticity,
                      check_N_ellipticity, compute_roots, hyperbolic, laplace_heat, random_spec)

__version__ = "0.1.0"
