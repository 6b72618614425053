"""Discrete Nahm data for SU(N) hyperbolic monopoles.

Type data and invariants, lattice fields and residuals, equivariant ADHM
assembly and monads, a Levenberg-Marquardt solver, and the rational map and
boundary line bundles of a solution.
"""

from .errors import NahmError, NoConvergence, ValidationError
from .typedata import MonopoleType, derive_type, kfrak, site_dims, small_monad_dims, weight_profile
from .lattice import (
    GaugeTransform,
    NahmSolution,
    check_stability,
    complex_residual,
    gauge_invariants,
    gauge_transform,
    random_init,
    real_residual,
    total_residual,
)
from .adhm import assemble, disassemble, equivariance_check, fibre, monad_check, monad_maps, weight_restrict
from .solver import SolverOptions, SolveReport, refine, solve, su2_k1_oracle
from .ratmap import (
    boundary_flag_map,
    chern_integral,
    curvature_density,
    flag_at,
    normalize,
    rational_coefficients,
)
from .serialization import read_solution, write_solution

__version__ = "0.1.0"
