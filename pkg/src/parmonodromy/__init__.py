"""Numerical tools for parameterized linear ODE systems dY/dx = A(x, t) Y.

Modules
-------
param_algebra   rational functions of the parameters t
series          truncated matrix Laurent series
systems         rational systems, gauge transforms, singularity classification
normal_form     constant reduction, shearing, local solutions, growth probes
continuation    path integration and monodromy matrices
rh_solver       Fuchsian systems realizing prescribed monodromy
rationality     Wronskian-based rationality detection
cli             command-line front end
"""
from .continuation import MonodromyData, Path, PathPlan, check_product_relation, integrate_along, monodromy_rep
from .errors import MonodromyError
from .normal_form import (
    FuchsLocalSystem,
    LocalSolution,
    local_solution,
    moderate_growth_check,
    reduce_to_constant,
    shearing,
    sylvester_step,
)
from .param_algebra import ParamMatrix, ParamRational, Poly, parse_param
from .rationality import SampledFunction, detect_rational_in_x, invariance_rationality_harness, wronskian
from .rh_solver import RHSolution, RHTarget, matrix_log_tracked, rh_roundtrip_verify, rh_solve
from .series import MatrixLaurentSeries, invert
from .systems import (
    GaugeTransform,
    LinearSystem,
    RationalMatrix,
    SingularityKind,
    apply_gauge,
    classify_singularity,
    verify_gauge,
)

__version__ = "0.1.0"
