"""miadmm: multi-convex inequality-constrained ADMM with runtime certificates.

A generic block-splitting engine with exact convex subproblem solvers,
per-iteration convergence certificates, application problem builders, and a
benchmark CLI (``miadmm-bench``).
"""

from . import diagnostics, engine, numerics, problems, subsolvers
from .diagnostics import (
    DescentConstants,
    IterationRecord,
    RhoTooSmall,
    augmented_lagrangian,
    check_sufficient_descent,
    descent_constants,
    rate_proxy,
    summability_check,
    update_u,
)
from .engine import (
    BlockContext,
    BlockSpec,
    Custom,
    DenseCoupling,
    ProblemSpec,
    Quadratic,
    SmoothTerm,
    SolveReport,
    SolverConfig,
    SolverState,
    StackSelector,
    Status,
    Zero,
    has_converged,
    primal_residual,
    run,
    step_norm_sq,
    sweep_blocks,
    update_dual,
    update_z,
)
from .numerics import NotPositiveDefinite, gram, matrix, solve_spd, vector
from .subsolvers import (
    FIXED_ZERO,
    FREE,
    NON_NEGATIVE,
    NON_POSITIVE,
    BisectionFailed,
    CoordConstraint,
    MaxSweepsExceeded,
    QuadSubproblem,
    cd_solve_quadratic,
    frob_ball_solve,
    scalar_coordinate_min,
)

__version__ = "0.1.0"
