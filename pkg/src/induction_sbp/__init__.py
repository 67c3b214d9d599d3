"""SBP-SAT finite difference solver for the 2D magnetic induction equations.

The package provides diagonal-norm summation-by-parts derivative operators
(second- and fourth-order interior accuracy), tensor-product grids with the
matching quadrature inner products, characteristic-inflow boundary penalties,
an implicit (backward Euler) time stepper for the induction system with a
prescribed velocity field, and experiment drivers for convergence and energy
stability studies.
"""

from .diagnostics import (
    ConvergenceRow,
    discrete_divergence,
    fit_rates,
    growth_constant,
    magnitude,
    rel_l2_percent,
)
from .grid2d import (
    Face,
    FaceSelector,
    Grid2D,
    ScalarField,
    VectorField2,
    ddx,
    ddy,
    face,
    make_grid,
    p_inner,
    p_norm,
    write_fields_csv,
)
from .model import (
    BoundaryMode,
    ProblemSpec,
    VelocityField,
    boundary_g,
    constant,
    exact_rotation,
    gaussian_hump,
    initial_data,
    rotation,
    sample_velocity,
    shear,
    velocity_from_name,
)
from .sat import PenaltySet, apply_sat, choose_sigmas
from .sbp1d import SbpOrder, SbpOperator1D, apply_d, build_sbp, min_points, p_inner_1d
from .stepper import (
    SolverError,
    SpatialOperator,
    StepControls,
    StepperState,
    Trajectory,
    apply_operator,
    assemble,
    backward_euler_step,
    convergence_dt,
    make_state,
    run,
)

__all__ = [
    "BoundaryMode",
    "ConvergenceRow",
    "Face",
    "FaceSelector",
    "Grid2D",
    "PenaltySet",
    "ProblemSpec",
    "SbpOperator1D",
    "SbpOrder",
    "ScalarField",
    "SolverError",
    "SpatialOperator",
    "StepControls",
    "StepperState",
    "Trajectory",
    "VectorField2",
    "VelocityField",
    "apply_d",
    "apply_operator",
    "apply_sat",
    "assemble",
    "backward_euler_step",
    "boundary_g",
    "build_sbp",
    "choose_sigmas",
    "constant",
    "convergence_dt",
    "ddx",
    "ddy",
    "discrete_divergence",
    "exact_rotation",
    "face",
    "fit_rates",
    "gaussian_hump",
    "growth_constant",
    "initial_data",
    "magnitude",
    "make_grid",
    "make_state",
    "min_points",
    "p_inner",
    "p_inner_1d",
    "p_norm",
    "rel_l2_percent",
    "rotation",
    "run",
    "sample_velocity",
    "shear",
    "velocity_from_name",
    "write_fields_csv",
]

__version__ = "0.1.0"
