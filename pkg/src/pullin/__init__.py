"""Coupled membrane/electrostatic-potential pull-in solver.

Solves the electric potential on the deformation-dependent region between a
ground plate and an elastic membrane (mapped to a fixed rectangle), coupled to
static, overdamped, and damped-hyperbolic membrane equations; traces
bifurcation curves and locates static and dynamic pull-in voltages.
"""

from .core import (
    BracketError,
    Deflection,
    Grid,
    InconclusiveError,
    InvalidConfigError,
    InvalidGridError,
    NoConvergenceError,
    NoSolutionError,
    Params,
    Potential,
    PullinError,
    QuenchedStateError,
    Tolerances,
    first_derivative,
    second_derivative,
)
from .dynamics import HEAT, WAVE, DynState, Outcome, evolve, find_dynamic_pullin, step_heat, step_wave
from .potential import (
    OperatorCoefficients,
    apply_operator,
    boundary_flux,
    operator_coefficients,
    solve_potential,
    untransform_potential,
)
from .statics import (
    LOWER,
    UPPER,
    Branch,
    StationaryState,
    bifurcation_curve,
    find_static_pullin,
    shoot_deflection,
    solve_stationary,
)
from .limits import (
    SpringParams,
    small_aspect_evolve,
    small_aspect_potential,
    small_aspect_pullin,
    small_aspect_static,
    spring_simulate,
)

__version__ = "0.1.0"

__all__ = [
    "BracketError", "Branch", "Deflection", "DynState", "Grid", "HEAT",
    "InconclusiveError", "InvalidConfigError", "InvalidGridError", "LOWER",
    "NoConvergenceError", "NoSolutionError", "OperatorCoefficients",
    "Outcome", "Params", "Potential", "PullinError", "QuenchedStateError",
    "SpringParams", "StationaryState", "Tolerances", "UPPER", "WAVE",
    "apply_operator", "bifurcation_curve", "boundary_flux", "evolve",
    "find_dynamic_pullin", "find_static_pullin", "first_derivative",
    "operator_coefficients", "second_derivative", "shoot_deflection",
    "small_aspect_evolve", "small_aspect_potential", "small_aspect_pullin",
    "small_aspect_static", "solve_potential", "solve_stationary",
    "spring_simulate", "step_heat", "step_wave", "untransform_potential",
]
