"""Model-free composite control for time-varying two-point boundary problems."""
from .errors import (
    ConfigError,
    ConvergenceError,
    DimensionError,
    InstabilityError,
    InsufficientDataError,
    RankError,
    SpadpError,
    UnreachableBoundaryError,
)
from .systems import BoundarySpec, LTVSystem, RegulatorProblem, freeze, mass_example
from .riccati import boundary_gains, kleinman_solve
from .learner import learn_gain, make_excitation
from .bvp_oracle import solve_bvp
from .composite import build_controller, simulate_composite, approx_error

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "DimensionError",
    "InstabilityError",
    "InsufficientDataError",
    "RankError",
    "SpadpError",
    "UnreachableBoundaryError",
    "BoundarySpec",
    "LTVSystem",
    "RegulatorProblem",
    "freeze",
    "mass_example",
    "boundary_gains",
    "kleinman_solve",
    "learn_gain",
    "make_excitation",
    "solve_bvp",
    "build_controller",
    "simulate_composite",
    "approx_error",
]
