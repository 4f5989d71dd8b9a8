"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line front end can map
failures onto stable process statuses without inspecting messages.
"""


class SpadpError(Exception):
    exit_code = 1
    kind = "error"


class ConfigError(SpadpError, ValueError):
    exit_code = 2
    kind = "config"


class DimensionError(SpadpError, ValueError):
    exit_code = 2
    kind = "dimension"


class SymmetryError(SpadpError, ValueError):
    exit_code = 2
    kind = "symmetry"


class RankError(SpadpError, ArithmeticError):
    """Rank-deficient least-squares problem; ``rank`` is the numerical rank found."""

    exit_code = 3
    kind = "rank"

    def __init__(self, message, rank, required):
        super().__init__(message)
        self.rank = rank
        self.required = required


class InsufficientDataError(RankError):
    exit_code = 3
    kind = "insufficient_data"


class ResonanceError(SpadpError, ArithmeticError):
    """Singular Kronecker (Lyapunov) system: eigenvalues with lambda_i + lambda_j = 0."""

    exit_code = 4
    kind = "resonance"


class StabilizationError(SpadpError, ValueError):
    exit_code = 4
    kind = "not_stabilizing"


class ConvergenceError(SpadpError, RuntimeError):
    exit_code = 4
    kind = "non_convergence"

    def __init__(self, message, residual=None, trace=None):
        super().__init__(message)
        self.residual = residual
        self.trace = trace


class InstabilityError(SpadpError, FloatingPointError):
    """State norm crossed the blow-up bound (or a stage went non-finite) at ``time``."""

    exit_code = 5
    kind = "instability"

    def __init__(self, message, time):
        super().__init__(message)
        self.time = time


class DivergenceError(InstabilityError):
    kind = "divergence"


class UnreachableBoundaryError(SpadpError, ArithmeticError):
    exit_code = 6
    kind = "unreachable_boundary"
