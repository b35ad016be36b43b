"""Exception types shared across the toolkit."""


class ApDiffError(Exception):
    """Base class for all toolkit errors."""


class InvalidLattice(ApDiffError):
    """Raised when a frequency lattice cannot be built from the inputs."""


class LatticeMismatch(ApDiffError):
    """Raised when a binary operation mixes incompatible lattices."""


class InvalidValue(ApDiffError):
    """Raised when coefficients violate a representation invariant."""


class UnsupportedOrder(ApDiffError):
    """Raised when a norm order cannot be computed for the given input."""


class LowerBoundViolated(ApDiffError):
    """Raised when a pointwise lower-bound precondition fails on the grid."""


class SolverError(ApDiffError):
    """Base class for failures that abort a solver run (CLI exit code 3)."""


class MarginViolated(SolverError):
    """Jacobian determinant dropped to or below the required floor."""

    def __init__(self, grid_min: float, eps_min: float, message: str = ""):
        self.grid_min = float(grid_min)
        self.eps_min = float(eps_min)
        super().__init__(
            message
            or f"determinant grid minimum {grid_min:.6e} is not above eps_min {eps_min:.6e}"
        )


class NoConvergence(SolverError):
    """An iteration stopped before reaching its residual tolerance."""

    def __init__(self, iterations: int, residual: float, message: str = ""):
        self.iterations = int(iterations)
        self.residual = float(residual)
        super().__init__(
            message
            or f"no convergence after {iterations} iterations, residual {residual:.6e}"
        )


class BeyondBlowup(SolverError):
    """A requested time is too close to, or past, the breakdown time."""

    def __init__(self, t_requested: float, t_blowup: float):
        self.t_requested = float(t_requested)
        self.t_blowup = float(t_blowup)
        super().__init__(
            f"t = {t_requested:.6g} exceeds the allowed fraction of the breakdown time "
            f"{t_blowup:.6g}"
        )


class StepFailure(SolverError):
    """A time step could not be completed; carries the failure time and cause.

    Integrators attach the last successfully completed state (or None) as
    the checkpoint attribute so callers can persist it before exiting.
    """

    def __init__(self, t: float, cause: str):
        self.t = float(t)
        self.cause = cause
        self.checkpoint = None
        super().__init__(f"step failed at t = {t:.6g}: {cause}")


class SchemaError(ApDiffError):
    """Raised when serialized data or a config file violates the schema."""


class ConfigError(ApDiffError):
    """Raised for unusable experiment configurations (CLI exit code 2)."""
