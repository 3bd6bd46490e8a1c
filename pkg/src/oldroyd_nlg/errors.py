"""Exception types shared across the package."""


class AssemblyError(RuntimeError):
    """Raised when finite element assembly meets degenerate geometry."""


class SolveFailure(RuntimeError):
    """Direct solve failed or produced an unacceptable residual."""

    def __init__(self, message, condition_estimate=None):
        super().__init__(message)
        self.condition_estimate = condition_estimate


class DimensionAmbiguityError(RuntimeError):
    """Null-space dimension could not be decided from the singular-value gap."""

    def __init__(self, message, gap_ratio=None):
        super().__init__(message)
        self.gap_ratio = gap_ratio


class DimensionMismatchError(RuntimeError):
    """Computed subspace dimension disagrees with the expected one."""

    def __init__(self, expected, got):
        super().__init__(f"expected dimension {expected}, got {got}")
        self.expected = expected
        self.got = got


class ConditioningError(RuntimeError):
    """A Gram matrix is too ill-conditioned to invert reliably."""


class StepFailure(RuntimeError):
    """A time step did not converge.  Carries the step index and residual."""

    def __init__(self, step, time, residual, message=""):
        detail = message or "nonlinear iteration did not converge"
        super().__init__(
            f"step {step} (t={time:.6g}): {detail} (residual {residual:.3e})"
        )
        self.step = step
        self.time = time
        self.residual = residual


class ExportError(RuntimeError):
    """Report or field export failed."""
