"""Exception hierarchy shared across the package."""


class FinslerError(Exception):
    """Base class for all package-specific errors."""


class DslSyntaxError(FinslerError):
    """Raised by the expression parser; carries the byte offset of the fault."""

    def __init__(self, message, offset):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnboundVariableError(FinslerError):
    """A variable required for evaluation has no binding."""

    def __init__(self, name):
        super().__init__(f"unbound variable '{name}'")
        self.name = name


class EvaluationDomainError(FinslerError):
    """Numeric evaluation left the domain of a subexpression.

    Carries the offending subexpression (as a string) and, for batched
    evaluation, the index of a sample that triggered the fault.
    """

    def __init__(self, reason, subexpr, sample_index=None):
        loc = "" if sample_index is None else f" (sample {sample_index})"
        super().__init__(f"{reason} in '{subexpr}'{loc}")
        self.subexpr = subexpr
        self.sample_index = sample_index


class DegenerateSampleError(FinslerError):
    """Sample has |y| below the degeneracy cutoff."""


class NotPositiveDefiniteError(FinslerError):
    """Fundamental tensor failed the positive-definiteness check."""

    def __init__(self, sample, detail=""):
        extra = f": {detail}" if detail else ""
        super().__init__(
            f"fundamental tensor not positive definite at x={sample.x}, y={sample.y}{extra}"
        )
        self.sample = sample


class NotEinsteinError(FinslerError):
    """Curvature scalar is not constant across samples within tolerance."""

    def __init__(self, t, spread, tolerance):
        super().__init__(
            f"curvature scalar not constant at t={t:g}: spread {spread:.3e} "
            f"exceeds tolerance {tolerance:.3e}"
        )
        self.t = t
        self.spread = spread
        self.tolerance = tolerance


class DomainExceededError(FinslerError):
    """Requested time is outside the interval where the flow family exists."""

    def __init__(self, t, critical_time):
        super().__init__(
            f"family undefined at t={t:g}: scale factor vanishes at t={critical_time:g}"
        )
        self.t = t
        self.critical_time = critical_time


class StepUnderflowError(FinslerError):
    """Conformal factor hit zero or went negative during integration."""

    def __init__(self, t, factor):
        super().__init__(f"conformal factor underflow at t={t:g} (value {factor:.3e})")
        self.t = t
        self.factor = factor


class IntegrationBlowupError(FinslerError):
    """Flow-map integration produced a non-finite state."""

    def __init__(self, t):
        super().__init__(f"flow integration produced non-finite state near t={t:g}")
        self.t = t


class ConfigError(FinslerError):
    """Malformed configuration file or inconsistent run options."""
