"""Exception hierarchy shared by all modules."""


class ModelError(Exception):
    """Base class for every error raised by the package."""


class InvalidParameter(ModelError, ValueError):
    """A configuration or model field is out of range.

    The offending field name is kept on ``.field`` so the CLI can echo it.
    """

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class NoPositiveEquilibrium(ModelError):
    pass


class WindowOutOfGrid(ModelError):
    pass


class NegativeField(ModelError):
    pass


class StabilityViolation(ModelError):
    pass


class GridExhausted(ModelError):
    """The moving window came within one kernel radius of the master grid edge."""

    def __init__(self, t, g, h):
        super().__init__(f"window [{g:.6g}, {h:.6g}] reached the grid margin at t={t:.6g}")
        self.t = t
        self.g = g
        self.h = h


class NoConvergence(ModelError):
    def __init__(self, message, increment=None):
        super().__init__(message)
        self.increment = increment


class SandwichMismatch(ModelError):
    pass


class RegimeError(ModelError):
    pass


class MissingDiagnostics(ModelError):
    pass


class InconsistentEvidence(ModelError):
    pass


class UndecidedRun(ModelError):
    def __init__(self, mu):
        super().__init__(f"classification undecided at mu={mu:.17g}; extend t_max or refine")
        self.mu = mu


class StepError(ModelError):
    """Wraps an error raised inside a time step with the time at which it happened."""

    def __init__(self, t, cause):
        super().__init__(f"at t={t:.17g}: {cause}")
        self.t = t
        self.cause = cause
