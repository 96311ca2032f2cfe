"""Shared exception types mapped to CLI exit codes."""


class ValidationError(ValueError):
    """Bad input: wrong shape, depth mismatch, unsupported configuration."""


class DepthMismatchError(ValidationError):
    pass


class DegenerateRectangleError(ValidationError):
    pass


class UnsupportedSignatureError(ValidationError):
    pass


class InsufficientHeadroomError(ValidationError):
    pass


class WindowOverflowError(ValidationError):
    pass


class EvaluationAtJumpError(ValidationError):
    pass


class NonConvergenceError(RuntimeError):
    """Iterative solver failed to converge; carries the last iterate bound."""

    def __init__(self, message, last_estimate=None):
        super().__init__(message)
        self.last_estimate = last_estimate
