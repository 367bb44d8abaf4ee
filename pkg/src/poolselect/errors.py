"""Exception hierarchy shared by the library and the command line front end."""

from typing import Optional, Sequence


class PoolSelectError(Exception):
    """Base class for every error raised by poolselect."""


class DatasetValidationError(PoolSelectError, ValueError):
    """A dataset, CSV file or testing-accuracy value is malformed."""

    def __init__(self, message: str, line_numbers: Optional[Sequence[int]] = None):
        self.line_numbers = list(line_numbers) if line_numbers else []
        if self.line_numbers:
            shown = ", ".join(str(n) for n in self.line_numbers[:10])
            if len(self.line_numbers) > 10:
                shown += ", ..."
            message = f"{message} (line {shown})"
        super().__init__(message)


class ConfigurationError(PoolSelectError, ValueError):
    """Invalid configuration file contents or flag combination."""


class NumericalError(PoolSelectError, ArithmeticError):
    """A numerical routine could not produce a trustworthy result."""


class DegenerateDesignError(NumericalError):
    """A weighted Gram or information matrix is not positive definite."""


class EmptyModelError(NumericalError):
    """An operation needs at least one selected covariate."""


class InvalidContrastError(NumericalError):
    """A contrast vector is zero, non-finite or has the wrong length."""


class InconsistentEventError(NumericalError):
    """The observed statistic lies outside its own truncation region."""


class TailDegeneracyError(NumericalError):
    """A truncated normal probability collapsed to 0/0."""


class ConvergenceError(NumericalError):
    """An iterative fit stopped without meeting its tolerance."""

    def __init__(self, message: str, trace: Optional[Sequence[float]] = None):
        self.trace = list(trace) if trace is not None else []
        super().__init__(message)


class StudyInterrupted(PoolSelectError):
    """A Monte Carlo study was stopped by a shutdown request."""
