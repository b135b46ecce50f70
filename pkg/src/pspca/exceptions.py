"""Exception hierarchy shared by all modules."""


class PSPCAError(Exception):
    """Base class for every error raised by pspca."""


class CSVParseError(PSPCAError, ValueError):
    """Malformed CSV input. ``row`` is the 0-based data row, ``column`` the
    0-based cell index when the problem is a single cell."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class EmptyDataError(PSPCAError, ValueError):
    pass


class DegenerateColumnError(PSPCAError, ValueError):
    pass


class ConvergenceError(PSPCAError, RuntimeError):
    """Iteration budget exhausted; ``best`` holds the last iterate."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class SingularMetricError(PSPCAError, ValueError):
    pass


class SingularBlockError(PSPCAError, ValueError):
    pass


class DegenerateComponentError(PSPCAError, ValueError):
    pass


class SizeError(PSPCAError, ValueError):
    pass


class FitAbortedError(PSPCAError, RuntimeError):
    """A fit stopped early; ``partial`` is the FitResult built so far."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
