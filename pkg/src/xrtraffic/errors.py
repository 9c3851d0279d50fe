"""Exception hierarchy shared by all xrtraffic modules."""


class XRTrafficError(Exception):
    """Base class for every error raised by the toolkit."""


class RangeError(XRTrafficError, ValueError):
    pass


class InsufficientDataError(XRTrafficError, ValueError):
    pass


class StabilityError(XRTrafficError, ValueError):
    pass


class EmptyStreamError(XRTrafficError, ValueError):
    pass


class DegenerateSeriesError(XRTrafficError, ValueError):
    pass


class ConfigurationError(XRTrafficError, ValueError):
    pass


class MissingMetadataError(XRTrafficError, ValueError):
    pass


class SingularDesignError(XRTrafficError, ValueError):
    pass


class ParseError(XRTrafficError, ValueError):
    """Malformed input file. Carries the path and 1-based line number."""

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        self.message = message
        where = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{where}: {message}")


class ConvergenceError(XRTrafficError, RuntimeError):
    """Iterative solver ran out of budget. ``final_loss`` is the last objective value."""

    def __init__(self, message, final_loss, theta=None):
        self.final_loss = final_loss
        self.theta = theta
        super().__init__(f"{message} (final loss {final_loss:.6g})")
