"""Exception hierarchy shared by the library and the CLI exit-code mapping."""


class ArgumentError(ValueError):
    """Invalid argument: bad shape, out-of-range parameter, inconsistent spec."""


class FormatError(ValueError):
    """Malformed matrix, signal, trace or config file."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        prefix = ":".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class NumericalError(ArithmeticError):
    """Iteration cap reached without convergence, or an ill-conditioned system."""


class NotDetectedError(Exception):
    """The true support was never fully detected within a trace.

    Raised by trace verification; this is an outcome distinct from a bound
    violation, since the post-detection bounds have nothing to apply to.
    """
