class FlcError(Exception):
    """
    Base class for every error raised by the toolkit
    """
    exit_code = 2


class ValidationError(FlcError):
    """
    Input or option failed a precondition check (CLI exit code 1)
    """
    exit_code = 1


class PointSetError(ValidationError):
    pass


class WindowError(ValidationError):
    pass


class ParseError(ValidationError):
    def __init__(self, message: str, line: int = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ComputationError(FlcError):
    """
    A well-formed request that cannot be computed (CLI exit code 2)
    """
    exit_code = 2


class CapacityError(ComputationError):
    pass


class WindowTooSmallError(ComputationError):
    pass


class PreconditionError(ComputationError):
    pass


class DegenerateEnsembleError(ComputationError):
    pass


class ConvergenceError(ComputationError):
    pass


class RuleError(ValidationError):
    pass
