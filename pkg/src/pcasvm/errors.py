"""Exception hierarchy shared by every module."""


def _rebuild(cls, message, state):
    exc = Exception.__new__(cls)
    Exception.__init__(exc, message)
    exc.__dict__.update(state)
    return exc


class PcaSvmError(Exception):
    """Base class for all errors raised by the package."""

    def __reduce__(self):
        # subclasses take structured args; pickle by message + attributes
        return _rebuild, (self.__class__, str(self), self.__dict__)


class ParseError(PcaSvmError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(PcaSvmError, ValueError):
    pass


class DomainError(PcaSvmError, ValueError):
    pass


class AlignmentError(PcaSvmError):
    def __init__(self, instrument_id, date):
        self.instrument_id = instrument_id
        self.date = date
        super().__init__(
            f"cannot forward-fill {instrument_id!r} at {date}: "
            "no prior observation available"
        )


class DegenerateDataError(PcaSvmError):
    pass


class DegenerateTrainingError(PcaSvmError):
    pass


class NonConvergenceError(PcaSvmError):
    def __init__(self, message, diagnostics=None):
        self.diagnostics = dict(diagnostics or {})
        super().__init__(message)


class DivergenceError(PcaSvmError):
    pass


class NumericalError(PcaSvmError):
    """Internal numerical failure (e.g. a covariance that is not PSD)."""


class WindowAssemblyError(PcaSvmError):
    def __init__(self, message, first_usable_date=None):
        self.first_usable_date = first_usable_date
        super().__init__(message)


class BacktestError(PcaSvmError):
    def __init__(self, iteration, cause):
        self.iteration = iteration
        self.cause = cause
        super().__init__(f"iteration {iteration}: {cause}")
