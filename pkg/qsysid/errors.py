"""Exceptions and warnings raised by qsysid."""


class QsysidError(Exception):
    """Base class for every error raised by the package."""


class DomainError(QsysidError, ValueError):
    pass


class ConfigError(DomainError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class OutOfRangeError(DomainError):
    def __init__(self, value):
        super().__init__(f"value {value!r} lies outside every quantizer interval")
        self.value = value


class InvalidLevelError(DomainError):
    """One or more output values are not levels of the quantizer.

    ``rows`` holds the 0-based sample indices of the offending values.
    """

    def __init__(self, rows, levels=()):
        self.rows = [int(r) for r in rows]
        self.levels = list(levels)
        shown = ", ".join(str(r + 1) for r in self.rows[:20])
        more = "" if len(self.rows) <= 20 else f" (+{len(self.rows) - 20} more)"
        super().__init__(f"unknown quantizer level at t = {shown}{more}")


class DegenerateIntervalError(DomainError):
    pass


class InsufficientDataError(DomainError):
    def __init__(self, samples, order, message=None):
        self.samples = samples
        self.order = order
        super().__init__(
            message or f"need more samples than impulse-response length (N={samples}, n={order})"
        )


class InsufficientDrawsError(DomainError):
    pass


class UndefinedScoreError(DomainError):
    pass


class FactorizationError(QsysidError, ArithmeticError):
    def __init__(self, message, **params):
        self.params = params
        if params:
            detail = ", ".join(f"{k}={v!r}" for k, v in params.items())
            message = f"{message} ({detail})"
        super().__init__(message)


class DegenerateSignalError(QsysidError, ArithmeticError):
    pass


class DegeneratePriorError(QsysidError, ArithmeticError):
    pass


class DegenerateResidualError(QsysidError, ArithmeticError):
    pass


class EstimationFailure(QsysidError):
    pass


class EmptySummaryError(QsysidError):
    pass


class ChainError(QsysidError):
    def __init__(self, message, iteration):
        super().__init__(f"iteration {iteration}: {message}")
        self.iteration = iteration


class BudgetExceededError(ChainError):
    def __init__(self, iteration, elapsed, cap):
        super().__init__(f"took {elapsed:.3f} s, cap is {cap:.3f} s", iteration)
        self.elapsed = elapsed
        self.cap = cap


class IdentifiabilityWarning(UserWarning):
    pass
