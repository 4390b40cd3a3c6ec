"""Exception types shared across the toolkit.

Everything derives from QoskitError so callers (and the CLI) can catch
toolkit failures in one place while still distinguishing the common cases.
"""


class QoskitError(Exception):
    """Base class for all toolkit errors."""


class DomainError(QoskitError, ValueError):
    """An argument is outside the domain an operation is defined on."""


class InstabilityError(DomainError):
    """Offered load meets or exceeds capacity where stability is required."""


class UndefinedJitterError(DomainError):
    """Jitter is undefined: with no traffic there are no consecutive packets."""


class InfeasibleBudgetError(QoskitError, ValueError):
    """No point in the search bracket satisfies the jitter budget.

    Carries the best (smallest) jitter attainable on the bracket and the
    parameter value where it was attained.
    """

    def __init__(self, message: str, attained_min: float, at_value: float):
        super().__init__(message)
        self.attained_min = attained_min
        self.at_value = at_value


class InsufficientDataError(DomainError):
    """Not enough samples to compute the requested statistic."""


class ConstantSeriesError(DomainError):
    """A correlation was requested against a constant series."""


class AccountingError(DomainError):
    """Counters are mutually inconsistent (e.g. delivered exceeds offered)."""


class InconsistentGroupError(QoskitError, ValueError):
    """Summaries with mismatched parameters were merged into one group."""


class EmptyRunError(DomainError):
    """A simulation was requested with nothing to simulate."""


class EmptyTraceError(DomainError):
    """A trace synthesis was requested with zero duration."""


class TraceParseError(QoskitError, ValueError):
    """A log file failed validation. Carries the 1-based line number."""

    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason
