"""
Error hierarchy for the destination similarity pipeline.

Every error carries the process exit code the management commands
report for it: 1 internal, 2 input, 3 domain.
"""


class DestinationSimilarityError(Exception):
    exit_code = 1


class InputError(DestinationSimilarityError):
    """Unreadable, malformed or empty input data."""
    exit_code = 2


class LogFormatError(InputError):
    """A search log that does not look like a search log at all."""

    def __init__(self, message, line_number=None):
        self.line_number = line_number
        if line_number is not None:
            message = f"{message} (first offending line: {line_number})"
        super().__init__(message)


class EmptyWindowError(InputError):
    """No usable records in a requested market/time window."""


class DomainError(DestinationSimilarityError):
    exit_code = 3


class UnknownDestinationError(DomainError):

    def __init__(self, destination):
        self.destination = destination
        super().__init__(f"Unknown destination: {destination}")


class UnknownMeasureError(DomainError):

    def __init__(self, measure):
        self.measure = measure
        super().__init__(f"Unknown similarity measure: {measure}")


class EvaluationError(DestinationSimilarityError):
    """Inconsistent evaluation inputs, e.g. a period missing a measure."""
