"""Exception types shared across the package."""


class PronmixError(Exception):
    pass


class ParseError(PronmixError):
    """A dataset file line could not be decoded."""

    def __init__(self, line_number, message):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class ValidationError(PronmixError):
    """A record violates a structural invariant."""

    def __init__(self, record_id, field, message):
        super().__init__(f"record {record_id!r}, field {field!r}: {message}")
        self.record_id = record_id
        self.field = field


class UndefinedRateError(PronmixError):
    """An error rate has an empty denominator."""
