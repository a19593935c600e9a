"""Exception hierarchy shared by all modules."""


class TTDError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(TTDError, ValueError):
    pass


class InvalidDelaySpacing(ConfigError):
    pass


class InvalidPilotSet(ConfigError):
    pass


class EmptyPilotSet(InvalidPilotSet):
    pass


class OddSubcarrierCount(ConfigError):
    pass


class NonDivisible(ConfigError):
    pass


class DelayTooSmall(ConfigError):
    pass


class IndexOutOfRange(TTDError, IndexError):
    pass


class CpViolation(TTDError, ValueError):
    """Channel plus TTD delay spread does not fit inside the cyclic prefix."""


class InvalidSpec(TTDError, ValueError):
    pass


class EmptyChannel(TTDError, ValueError):
    pass


class EmptyBlock(TTDError, ValueError):
    pass


class ParseError(TTDError, ValueError):
    """Malformed channel or configuration file.

    ``record`` is the zero-based data-record index (None when the error is
    not tied to one record) and ``field`` the offending column name.
    """

    def __init__(self, message, record=None, field=None):
        self.record = record
        self.field = field
        where = []
        if record is not None:
            where.append(f"record {record}")
        if field is not None:
            where.append(f"field {field!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
