"""Error hierarchy shared by the library and the command line.

Each error carries a machine-readable class (``E_CONFIG`` and friends) and
the process exit status the CLI uses when the error escapes a command.
"""


class EconselError(Exception):
    code = "E_NUMERIC"
    exit_status = 4


class ConfigError(EconselError):
    code = "E_CONFIG"
    exit_status = 2


class CapacityError(EconselError):
    code = "E_CAPACITY"
    exit_status = 2


class DataError(EconselError):
    code = "E_DATA"
    exit_status = 3


class MissingInputError(DataError):
    """A referenced input file does not exist (detected at startup)."""

    exit_status = 2


class ParseError(DataError):
    pass


class DegeneratePredictorError(DataError):
    pass


class NumericError(EconselError):
    code = "E_NUMERIC"
    exit_status = 4


class CollinearityError(NumericError):
    def __init__(self, message, bits=None):
        super().__init__(message)
        self.bits = bits


class InsufficientDataError(NumericError):
    pass


class ShapeError(NumericError):
    pass


class VerificationError(EconselError):
    code = "E_VERIFY"
    exit_status = 1


class FoldError(ConfigError):
    pass


class DesignError(ConfigError):
    pass
