"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid configuration, sizes or arguments."""


class ShapeError(ValueError):
    """Array or parameter vector has the wrong length or shape."""


class NumericInputError(ValueError):
    """Non-finite numeric input."""


class InputError(ValueError):
    """Labels or predictions outside the domain a loss expects."""


class PreconditionError(ValueError):
    pass


class KinematicsError(ValueError):
    """Jet four-momentum cannot be rescaled or boosted."""


class DegeneracyError(KinematicsError):
    """Gram-Schmidt input vectors are (numerically) linearly dependent."""


class ParseError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
