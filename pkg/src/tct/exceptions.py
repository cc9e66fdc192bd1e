"""Exception hierarchy shared by every stage of the pipeline.

The CLI maps these onto process exit codes, so the split between
argument/configuration problems, bad data and numerical failure matters.
"""


class TCTError(Exception):
    """Base class for all errors raised by this package."""


class ArgumentError(TCTError, ValueError):
    """An argument is out of its documented range."""


class ConfigurationError(TCTError, ValueError):
    """A configuration (scene, pipeline or solver setup) cannot be honoured."""


class DataError(TCTError, ValueError):
    """Input data violates an invariant (non-finite, wrong shape, single class)."""


class FormatError(DataError):
    """A file does not follow its declared on-disk format."""


class NumericError(TCTError, ArithmeticError):
    """A numerical procedure diverged or produced non-finite values."""
