class QMSError(Exception):
    """Base class for all errors raised by qms."""


class ValidationError(QMSError, ValueError):
    """Bad input: sizes, indices, parameters or flag combinations."""


class NumericalError(QMSError, ArithmeticError):
    """A numerical routine produced a non-finite or non-converged result."""
