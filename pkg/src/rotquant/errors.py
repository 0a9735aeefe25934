"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: usage errors are argparse's
business (exit 2), `DataError` exits 3, `NumericalError` exits 4 and
`InvarianceError` exits 5.
"""


class RotquantError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class DataError(RotquantError):
    """Malformed or inconsistent input data (files, shapes, parameters)."""

    exit_code = 3


class NumericalError(RotquantError):
    """Numerically invalid state: NaN/Inf inputs, failed factorizations."""

    exit_code = 4


class InvarianceError(RotquantError):
    """The folded toy network deviated from the unfolded one beyond tolerance."""

    exit_code = 5


class UnsupportedDimensionError(DataError):
    """No Hadamard construction available for the requested dimension."""


class ShapeError(DataError):
    """Operand shapes do not line up."""


class BadMagicError(DataError):
    """File does not start with the expected magic bytes."""


class TruncatedFileError(DataError):
    """File ends before the declared payload does."""


class FormatVersionError(DataError):
    """File declares a container version this build does not read."""


class NotOrthogonalError(NumericalError):
    """Matrix fails the orthogonality check beyond tolerance."""


class DegenerateInputError(NumericalError):
    """Input row/token is degenerate for the requested operation (e.g. zero norm)."""
