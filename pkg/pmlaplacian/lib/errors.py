"""Exception types raised by the pmlaplacian library."""

from __future__ import annotations


class DimensionError(ValueError):
    """Operand shapes do not match."""


class DomainError(ValueError):
    """A power mean was requested outside its domain (zero entry with p <= 0)."""


class ParameterError(ValueError):
    """A model parameter is outside its admissible range."""


class SamplingError(ValueError):
    """A random graph could not be drawn without isolated vertices."""


class UsageError(ValueError):
    """Command-line options that cannot be combined or are missing."""


class SingularMatrixError(ValueError):
    """A matrix power is undefined because the matrix is (numerically) singular.

    Attributes:
        lambda_min: Smallest eigenvalue of the offending matrix.
    """

    def __init__(self, message: str, lambda_min: float) -> None:
        super().__init__(message)
        self.lambda_min = lambda_min


class RankDeficientError(ValueError):
    """Orthonormalization lost a column to round-off (deflation).

    Attributes:
        column: Index of the first column that became dependent.
    """

    def __init__(self, message: str, column: int) -> None:
        super().__init__(message)
        self.column = column


class IsolatedVertexError(ValueError):
    """A layer has vertices with zero degree.

    Attributes:
        vertices: Indices of the isolated vertices.
    """

    def __init__(self, message: str, vertices: list[int]) -> None:
        super().__init__(message)
        self.vertices = vertices


class MatrixMarketError(ValueError):
    """A Matrix Market file is malformed.

    Attributes:
        line: 1-based line number where the problem was found.
    """

    def __init__(self, message: str, line: int) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


class KrylovError(RuntimeError):
    """The projected Lanczos matrix lost positive definiteness."""
