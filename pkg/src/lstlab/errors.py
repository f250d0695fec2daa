"""Exception types shared across the package."""

from __future__ import annotations


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class InsufficientLiquidityError(ValueError):
    """A swap would drain more than the pool holds."""


class SolverError(ArithmeticError):
    """A root finder failed to reach its tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (last relative residual {residual:.3e})")
        self.residual = residual


class IngestionError(ValueError):
    """Input files are malformed or inconsistent."""

    def __init__(self, message: str, path: str | None = None,
                 line: int | None = None, column: str | None = None):
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column!r}")
        prefix = ": ".join([", ".join(where)]) + ": " if where else ""
        super().__init__(prefix + message)
        self.path = path
        self.line = line
        self.column = column
