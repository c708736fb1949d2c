"""Exception types shared across the package."""

from __future__ import annotations


class NumericalError(ValueError):
    """Base class for failures of the numerical pipeline (CLI exit code 3)."""


class DegenerateInputError(NumericalError):
    """An explanatory variable carries no information (e.g. it is constant)."""

    def __init__(self, message: str, step: int | None = None):
        if step is not None:
            message = f"time step {step}: {message}"
        super().__init__(message)
        self.step = step


class RankDeficiencyError(NumericalError):
    """The design matrix does not have full column rank."""

    def __init__(self, rank: int, columns: int, step: int | None = None):
        message = f"design matrix is rank deficient (rank {rank} < {columns} columns)"
        if step is not None:
            message = f"time step {step}: {message}"
        super().__init__(message)
        self.rank = rank
        self.columns = columns
        self.step = step


class ConfigError(ValueError):
    """One or more configuration fields failed validation (CLI exit code 2)."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = list(errors)
