"""Exception hierarchy shared by the library and the CLI.

Every error carries the process exit code the CLI reports for it:
0 success, 2 configuration/domain error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Optional

if TYPE_CHECKING:
    from sqzlab.models import FitResult


class SqzlabError(ValueError):
    """Base class for all sqzlab errors."""

    exit_code: int = 1


class ConfigError(SqzlabError):
    """Invalid or infeasible configuration."""

    exit_code = 2


class ConfigSchemaError(ConfigError):
    """Configuration document does not match the schema."""

    def __init__(self, message: str, key_path: str = "", line: Optional[int] = None) -> None:
        self.key_path = key_path
        self.line = line
        location = key_path or "<root>"
        if line is not None:
            location = f"{location} (line {line})"
        super().__init__(f"{location}: {message}")


class StabilityError(ConfigError):
    """Integration step or run length cannot resolve the cavity dynamics."""


class DomainError(SqzlabError):
    """A physical parameter lies outside its allowed range."""

    exit_code = 2


class InvalidCouplingError(DomainError):
    """Quality factors are not consistent with a passive cavity."""


class AboveThresholdError(DomainError):
    """Pump ratio at or above the oscillation threshold."""


class MissingResponseError(DomainError):
    """Wavelength outside the tabulated SHG spectral response."""


class DataError(SqzlabError):
    """Input data cannot support the requested operation."""

    exit_code = 3


class InsufficientDataError(DataError):
    """Too few samples or points."""


class ColumnMismatchError(DataError):
    """CSV header does not match the expected columns."""

    def __init__(self, expected: list[str], found: list[str]) -> None:
        self.expected = expected
        self.found = found
        missing = [c for c in expected if c not in found]
        unexpected = [c for c in found if c not in expected]
        super().__init__(
            f"column mismatch: expected {expected}, found {found}; "
            f"missing {missing}, unexpected {unexpected}"
        )


class TraceFormatError(DataError):
    """File does not follow the strict CSV format."""

    def __init__(self, message: str, line: Optional[int] = None) -> None:
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


class InconsistentDataError(DataError):
    """Measurements contradict each other."""


class AmbiguousLineshapeError(DataError):
    """Curve has no single extremum to measure."""


class RankError(DataError):
    """Design matrix is rank deficient."""


class UnderdeterminedFitError(DataError):
    """Data cannot identify all model parameters."""


class NumericalError(SqzlabError):
    """Numerical procedure failed."""

    exit_code = 4


class DivergenceError(NumericalError):
    """Simulated system has no stationary state."""


class FitConvergenceError(NumericalError):
    """Optimizer did not converge; ``best`` holds the best-so-far result when available."""

    def __init__(self, message: str, best: Optional[FitResult] = None) -> None:
        self.best = best
        super().__init__(message)
