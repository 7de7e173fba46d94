"""Exception hierarchy for carnotgg."""

from __future__ import annotations

from typing import Optional


class CarnotError(Exception):
    """Base class for every error raised by the library."""


class ShapeError(CarnotError, ValueError):
    """Point or array does not match the dimension of its algebra."""


class AlgebraError(CarnotError, ValueError):
    """Structure constants violate antisymmetry or the grading."""


class UnsupportedStepError(AlgebraError):
    """Nilpotency step beyond the hard-coded BCH truncation."""


class DomainError(CarnotError, ValueError):
    """Argument outside the domain of an operation (r <= 0, inner-set violation, ...)."""


class SupportError(DomainError):
    """Test function is not supported where the operation requires it."""


class QuadratureError(CarnotError, RuntimeError):
    """Quadrature rule could not be built or produced no admissible nodes."""


class BoundaryError(CarnotError, RuntimeError):
    """Boundary discretisation failed."""


class EmptyBoundaryError(BoundaryError):
    """The level set has no zero crossing inside the bounding box."""


class NonRegularLevelSetError(BoundaryError):
    """The level function has a (numerically) vanishing gradient on its zero set."""


class AlignmentError(CarnotError, ValueError):
    """Boundary patches of two domains do not share their samples."""


class ConfigError(CarnotError, ValueError):
    """Invalid scenario configuration; ``path`` names the offending field."""

    def __init__(
        self,
        message: str,
        path: str = "",
        line: Optional[int] = None,
        column: Optional[int] = None,
    ) -> None:
        self.path = path
        self.line = line
        self.column = column
        location = ""
        if line is not None:
            location = f" (line {line}, column {column})"
        prefix = f"{path}: " if path else ""
        super().__init__(f"{prefix}{message}{location}")


class PresetNotFoundError(ConfigError, KeyError):
    """Unknown preset name (group, domain, field, mollifier profile)."""

    def __str__(self) -> str:  # KeyError would otherwise quote the message
        return ConfigError.__str__(self)
