"""Exceptions for polysfem."""

from __future__ import annotations


class PolySfemError(Exception):
    """Base class for all polysfem errors."""


class MeshError(PolySfemError):
    """Invalid mesh, degenerate geometry or failed mesh generation."""


class InpError(PolySfemError):
    """Input deck cannot be read or written."""


class InpParseError(InpError):
    """Input deck violates the keyword grammar."""

    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")


class BasisError(PolySfemError):
    """Shape functions cannot be evaluated at the requested point."""


class SmoothingError(PolySfemError):
    """Smoothing cell construction or boundary integration failed."""


class MaterialError(PolySfemError):
    """Material parameters outside the admissible range."""


class ConstraintError(PolySfemError):
    """Inconsistent Dirichlet constraints."""


class SolverError(PolySfemError):
    """Linear solve failed or violated the residual contract."""

    def __init__(
        self, message: str, residual_history: list[float] | None = None
    ) -> None:
        self.residual_history = list(residual_history or [])
        super().__init__(message)


class BenchmarkError(PolySfemError):
    """Analytical solution evaluated outside its domain or inconsistent."""


class ConfigError(PolySfemError):
    """Invalid run configuration."""
