"""Run configuration: voluptuous schemas, optional YAML file, settings dataclasses."""

from __future__ import annotations

import logging
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import voluptuous as vol
import yaml

from .const import (
    CONF_BOUNDARY_POINTS,
    CONF_DIRECT_MAX_DOFS,
    CONF_FACET_ORDER,
    CONF_INTERIOR_POINTS,
    CONF_LEVELS,
    CONF_LLOYD_ITERATIONS,
    CONF_LOAD_ORDER,
    CONF_METHOD,
    CONF_OUTPUT,
    CONF_PFEM_ORDER_2D,
    CONF_PFEM_ORDER_3D,
    CONF_PLOT,
    CONF_PROBLEM,
    CONF_SEED,
    CONF_TOLERANCE,
    CONF_VTK,
    CONF_WORKERS,
    DEFAULT_LLOYD_ITERATIONS,
    DEFAULT_SEED,
    DIRECT_SOLVE_MAX_DOFS,
    METHOD_BOTH,
    METHOD_CSFEM,
    METHODS,
    PFEM_ORDER_2D,
    PFEM_ORDER_3D,
    PROBLEMS,
    SMOOTHING_BOUNDARY_POINTS_2D,
    SMOOTHING_INTERIOR_POINTS_2D,
    SOLVER_TOLERANCE,
)
from .exceptions import ConfigError
from .smoothing import SmoothingRule

_LOGGER = logging.getLogger(__name__)

_POSITIVE_INT = vol.All(vol.Coerce(int), vol.Range(min=1))

SETTINGS_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_PFEM_ORDER_2D, default=PFEM_ORDER_2D): vol.All(
            vol.Coerce(int), vol.Range(min=1, max=40)
        ),
        vol.Optional(CONF_PFEM_ORDER_3D, default=PFEM_ORDER_3D): vol.All(
            vol.Coerce(int), vol.Range(min=1, max=20)
        ),
        vol.Optional(CONF_LOAD_ORDER, default=None): vol.Any(None, _POSITIVE_INT),
        vol.Optional(CONF_BOUNDARY_POINTS, default=SMOOTHING_BOUNDARY_POINTS_2D): vol.All(
            vol.Coerce(int), vol.Range(min=1, max=10)
        ),
        vol.Optional(CONF_INTERIOR_POINTS, default=SMOOTHING_INTERIOR_POINTS_2D): vol.All(
            vol.Coerce(int), vol.Range(min=1, max=10)
        ),
        vol.Optional(CONF_FACET_ORDER, default=2): vol.All(
            vol.Coerce(int), vol.Range(min=2, max=20)
        ),
        vol.Optional(CONF_TOLERANCE, default=SOLVER_TOLERANCE): vol.All(
            vol.Coerce(float), vol.Range(min=0.0, min_included=False, max=1e-6)
        ),
        vol.Optional(CONF_DIRECT_MAX_DOFS, default=DIRECT_SOLVE_MAX_DOFS): vol.All(
            vol.Coerce(int), vol.Range(min=0)
        ),
        vol.Optional(CONF_WORKERS, default=1): _POSITIVE_INT,
    }
)

RUN_SCHEMA = SETTINGS_SCHEMA.extend(
    {
        vol.Optional(CONF_PROBLEM, default=None): vol.Any(None, vol.In(PROBLEMS)),
        vol.Optional(CONF_METHOD, default=METHOD_CSFEM): vol.All(
            vol.Lower, vol.In((*METHODS, METHOD_BOTH))
        ),
        vol.Optional(CONF_LEVELS, default=None): vol.Any(None, _POSITIVE_INT),
        vol.Optional(CONF_LLOYD_ITERATIONS, default=DEFAULT_LLOYD_ITERATIONS): vol.All(
            vol.Coerce(int), vol.Range(min=0)
        ),
        vol.Optional(CONF_SEED, default=DEFAULT_SEED): vol.Coerce(int),
        vol.Optional(CONF_OUTPUT, default=None): vol.Any(None, str),
        vol.Optional(CONF_PLOT, default=None): vol.Any(None, str),
        vol.Optional(CONF_VTK, default=None): vol.Any(None, str),
    }
)


@dataclass(frozen=True)
class SolverSettings:
    """Numerical knobs shared by assembly, quadrature and the linear solve."""

    pfem_order_2d: int = PFEM_ORDER_2D
    pfem_order_3d: int = PFEM_ORDER_3D
    load_order: int | None = None
    smoothing_boundary_points: int = SMOOTHING_BOUNDARY_POINTS_2D
    smoothing_interior_points: int = SMOOTHING_INTERIOR_POINTS_2D
    smoothing_facet_order: int = 2
    solver_tolerance: float = SOLVER_TOLERANCE
    direct_solve_max_dofs: int = DIRECT_SOLVE_MAX_DOFS
    workers: int = 1

    def pfem_order(self, dim: int) -> int:
        return self.pfem_order_2d if dim == 2 else self.pfem_order_3d  # noqa: PLR2004

    def body_force_order(self, dim: int) -> int:
        """Load integrals use the PFEM order unless overridden, for either method."""
        return self.load_order or self.pfem_order(dim)

    @property
    def smoothing_rule(self) -> SmoothingRule:
        return SmoothingRule(
            self.smoothing_boundary_points,
            self.smoothing_interior_points,
            self.smoothing_facet_order,
        )

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> SolverSettings:
        known = {key: values[key] for key in cls.__dataclass_fields__ if key in values}
        return cls(**known)


@dataclass(frozen=True)
class RunConfig:
    problem: str | None = None
    method: str = METHOD_CSFEM
    levels: int | None = None
    lloyd_iterations: int = DEFAULT_LLOYD_ITERATIONS
    seed: int = DEFAULT_SEED
    output: Path | None = None
    plot: Path | None = None
    vtk: Path | None = None
    settings: SolverSettings = field(default_factory=SolverSettings)

    @property
    def methods(self) -> tuple[str, ...]:
        return METHODS if self.method == METHOD_BOTH else (self.method,)


def validate(values: Mapping[str, Any], schema: vol.Schema = RUN_SCHEMA) -> dict[str, Any]:
    try:
        return schema(dict(values))
    except vol.Invalid as error:
        raise ConfigError(f"Invalid configuration: {error}") from error


def build_run_config(values: Mapping[str, Any]) -> RunConfig:
    """Validate a flat mapping of run and solver keys into a RunConfig."""
    data = validate(values)

    def as_path(key: str) -> Path | None:
        return Path(data[key]) if data[key] else None

    return RunConfig(
        problem=data[CONF_PROBLEM],
        method=data[CONF_METHOD],
        levels=data[CONF_LEVELS],
        lloyd_iterations=data[CONF_LLOYD_ITERATIONS],
        seed=data[CONF_SEED],
        output=as_path(CONF_OUTPUT),
        plot=as_path(CONF_PLOT),
        vtk=as_path(CONF_VTK),
        settings=SolverSettings.from_mapping(data),
    )


def load_config_file(path: str | Path) -> dict[str, Any]:
    """Read a YAML settings file into a flat mapping."""
    try:
        with Path(path).open(encoding="utf-8") as stream:
            data = yaml.safe_load(stream)
    except OSError as error:
        raise ConfigError(f"Cannot read config {path}: {error}") from error
    except yaml.YAMLError as error:
        raise ConfigError(f"Config {path} is not valid YAML: {error}") from error
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"Config {path} must contain a mapping, got {type(data).__name__}")
    _LOGGER.debug("Loaded %s settings from %s", len(data), path)
    return {str(key).replace("-", "_"): value for key, value in data.items()}


def merge(file_values: Mapping[str, Any], overrides: Mapping[str, Any]) -> dict[str, Any]:
    """File values overridden by the explicitly given (non-None) command-line values."""
    merged = dict(file_values)
    merged.update({key: value for key, value in overrides.items() if value is not None})
    return merged
