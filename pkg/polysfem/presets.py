"""Benchmark boundary-condition presets keyed by problem name."""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from .benchmarks import EXACT_SOLUTIONS, AnalyticalSolution, Problem
from .const import (
    DEFAULT_LLOYD_ITERATIONS,
    DEFAULT_SEED,
    LADDER_2D,
    LADDER_3D,
)
from .exceptions import BenchmarkError
from .inp_io import DirichletBC, ElementGroup, Method, Model, TractionLoad, build_model
from .mesh_core import (
    DomainGeometry,
    Mesh,
    boundary_node_ids,
    nodes_where,
    polyhedral_mesh,
    voronoi_mesh,
)

_LOGGER = logging.getLogger(__name__)

# Coordinates closer than this (times the domain diameter) count as on a plane.
_PLANE_TOL = 1e-9
_CANTILEVER_3D_LENGTH = 5.0


@dataclass(frozen=True)
class Preset:
    """Domain, exact solution and loaded/clamped boundaries of one problem."""

    problem: Problem
    domain: DomainGeometry
    exact: AnalyticalSolution
    # selects the Dirichlet nodes among the boundary nodes
    clamped: Callable[[np.ndarray], np.ndarray]
    # (axis, value, outward normal sign) of a face carrying the exact traction
    loaded: tuple[int, float, float] | None = None

    @property
    def dim(self) -> int:
        return self.domain.dim

    def on_plane(self, axis: int, value: float) -> Callable[[np.ndarray], np.ndarray]:
        tol = _PLANE_TOL * self.domain.diameter
        return lambda xyz: np.abs(xyz[:, axis] - value) < tol


def _everywhere(xyz: np.ndarray) -> np.ndarray:
    return np.ones(len(xyz), dtype=bool)


def get_preset(problem: str | Problem) -> Preset:
    """Preset for a problem name; raises BenchmarkError for unknown names."""
    try:
        problem = Problem(problem)
    except ValueError as error:
        raise BenchmarkError(f"Unknown problem {problem!r}") from error
    exact = EXACT_SOLUTIONS[problem]()
    if problem is Problem.PATCH:
        return Preset(problem, DomainGeometry.rectangle(1.0, 1.0), exact, _everywhere)
    if problem is Problem.PATCH_3D:
        return Preset(problem, DomainGeometry.box((1.0, 1.0, 1.0)), exact, _everywhere)
    if problem is Problem.CANTILEVER_2D:
        length, depth = exact.parameters["L"], exact.parameters["D"]
        domain = DomainGeometry.rectangle(length, depth, (0.0, -depth / 2))
        tol = _PLANE_TOL * domain.diameter
        return Preset(
            problem, domain, exact, lambda xy: np.abs(xy[:, 0]) < tol, (0, length, 1.0)
        )
    if problem is Problem.PLATE_HOLE:
        domain = DomainGeometry.quarter_plate_with_hole(exact.parameters["a"], 5.0)
        tol = _PLANE_TOL * domain.diameter
        side = domain.extents[0]

        def outer(xy: np.ndarray) -> np.ndarray:
            near = np.abs(xy) < tol
            far = np.abs(xy - side) < tol
            return near.any(axis=1) | far.any(axis=1)

        return Preset(problem, domain, exact, outer)
    if problem is Problem.CUBE_BODY:
        domain = DomainGeometry.box((1.0, 2.0, 1.0), (0.0, -1.0, 0.0))
        return Preset(problem, domain, exact, _everywhere)
    # cantilever3d
    a, b = exact.parameters["a"], exact.parameters["b"]
    length = exact.parameters["L"]
    domain = DomainGeometry.box((2 * a, 2 * b, length), (-a, -b, 0.0))
    tol = _PLANE_TOL * domain.diameter
    return Preset(
        problem,
        domain,
        exact,
        lambda xyz: np.abs(xyz[:, 2] - length) < tol,
        (2, 0.0, -1.0),
    )


def level_mesh(
    preset: Preset,
    level: int,
    lloyd_iterations: int = DEFAULT_LLOYD_ITERATIONS,
    rng_seed: int = DEFAULT_SEED,
) -> Mesh:
    """Mesh of refinement level `level` (1-based) on the preset's ladder.

    Levels past the shipped ladder keep refining: 2D doubles the element
    count, 3D adds two seeds per axis.
    """
    if level < 1:
        raise BenchmarkError(f"Levels are 1-based, got {level}")
    if preset.dim == 2:  # noqa: PLR2004
        extra = level - len(LADDER_2D)
        n = LADDER_2D[level - 1] if extra <= 0 else LADDER_2D[-1] * 2**extra
        return voronoi_mesh(preset.domain, n, lloyd_iterations, rng_seed)
    extra = level - len(LADDER_3D)
    k = LADDER_3D[level - 1] if extra <= 0 else LADDER_3D[-1] + 2 * extra
    layers = k
    if preset.problem is Problem.CANTILEVER_3D:
        layers = round(k * _CANTILEVER_3D_LENGTH / 2)
    return polyhedral_mesh(preset.domain, k * k, layers, lloyd_iterations, rng_seed)


def _stress_traction(exact: AnalyticalSolution, axis: int, sign: float) -> Callable:
    normal = np.zeros(exact.dim)
    normal[axis] = sign
    if exact.dim == 2:  # noqa: PLR2004
        rows = [[0, 2], [2, 1]]
    else:
        rows = [[0, 3, 5], [3, 1, 4], [5, 4, 2]]
    tensor_rows = np.array(rows)

    def traction(points: np.ndarray) -> np.ndarray:
        sigma = exact.stress(points)
        return np.einsum("qij,j->qi", sigma[:, tensor_rows], normal)

    return traction


def dirichlet_for(preset: Preset, mesh: Mesh) -> tuple[DirichletBC, ...]:
    """Exact displacements on the clamped boundary nodes, every component."""
    ids = nodes_where(mesh, preset.clamped, boundary_node_ids(mesh))
    if not ids:
        raise BenchmarkError(f"{preset.problem}: no nodes on the clamped boundary")
    values = preset.exact.displacement(mesh.coords[mesh.rows(ids)])
    return tuple(
        DirichletBC(nid, component, float(values[row, component]))
        for row, nid in enumerate(ids)
        for component in range(mesh.dim)
    )


def tractions_for(preset: Preset, mesh: Mesh) -> tuple[TractionLoad, ...]:
    """Exact boundary tractions on the loaded face, one record per boundary facet."""
    if preset.loaded is None:
        return ()
    axis, value, sign = preset.loaded
    on_face = preset.on_plane(axis, value)
    traction = _stress_traction(preset.exact, axis, sign)
    loads = []
    for key, (element_id, local) in mesh.boundary_facets().items():
        if on_face(mesh.coords[mesh.rows(key)]).all():
            loads.append(TractionLoad(element_id, local, traction))
    if not loads:
        raise BenchmarkError(f"{preset.problem}: no boundary facets on the loaded face")
    loads.sort(key=lambda load: (load.element, load.facet))
    return tuple(loads)


def preset_model(preset: Preset, mesh: Mesh, method: Method | str = Method.CSFEM) -> Model:
    """Model carrying the preset's material, boundary conditions and loads."""
    return build_model(
        mesh,
        preset.exact.material,
        dirichlet_for(preset, mesh),
        tractions_for(preset, mesh),
        preset.exact.body_force,
        method,
    )


def apply_preset(preset: Preset, model: Model, method: Method | str | None = None) -> Model:
    """Replace a deck's boundary conditions and material with the preset's."""
    material = preset.exact.material
    if model.dim != preset.dim:
        raise BenchmarkError(
            f"{preset.problem} is a {preset.dim}D problem but the deck is {model.dim}D"
        )
    for group in model.groups:
        if (group.E, group.nu) != (material.E, material.nu):
            _LOGGER.warning(
                "ELSET %s: preset %s overrides E=%s, nu=%s with E=%s, nu=%s",
                group.elset,
                preset.problem,
                group.E,
                group.nu,
                material.E,
                material.nu,
            )
    groups = tuple(
        ElementGroup(g.label, g.elset, g.node_count, g.element_ids, material.E, material.nu)
        for g in model.groups
    )
    return Model(
        model.mesh,
        groups,
        dirichlet_for(preset, model.mesh),
        tractions_for(preset, model.mesh),
        preset.exact.body_force,
        Method(method) if method is not None else model.method,
        material.model,
    )
