"""Smoothing subcells and the smoothed strain-displacement matrices.

Every element is split into simplices joined to its vertex average. On each
subcell the strain is replaced by its average, which the divergence theorem
turns into a boundary integral of the shape functions:

    phi_{a,i} = 1/A_c * integral over the cell boundary of phi_a n_i

so no shape function derivatives are needed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .const import (
    DEGENERATE_MEASURE_TOL,
    SMOOTHING_BOUNDARY_POINTS_2D,
    SMOOTHING_INTERIOR_POINTS_2D,
)
from .exceptions import SmoothingError
from .mesh_core import element_measure
from .quadrature import (
    QuadratureRule,
    gauss_line,
    simplex_measure,
    symmetric_triangle_rule,
    triangle_rule,
)

if TYPE_CHECKING:
    from .mesh_core import Mesh, PolyElement
    from .wachspress import BasisProvider

_LOGGER = logging.getLogger(__name__)

# Closure tolerance on |sum(measure * n)|, relative to the summed facet measure.
_CLOSURE_TOL = 1e-10


@dataclass(frozen=True)
class CellFacet:
    vertices: np.ndarray
    normal: np.ndarray
    measure: float
    on_element_boundary: bool


@dataclass(frozen=True)
class SmoothingCell:
    """Simplex subcell of one element with its outward boundary facets."""

    owner: int
    vertices: np.ndarray
    facets: tuple[CellFacet, ...]
    measure: float

    @property
    def dim(self) -> int:
        return int(self.vertices.shape[1])


@dataclass(frozen=True)
class SmoothedB:
    matrix: np.ndarray
    cell: SmoothingCell


@dataclass(frozen=True)
class SmoothingRule:
    """Quadrature used on the subcell boundaries.

    2D edges on the element boundary take `boundary_points` Gauss points and
    the edges through the centre take `interior_points`. In 3D every facet
    triangle uses the 3-point symmetric rule unless `facet_order` > 2, which
    switches to a collapsed Gauss rule of that order.
    """

    boundary_points: int = SMOOTHING_BOUNDARY_POINTS_2D
    interior_points: int = SMOOTHING_INTERIOR_POINTS_2D
    facet_order: int = 2

    def facet_rule(self, dim: int, on_element_boundary: bool) -> QuadratureRule:  # noqa: FBT001
        if dim == 2:  # noqa: PLR2004
            count = self.boundary_points if on_element_boundary else self.interior_points
            return gauss_line(count)
        if self.facet_order <= 2:  # noqa: PLR2004
            return symmetric_triangle_rule()
        return triangle_rule(self.facet_order)


DEFAULT_RULE = SmoothingRule()


def _facet(
    vertices: np.ndarray, opposite: np.ndarray, on_element_boundary: bool  # noqa: FBT001
) -> CellFacet:
    """Facet with its unit normal pointing away from the opposite simplex vertex."""
    if len(vertices) == 2:  # noqa: PLR2004
        edge = vertices[1] - vertices[0]
        normal = np.array([edge[1], -edge[0]])
    else:
        normal = np.cross(vertices[1] - vertices[0], vertices[2] - vertices[0])
    norm = np.linalg.norm(normal)
    if norm == 0.0:
        raise SmoothingError(f"Degenerate subcell facet {vertices.tolist()}")
    normal = normal / norm
    if np.dot(normal, vertices[0] - opposite) < 0.0:
        normal = -normal
    return CellFacet(vertices, normal, simplex_measure(vertices), on_element_boundary)


def _simplex_cell(owner: int, vertices: np.ndarray, boundary_facet: int | None) -> SmoothingCell:
    """Cell from a simplex; facet k is the one opposite vertex k."""
    measure = simplex_measure(vertices)
    scale = np.ptp(vertices, axis=0).max() ** vertices.shape[1]
    if measure <= DEGENERATE_MEASURE_TOL * scale:
        raise SmoothingError(f"Element {owner} has a degenerate subcell")
    facets = []
    for k in range(len(vertices)):
        others = np.delete(vertices, k, axis=0)
        facets.append(_facet(others, vertices[k], k == boundary_facet))
    return SmoothingCell(owner, vertices, tuple(facets), measure)


def build_subcells(mesh: Mesh, elem: PolyElement) -> list[SmoothingCell]:
    """Triangles (2D) or tetrahedra (3D) joining the element boundary to its centre."""
    coords = mesh.element_coords(elem)
    centre = coords.mean(axis=0)
    cells = []
    if mesh.dim == 2:  # noqa: PLR2004
        count = len(coords)
        for k in range(count):
            tri = np.array([coords[k], coords[(k + 1) % count], centre])
            cells.append(_simplex_cell(elem.id, tri, boundary_facet=2))
        return cells
    for face in mesh.local_faces(elem):
        loop = coords[list(face)]
        middle = loop.mean(axis=0)
        for k in range(len(loop)):
            tet = np.array([loop[k], loop[(k + 1) % len(loop)], middle, centre])
            cells.append(_simplex_cell(elem.id, tet, boundary_facet=3))
    return cells


def whole_element_cell(mesh: Mesh, elem: PolyElement) -> SmoothingCell:
    """The element itself as a single smoothing cell."""
    coords = mesh.element_coords(elem)
    centre = coords.mean(axis=0)
    facets = []
    if mesh.dim == 2:  # noqa: PLR2004
        count = len(coords)
        for k in range(count):
            edge = np.array([coords[k], coords[(k + 1) % count]])
            facets.append(_facet(edge, centre, on_element_boundary=True))
    else:
        for face in mesh.local_faces(elem):
            loop = coords[list(face)]
            middle = loop.mean(axis=0)
            for k in range(len(loop)):
                tri = np.array([loop[k], loop[(k + 1) % len(loop)], middle])
                facets.append(_facet(tri, centre, on_element_boundary=True))
    return SmoothingCell(elem.id, coords, tuple(facets), element_measure(mesh, elem))


def _boundary_points(
    cells: list[SmoothingCell], rule: SmoothingRule
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Quadrature points (m, d), weighted normals (m, d) and owning cell (m,) of all facets.

    Facets sharing a rule are mapped together; every cell must be closed.
    """
    dim = cells[0].dim
    closure = np.zeros((len(cells), dim))
    perimeter = np.zeros(len(cells))
    points, weighted, owners = [], [], []
    for on_boundary in (True, False):
        chosen = [
            (index, facet)
            for index, cell in enumerate(cells)
            for facet in cell.facets
            if facet.on_element_boundary == on_boundary
        ]
        if not chosen:
            continue
        index = np.array([k for k, _ in chosen])
        vertices = np.array([facet.vertices for _, facet in chosen])
        normals = np.array([facet.normal for _, facet in chosen])
        measures = np.array([facet.measure for _, facet in chosen])
        np.add.at(closure, index, measures[:, None] * normals)
        np.add.at(perimeter, index, measures)

        facet_rule = rule.facet_rule(dim, on_boundary)
        order = vertices.shape[1] - 1
        edges = vertices[:, 1:] - vertices[:, :1]
        mapped = vertices[:, :1] + np.einsum("mk,fkd->fmd", facet_rule.points, edges)
        weights = measures[:, None] * facet_rule.weights[None, :] * math.factorial(order)
        points.append(mapped.reshape(-1, dim))
        weighted.append((weights[..., None] * normals[:, None, :]).reshape(-1, dim))
        owners.append(np.repeat(index, facet_rule.size))
    gap = np.linalg.norm(closure, axis=1)
    open_cells = np.flatnonzero(gap > _CLOSURE_TOL * perimeter)
    if open_cells.size:
        k = open_cells[0]
        raise SmoothingError(
            f"Cell of element {cells[k].owner} is not closed: |sum(measure * n)| = "
            f"{gap[k]:.3e}"
        )
    return np.vstack(points), np.vstack(weighted), np.concatenate(owners)


def smoothed_shape_gradient(
    cell: SmoothingCell, provider: BasisProvider, rule: SmoothingRule = DEFAULT_RULE
) -> np.ndarray:
    """Boundary-averaged shape function gradients (n, d) on one cell."""
    return smoothed_shape_gradients([cell], provider, rule)[0]


def smoothed_shape_gradients(
    cells: list[SmoothingCell], provider: BasisProvider, rule: SmoothingRule = DEFAULT_RULE
) -> np.ndarray:
    """Gradients (cells, n, d) for all cells of one element with a single basis call."""
    points, weighted, owners = _boundary_points(cells, rule)
    phi = provider.values(points)
    grads = np.zeros((len(cells), phi.shape[1], weighted.shape[1]))
    np.add.at(grads, owners, phi[:, :, None] * weighted[:, None, :])
    measures = np.array([cell.measure for cell in cells])
    return grads / measures[:, None, None]


def voigt_b(grad: np.ndarray) -> np.ndarray:
    """Strain-displacement matrices (..., 3 or 6, d * n) from gradients (..., n, d)."""
    grad = np.asarray(grad, dtype=float)
    *lead, count, dim = grad.shape
    if dim == 2:  # noqa: PLR2004
        b = np.zeros((*lead, 3, 2 * count))
        gx, gy = grad[..., 0], grad[..., 1]
        b[..., 0, 0::2] = gx
        b[..., 1, 1::2] = gy
        b[..., 2, 0::2] = gy
        b[..., 2, 1::2] = gx
        return b
    b = np.zeros((*lead, 6, 3 * count))
    gx, gy, gz = grad[..., 0], grad[..., 1], grad[..., 2]
    b[..., 0, 0::3] = gx
    b[..., 1, 1::3] = gy
    b[..., 2, 2::3] = gz
    b[..., 3, 0::3] = gy
    b[..., 3, 1::3] = gx
    b[..., 4, 1::3] = gz
    b[..., 4, 2::3] = gy
    b[..., 5, 0::3] = gz
    b[..., 5, 2::3] = gx
    return b


def smoothed_B(  # noqa: N802
    cell: SmoothingCell, provider: BasisProvider, rule: SmoothingRule = DEFAULT_RULE
) -> SmoothedB:
    """Cell-constant smoothed B matrix in Voigt order."""
    return SmoothedB(voigt_b(smoothed_shape_gradient(cell, provider, rule)), cell)
