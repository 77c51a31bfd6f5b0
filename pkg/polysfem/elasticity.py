"""Isotropic materials and element stiffness and load kernels."""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass, replace
from enum import StrEnum
from typing import TYPE_CHECKING

import numpy as np

from .const import (
    METHOD_CSFEM,
    METHOD_PFEM,
    PFEM_ORDER_2D,
    PFEM_ORDER_3D,
    QUADRATURE_NUDGE,
    TRACTION_POINTS_2D,
)
from .exceptions import MaterialError, MeshError
from .quadrature import gauss_line, map_rule, simplex_rule, triangle_rule
from .smoothing import (
    DEFAULT_RULE,
    SmoothingCell,
    SmoothingRule,
    build_subcells,
    smoothed_shape_gradients,
    voigt_b,
)
from .wachspress import basis_for

if TYPE_CHECKING:
    from .mesh_core import Mesh, PolyElement
    from .wachspress import BasisProvider

_LOGGER = logging.getLogger(__name__)

VectorField = Callable[[np.ndarray], np.ndarray] | Sequence[float]


class PlaneModel(StrEnum):
    PLANE_STRESS = "plane_stress"
    PLANE_STRAIN = "plane_strain"
    SOLID_3D = "solid_3d"


@dataclass(frozen=True)
class Material:
    """Isotropic linear elastic material."""

    E: float  # noqa: N815
    nu: float
    model: PlaneModel = PlaneModel.PLANE_STRESS

    def __post_init__(self) -> None:
        if not self.E > 0.0:
            raise MaterialError(f"Young's modulus must be positive, got {self.E}")
        if not -1.0 < self.nu < 0.5:  # noqa: PLR2004
            raise MaterialError(f"Poisson's ratio must lie in (-1, 0.5), got {self.nu}")

    @property
    def dim(self) -> int:
        return 3 if self.model is PlaneModel.SOLID_3D else 2

    @property
    def shear_modulus(self) -> float:
        return self.E / (2.0 * (1.0 + self.nu))


def d_matrix(material: Material) -> np.ndarray:
    """Voigt constitutive matrix, engineering shear strains."""
    E, nu = material.E, material.nu  # noqa: N806
    if material.model is PlaneModel.PLANE_STRESS:
        c = E / (1.0 - nu * nu)
        return c * np.array([[1.0, nu, 0.0], [nu, 1.0, 0.0], [0.0, 0.0, (1.0 - nu) / 2.0]])
    lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    mu = material.shear_modulus
    if material.model is PlaneModel.PLANE_STRAIN:
        return np.array(
            [[lam + 2 * mu, lam, 0.0], [lam, lam + 2 * mu, 0.0], [0.0, 0.0, mu]]
        )
    d = np.zeros((6, 6))
    d[:3, :3] = lam
    d[np.arange(3), np.arange(3)] = lam + 2 * mu
    d[np.arange(3, 6), np.arange(3, 6)] = mu
    return d


@dataclass(frozen=True)
class ElementStiffness:
    """Element matrix with the strain operators and weights it was integrated from.

    CSFEM keeps one cell-constant B per subcell (weight = subcell measure,
    point = subcell centroid). PFEM keeps B at every quadrature point until
    `without_operators` drops it; `strain_operators` rebuilds it from the points.
    """

    element_id: int
    matrix: np.ndarray
    b_matrices: np.ndarray | None
    weights: np.ndarray
    points: np.ndarray

    @property
    def integration_points(self) -> int:
        return int(self.weights.shape[0])

    def without_operators(self) -> ElementStiffness:
        return replace(self, b_matrices=None)


def default_order(dim: int) -> int:
    return PFEM_ORDER_2D if dim == 2 else PFEM_ORDER_3D  # noqa: PLR2004


def _integrate(b: np.ndarray, weights: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Sum of w_q B_q^T D B_q as one matrix product over the stacked strain rows."""
    columns = b.shape[-1]
    weighted = (b * weights[:, None, None]).reshape(-1, columns)
    matrix = weighted.T @ np.matmul(d, b).reshape(-1, columns)
    return 0.5 * (matrix + matrix.T)


def stiffness_csfem(
    mesh: Mesh,
    elem: PolyElement,
    material: Material,
    cells: list[SmoothingCell] | None = None,
    rule: SmoothingRule = DEFAULT_RULE,
    provider: BasisProvider | None = None,
) -> ElementStiffness:
    """Smoothed stiffness: sum over subcells of A_c B_c^T D B_c."""
    cells = build_subcells(mesh, elem) if cells is None else cells
    provider = provider or basis_for(mesh, elem)
    b = voigt_b(smoothed_shape_gradients(cells, provider, rule))
    weights = np.array([cell.measure for cell in cells])
    points = np.array([cell.vertices.mean(axis=0) for cell in cells])
    return ElementStiffness(elem.id, _integrate(b, weights, d_matrix(material)), b, weights, points)


def volume_points(
    mesh: Mesh,
    elem: PolyElement,
    order: int,
    provider: BasisProvider | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Sub-simplex quadrature points and weights strictly inside the element."""
    rule = simplex_rule(mesh.dim, order)
    mapped = [map_rule(rule, cell.vertices) for cell in build_subcells(mesh, elem)]
    points = np.vstack([pts for pts, _ in mapped])
    weights = np.concatenate([wts for _, wts in mapped])
    provider = provider or basis_for(mesh, elem)
    on_boundary = provider.distances(points).min(axis=1) < provider.tol
    if on_boundary.any():
        centre = provider.coords.mean(axis=0)
        toward = centre - points[on_boundary]
        toward /= np.linalg.norm(toward, axis=1, keepdims=True)
        points[on_boundary] += QUADRATURE_NUDGE * provider.size * toward
        _LOGGER.debug(
            "Element %s: moved %s quadrature points off the boundary",
            elem.id,
            int(on_boundary.sum()),
        )
    return points, weights


def strain_operators(
    mesh: Mesh,
    elem: PolyElement,
    points: np.ndarray,
    provider: BasisProvider | None = None,
) -> np.ndarray:
    """Compatible strain-displacement matrices (q, 3 or 6, d * n) at interior points."""
    provider = provider or basis_for(mesh, elem)
    _, grads = provider.gradients(points)
    return voigt_b(grads)


def stiffness_pfem(
    mesh: Mesh,
    elem: PolyElement,
    material: Material,
    quad_order: int | None = None,
    provider: BasisProvider | None = None,
) -> ElementStiffness:
    """Compatible-strain stiffness integrated on the sub-simplices."""
    order = default_order(mesh.dim) if quad_order is None else quad_order
    provider = provider or basis_for(mesh, elem)
    points, weights = volume_points(mesh, elem, order, provider)
    b = strain_operators(mesh, elem, points, provider)
    return ElementStiffness(
        elem.id, _integrate(b, weights, d_matrix(material)), b, weights, points
    )


def _field_values(field: VectorField, points: np.ndarray) -> np.ndarray:
    if callable(field):
        values = np.asarray(field(points), dtype=float)
    else:
        values = np.broadcast_to(np.asarray(field, dtype=float), points.shape)
    return values.reshape(points.shape)


def body_force_vector(
    mesh: Mesh,
    elem: PolyElement,
    body_force: VectorField,
    order: int | None = None,
    provider: BasisProvider | None = None,
) -> np.ndarray:
    """Consistent nodal loads of a body force, node-major (n * d,)."""
    order = default_order(mesh.dim) if order is None else order
    provider = provider or basis_for(mesh, elem)
    points, weights = volume_points(mesh, elem, order, provider)
    phi = provider.values(points)
    values = _field_values(body_force, points)
    return np.einsum("q,qa,qi->ai", weights, phi, values).ravel()


def traction_vector(
    mesh: Mesh,
    elem: PolyElement,
    facet: int,
    traction: VectorField,
    order: int | None = None,
    provider: BasisProvider | None = None,
) -> np.ndarray:
    """Consistent nodal loads of a traction on one boundary facet, node-major."""
    facets = mesh.facets(elem)
    if not 0 <= facet < len(facets):
        raise MeshError(f"Element {elem.id} has no facet {facet}")
    if not mesh.is_boundary_facet(elem, facet):
        raise MeshError(f"Facet {facet} of element {elem.id} is not on the mesh boundary")
    coords = mesh.element_coords(elem)
    count = len(coords)
    loads = np.zeros((count, mesh.dim))
    if mesh.dim == 2:  # noqa: PLR2004
        ends = (facet, (facet + 1) % count)
        rule = gauss_line(TRACTION_POINTS_2D)
        points, weights = map_rule(rule, coords[list(ends)])
        t = rule.points[:, 0]
        values = _field_values(traction, points)
        loads[ends[0]] += np.einsum("q,q,qi->i", weights, 1.0 - t, values)
        loads[ends[1]] += np.einsum("q,q,qi->i", weights, t, values)
        return loads.ravel()

    order = default_order(3) if order is None else order
    provider = provider or basis_for(mesh, elem)
    loop = coords[list(mesh.local_faces(elem)[facet])]
    middle = loop.mean(axis=0)
    rule = triangle_rule(order)
    mapped = [
        map_rule(rule, np.array([loop[k], loop[(k + 1) % len(loop)], middle]))
        for k in range(len(loop))
    ]
    points = np.vstack([pts for pts, _ in mapped])
    weights = np.concatenate([wts for _, wts in mapped])
    phi = provider.values(points)
    values = _field_values(traction, points)
    loads += np.einsum("q,qa,qi->ai", weights, phi, values)
    return loads.ravel()


def integration_points(
    method: str, mesh: Mesh, elem: PolyElement, quad_order: int | None = None
) -> int:
    """Number of strain evaluation points one element uses under `method`."""
    cells = (
        len(elem.vertex_ids)
        if mesh.dim == 2  # noqa: PLR2004
        else sum(len(face) for face in elem.faces)
    )
    if method == METHOD_CSFEM:
        return cells
    if method == METHOD_PFEM:
        order = default_order(mesh.dim) if quad_order is None else quad_order
        return cells * simplex_rule(mesh.dim, order).size
    raise ValueError(f"Unknown method {method!r}")
