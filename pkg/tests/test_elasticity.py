"""Material, element stiffness and load kernel tests.

Features: elasticity
See: docs/FEATURES.md#elasticity
"""

from __future__ import annotations

import numpy as np
import pytest

from polysfem.const import METHOD_CSFEM, METHOD_PFEM
from polysfem.elasticity import (
    Material,
    PlaneModel,
    body_force_vector,
    d_matrix,
    integration_points,
    stiffness_csfem,
    stiffness_pfem,
    strain_operators,
    traction_vector,
    volume_points,
)
from polysfem.exceptions import MaterialError, MeshError
from polysfem.quadrature import simplex_rule
from polysfem.smoothing import voigt_b, whole_element_cell
from polysfem.wachspress import basis_for
from tests.factories import polygon_mesh, quad_grid

pytestmark = pytest.mark.feature("elasticity")


def _bilinear_gradients(x: float, y: float) -> np.ndarray:
    return np.array([[-(1 - y), -(1 - x)], [1 - y, -x], [y, x], [-y, 1 - x]])


def _rigid_modes(coords: np.ndarray) -> np.ndarray:
    if coords.shape[1] == 2:  # noqa: PLR2004
        x, y = coords.T
        one, zero = np.ones_like(x), np.zeros_like(x)
        fields = [(one, zero), (zero, one), (-y, x)]
        return np.array([np.column_stack(f).ravel() for f in fields]).T
    x, y, z = coords.T
    one, zero = np.ones_like(x), np.zeros_like(x)
    fields = [
        (one, zero, zero),
        (zero, one, zero),
        (zero, zero, one),
        (-y, x, zero),
        (zero, -z, y),
        (z, zero, -x),
    ]
    return np.array([np.column_stack(f).ravel() for f in fields]).T


def test_material_rejects_bad_constants() -> None:
    with pytest.raises(MaterialError, match="Young"):
        Material(0.0, 0.3)
    with pytest.raises(MaterialError, match="Poisson"):
        Material(1.0, 0.5)
    assert Material(1.0, 0.25, PlaneModel.SOLID_3D).dim == 3
    assert Material(2.6, 0.3).shear_modulus == pytest.approx(1.0)


def test_d_matrix_plane_stress() -> None:
    d = d_matrix(Material(1.0, 0.0))
    np.testing.assert_allclose(d, np.diag([1.0, 1.0, 0.5]))


def test_plane_strain_is_the_restricted_solid_matrix() -> None:
    solid = d_matrix(Material(3.0, 0.25, PlaneModel.SOLID_3D))
    plane = d_matrix(Material(3.0, 0.25, PlaneModel.PLANE_STRAIN))
    keep = [0, 1, 3]
    np.testing.assert_allclose(plane, solid[np.ix_(keep, keep)])
    np.testing.assert_allclose(solid, solid.T)
    assert np.linalg.eigvalsh(solid).min() > 0.0


def test_csfem_triangle_equals_constant_strain_triangle(steel) -> None:
    mesh = polygon_mesh([(0.0, 0.0), (2.0, 0.5), (0.5, 1.5)])
    elem = mesh.elements[0]
    coords = mesh.element_coords(elem)
    jac = np.column_stack([coords[1] - coords[0], coords[2] - coords[0]])
    grads = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]]) @ np.linalg.inv(jac)
    b = voigt_b(grads)
    area = 0.5 * abs(np.linalg.det(jac))
    expected = area * b.T @ d_matrix(steel) @ b

    for stiffness in (stiffness_csfem(mesh, elem, steel), stiffness_pfem(mesh, elem, steel)):
        np.testing.assert_allclose(stiffness.matrix, expected, rtol=1e-12, atol=1e-12 * steel.E)


def test_single_cell_square_equals_reduced_bilinear(square_mesh, steel) -> None:
    elem = square_mesh.elements[0]
    cells = [whole_element_cell(square_mesh, elem)]
    stiffness = stiffness_csfem(square_mesh, elem, steel, cells=cells)
    b0 = voigt_b(_bilinear_gradients(0.5, 0.5))
    expected = b0.T @ d_matrix(steel) @ b0
    np.testing.assert_allclose(stiffness.matrix, expected, rtol=1e-12, atol=1e-12 * steel.E)
    assert stiffness.integration_points == 1


def test_pfem_square_equals_full_bilinear(square_mesh, steel) -> None:
    gauss = 0.5 + np.array([-0.5, 0.5]) / np.sqrt(3.0)
    d = d_matrix(steel)
    expected = np.zeros((8, 8))
    for x in gauss:
        for y in gauss:
            b = voigt_b(_bilinear_gradients(x, y))
            expected += 0.25 * b.T @ d @ b
    stiffness = stiffness_pfem(square_mesh, square_mesh.elements[0], steel)
    np.testing.assert_allclose(stiffness.matrix, expected, rtol=1e-10, atol=1e-10 * steel.E)


@pytest.mark.parametrize("kernel", [stiffness_csfem, stiffness_pfem])
def test_stiffness_is_symmetric_with_rigid_null_space(kernel, hybrid_mesh, steel) -> None:
    for elem in hybrid_mesh.elements:
        matrix = kernel(hybrid_mesh, elem, steel).matrix
        scale = np.abs(matrix).max()
        np.testing.assert_array_equal(matrix, matrix.T)
        modes = _rigid_modes(hybrid_mesh.element_coords(elem))
        np.testing.assert_allclose(matrix @ modes, 0.0, atol=1e-10 * scale)
        rank = np.linalg.matrix_rank(matrix, tol=1e-9 * scale)
        assert rank == 2 * len(elem.vertex_ids) - 3


def test_hexahedron_stiffness_null_space(cube_mesh, solid) -> None:
    elem = cube_mesh.elements[0]
    modes = _rigid_modes(cube_mesh.element_coords(elem))
    for stiffness in (stiffness_csfem(cube_mesh, elem, solid), stiffness_pfem(cube_mesh, elem, solid)):
        scale = np.abs(stiffness.matrix).max()
        np.testing.assert_allclose(stiffness.matrix @ modes, 0.0, atol=1e-10 * scale)
        assert np.linalg.matrix_rank(stiffness.matrix, tol=1e-9 * scale) == 24 - 6


def test_volume_points_lie_inside(hybrid_mesh) -> None:
    for elem in hybrid_mesh.elements:
        provider = basis_for(hybrid_mesh, elem)
        points, weights = volume_points(hybrid_mesh, elem, 8, provider)
        assert provider.distances(points).min() > 0.0
        coords = hybrid_mesh.element_coords(elem)
        x, y = coords[:, 0], coords[:, 1]
        area = 0.5 * (x @ np.roll(y, -1) - y @ np.roll(x, -1))
        assert weights.sum() == pytest.approx(area, rel=1e-13)


def test_constant_body_force_is_shared_equally(square_mesh) -> None:
    loads = body_force_vector(square_mesh, square_mesh.elements[0], (0.0, -1.0))
    np.testing.assert_allclose(loads.reshape(4, 2), [[0.0, -0.25]] * 4, atol=1e-13)


def test_body_force_field_totals(hybrid_mesh) -> None:
    total = np.zeros(2)
    for elem in hybrid_mesh.elements:
        loads = body_force_vector(hybrid_mesh, elem, lambda p: np.column_stack([p[:, 0], 2 * p[:, 1]]))
        total += loads.reshape(-1, 2).sum(axis=0)
    # integrals of x and 2y over the unit square
    np.testing.assert_allclose(total, [0.5, 1.0], rtol=1e-12)


def test_linear_edge_traction(square_mesh) -> None:
    elem = square_mesh.elements[0]
    loads = traction_vector(
        square_mesh, elem, 0, lambda p: np.column_stack([p[:, 0], np.zeros(len(p))])
    ).reshape(4, 2)
    np.testing.assert_allclose(loads[:, 0], [1 / 6, 1 / 3, 0.0, 0.0], atol=1e-14)
    np.testing.assert_allclose(loads[:, 1], 0.0, atol=1e-14)


def test_face_traction_on_cube(cube_mesh) -> None:
    elem = cube_mesh.elements[0]
    loads = traction_vector(cube_mesh, elem, 0, (0.0, 0.0, -4.0)).reshape(8, 3)
    np.testing.assert_allclose(loads[:4, 2], -1.0, rtol=1e-12)
    np.testing.assert_allclose(loads[4:], 0.0, atol=1e-12)
    np.testing.assert_allclose(loads[:, :2], 0.0, atol=1e-12)


def test_traction_rejects_bad_facets() -> None:
    mesh = quad_grid(2, 1)
    elem = mesh.elements[0]
    with pytest.raises(MeshError, match="not on the mesh boundary"):
        traction_vector(mesh, elem, 1, (1.0, 0.0))
    with pytest.raises(MeshError, match="no facet 7"):
        traction_vector(mesh, elem, 7, (1.0, 0.0))


def test_integration_point_counts(hybrid_mesh, cube_mesh, steel, solid) -> None:
    per_triangle = simplex_rule(2, 8).size
    for elem in hybrid_mesh.elements:
        count = len(elem.vertex_ids)
        assert integration_points(METHOD_CSFEM, hybrid_mesh, elem) == count
        assert integration_points(METHOD_PFEM, hybrid_mesh, elem) == count * per_triangle
        assert stiffness_csfem(hybrid_mesh, elem, steel).integration_points == count
        assert stiffness_pfem(hybrid_mesh, elem, steel).integration_points == count * per_triangle

    cube = cube_mesh.elements[0]
    smoothed = integration_points(METHOD_CSFEM, cube_mesh, cube)
    reproduced = integration_points(METHOD_PFEM, cube_mesh, cube, quad_order=9)
    assert smoothed == 24
    assert reproduced == 24 * 125
    assert reproduced >= 100 * smoothed
    assert stiffness_pfem(cube_mesh, cube, solid, quad_order=9).integration_points == reproduced

    with pytest.raises(ValueError, match="Unknown method"):
        integration_points("fem", cube_mesh, cube)


def test_stiffness_is_the_weighted_sum_over_points(hybrid_mesh, steel) -> None:
    elem = hybrid_mesh.elements[1]
    kernel = stiffness_pfem(hybrid_mesh, elem, steel)
    d = d_matrix(steel)
    expected = sum(
        w * b.T @ d @ b for w, b in zip(kernel.weights, kernel.b_matrices, strict=True)
    )
    np.testing.assert_allclose(kernel.matrix, expected, atol=1e-12 * np.abs(expected).max())
    rebuilt = strain_operators(hybrid_mesh, elem, kernel.points)
    np.testing.assert_allclose(rebuilt, kernel.b_matrices, atol=1e-14)
    lean = kernel.without_operators()
    assert lean.b_matrices is None
    assert lean.integration_points == kernel.integration_points
