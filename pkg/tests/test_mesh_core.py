"""Mesh model, validation, Voronoi generation and extrusion tests.

Features: mesh
See: docs/FEATURES.md#mesh
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from polysfem.const import SHORT_EDGE_TOL
from polysfem.exceptions import MeshError
from polysfem.helpers import polygon_turns
from polysfem.mesh_core import (
    DomainGeometry,
    Mesh,
    Node,
    PolyElement,
    boundary_node_ids,
    clip_halfplane,
    element_measure,
    extrude_mesh,
    nodes_where,
    polyhedral_mesh,
    tiling_reference,
    validate_mesh,
    voronoi_mesh,
)
from tests.factories import polygon_mesh, quad_grid, unit_cube_mesh

pytestmark = pytest.mark.feature("mesh")


def test_voronoi_mesh_is_valid_and_tiles(patch_mesh: Mesh) -> None:
    domain = DomainGeometry.rectangle(1.0, 1.0)
    assert len(patch_mesh.elements) == 100
    assert validate_mesh(patch_mesh, domain) == []
    assert patch_mesh.measure == pytest.approx(1.0, rel=1e-10)


def test_voronoi_mesh_is_deterministic() -> None:
    domain = DomainGeometry.rectangle(8.0, 4.0, (0.0, -2.0))
    first = voronoi_mesh(domain, 40, lloyd_iterations=10, rng_seed=7)
    second = voronoi_mesh(domain, 40, lloyd_iterations=10, rng_seed=7)
    assert first == second
    other = voronoi_mesh(domain, 40, lloyd_iterations=10, rng_seed=8)
    assert other != first


def test_voronoi_elements_are_convex_and_ccw(patch_mesh: Mesh) -> None:
    for elem in patch_mesh.elements:
        turns = polygon_turns(patch_mesh.element_coords(elem))
        assert np.all(turns > 0.0)


def test_voronoi_mesh_of_plate_with_hole() -> None:
    domain = DomainGeometry.quarter_plate_with_hole(1.0, 5.0)
    mesh = voronoi_mesh(domain, 100, rng_seed=3)
    assert validate_mesh(mesh, domain) == []
    radii = np.linalg.norm(mesh.coords, axis=1)
    assert radii.min() == pytest.approx(1.0, abs=1e-12)
    on_hole = np.abs(radii - 1.0) <= 1e-9
    assert on_hole.sum() >= 3
    np.testing.assert_allclose(mesh.coords[on_hole].min(axis=0), [0.0, 0.0], atol=1e-12)
    # every boundary edge off the outline is a chord of the hole
    for key in mesh.boundary_facets():
        ends = mesh.coords[mesh.rows(key)]
        along_outline = [
            np.allclose(ends[:, axis], side, atol=1e-12) for axis in (0, 1) for side in (0.0, 5.0)
        ]
        if not any(along_outline):
            np.testing.assert_allclose(np.linalg.norm(ends, axis=1), 1.0, rtol=1e-12)
    for elem in mesh.elements:
        assert np.all(polygon_turns(mesh.element_coords(elem)) > 0.0)
    assert mesh.measure == pytest.approx(tiling_reference(mesh, domain), rel=1e-12)
    assert mesh.measure < domain.measure


def test_tiling_reference_of_plain_domains_is_their_measure(patch_mesh: Mesh) -> None:
    domain = DomainGeometry.rectangle(1.0, 1.0)
    assert tiling_reference(patch_mesh, domain) == domain.measure


def test_voronoi_mesh_collapses_short_edges() -> None:
    domain = DomainGeometry.rectangle(48.0, 12.0, (0.0, -6.0))
    mesh = voronoi_mesh(domain, 200, rng_seed=11)
    cell_size = math.sqrt(domain.measure / 200)
    shortest = min(
        float(np.linalg.norm(np.subtract(*mesh.coords[mesh.rows(key)])))
        for key in mesh.facet_owners
    )
    assert shortest >= 0.5 * SHORT_EDGE_TOL * cell_size
    assert mesh.measure == pytest.approx(domain.measure, rel=1e-10)


def test_voronoi_mesh_rejects_bad_requests() -> None:
    with pytest.raises(MeshError, match="at least"):
        voronoi_mesh(DomainGeometry.rectangle(1.0, 1.0), 2)
    with pytest.raises(MeshError, match="polyhedral_mesh"):
        voronoi_mesh(DomainGeometry.box((1.0, 1.0, 1.0)), 10)


def test_domain_geometry_checks_hole_radius() -> None:
    with pytest.raises(MeshError, match="Hole radius"):
        DomainGeometry.quarter_plate_with_hole(6.0, 5.0)
    with pytest.raises(MeshError, match="positive"):
        DomainGeometry.rectangle(-1.0, 1.0)


def test_domain_measures() -> None:
    plate = DomainGeometry.quarter_plate_with_hole(1.0, 5.0)
    assert plate.measure == pytest.approx(25.0 - math.pi / 4)
    box = DomainGeometry.box((1.0, 2.0, 1.0), (0.0, -1.0, 0.0))
    assert box.dim == 3
    assert box.measure == pytest.approx(2.0)
    np.testing.assert_allclose(box.upper, [1.0, 1.0, 1.0])


def test_extrude_mesh_builds_prisms() -> None:
    base = quad_grid(2, 2)
    mesh = extrude_mesh(base, layers=3, height=1.5)
    assert mesh.dim == 3
    assert len(mesh.elements) == 12
    assert len(mesh.nodes) == 9 * 4
    assert validate_mesh(mesh) == []
    assert all(len(elem.faces) == 6 for elem in mesh.elements)
    assert mesh.measure == pytest.approx(1.5)


def test_polyhedral_mesh_counts_and_validity() -> None:
    domain = DomainGeometry.box((1.0, 1.0, 1.0))
    mesh = polyhedral_mesh(domain, 16, 4, lloyd_iterations=20, rng_seed=1)
    assert len(mesh.elements) == 64
    assert validate_mesh(mesh) == []
    assert mesh.measure == pytest.approx(1.0, rel=1e-10)


def test_polyhedral_mesh_needs_box() -> None:
    with pytest.raises(MeshError, match="box"):
        polyhedral_mesh(DomainGeometry.rectangle(1.0, 1.0), 10, 2)


def test_boundary_facets_of_grid() -> None:
    mesh = quad_grid(2, 2)
    boundary = mesh.boundary_facets()
    assert len(boundary) == 8
    assert boundary_node_ids(mesh) == [1, 2, 3, 4, 6, 7, 8, 9]
    for elem in mesh.elements:
        flags = [mesh.is_boundary_facet(elem, k) for k in range(4)]
        assert sum(flags) == 2


def test_boundary_facets_of_cube() -> None:
    mesh = unit_cube_mesh()
    assert len(mesh.boundary_facets()) == 6
    assert len(boundary_node_ids(mesh)) == 8


def test_nodes_where_selects_by_coordinates() -> None:
    mesh = quad_grid(2, 2)
    left = nodes_where(mesh, lambda xy: np.abs(xy[:, 0]) < 1e-12)
    assert left == [1, 4, 7]
    assert nodes_where(mesh, lambda xy: xy[:, 1] > 0.9, candidates=[1, 9]) == [9]
    assert nodes_where(mesh, lambda xy: xy[:, 0] > 0.0, candidates=[]) == []


def test_validate_mesh_reports_violations() -> None:
    clockwise = polygon_mesh([(0, 0), (0, 1), (1, 1), (1, 0)])
    assert [v.kind for v in validate_mesh(clockwise)] == ["orientation"]

    reflex = polygon_mesh([(0, 0), (2, 0), (1, 0.5), (2, 2), (0, 2)])
    assert [v.kind for v in validate_mesh(reflex)] == ["convexity"]

    nodes = (Node(1, (0.0, 0.0)), Node(2, (1.0, 0.0)), Node(3, (0.0, 1.0)))
    dangling = Mesh(nodes, (PolyElement(1, (1, 2, 4)),), 2)
    assert [v.kind for v in validate_mesh(dangling)] == ["dangling"]

    twice = Mesh(nodes, (PolyElement(1, (1, 2, 3)), PolyElement(2, (2, 3, 1))), 2)
    kinds = [v.kind for v in validate_mesh(twice)]
    assert kinds == ["duplicate"]


def test_validate_mesh_reports_inward_face() -> None:
    cube = unit_cube_mesh()
    elem = cube.elements[0]
    flipped = (tuple(reversed(elem.faces[0])), *elem.faces[1:])
    mesh = Mesh(cube.nodes, (PolyElement(1, elem.vertex_ids, flipped),), 3)
    violations = validate_mesh(mesh)
    assert violations
    assert violations[0].kind == "orientation"
    assert violations[0].element_id == 1


def test_validate_mesh_reports_tiling_gap() -> None:
    mesh = quad_grid(2, 2)
    violations = validate_mesh(mesh, DomainGeometry.rectangle(2.0, 1.0))
    assert [v.kind for v in violations] == ["tiling"]


def test_element_measure_rejects_degenerate() -> None:
    mesh = polygon_mesh([(0, 0), (1, 0), (2, 0)])
    with pytest.raises(MeshError, match="degenerate"):
        element_measure(mesh, mesh.elements[0])


def test_clip_halfplane() -> None:
    square = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    clipped = clip_halfplane(square, np.array([1.0, 0.0]), 0.5)
    np.testing.assert_allclose(
        clipped, [[0.0, 0.0], [0.5, 0.0], [0.5, 1.0], [0.0, 1.0]]
    )
    assert clip_halfplane(square, np.array([1.0, 0.0]), -1.0).shape == (0, 2)


def test_unknown_ids_raise() -> None:
    mesh = quad_grid(1, 1)
    with pytest.raises(MeshError, match="Unknown element"):
        mesh.element(99)
    with pytest.raises(MeshError, match="Unknown node"):
        mesh.rows([42])
