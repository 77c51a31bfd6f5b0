"""Geometry and file helper tests.

Features: cross_cutting
See: docs/FEATURES.md#cross-cutting-tests
"""

from __future__ import annotations

import numpy as np
import pytest

from polysfem.helpers import (
    atomic_path,
    atomic_write_text,
    diameter,
    edge_normals,
    face_frame,
    newell_normal,
    polygon_area_centroid,
    polygon_signed_area,
    polygon_turns,
)

pytestmark = pytest.mark.feature("cross_cutting")

SQUARE = np.array([[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]])


def test_signed_area_follows_orientation() -> None:
    assert polygon_signed_area(SQUARE) == pytest.approx(4.0)
    assert polygon_signed_area(SQUARE[::-1]) == pytest.approx(-4.0)


def test_area_centroid() -> None:
    triangle = np.array([[0.0, 0.0], [3.0, 0.0], [0.0, 3.0]])
    area, centroid = polygon_area_centroid(triangle)
    assert area == pytest.approx(4.5)
    np.testing.assert_allclose(centroid, [1.0, 1.0])
    collinear = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    area, centroid = polygon_area_centroid(collinear)
    assert area == 0.0
    np.testing.assert_allclose(centroid, [1.0, 0.0])


def test_turns_detect_reflex_vertices() -> None:
    dart = np.array([[0.0, 0.0], [2.0, 1.0], [0.0, 2.0], [0.5, 1.0]])
    assert (polygon_turns(SQUARE) > 0).all()
    assert (polygon_turns(dart) < 0).tolist() == [False, False, False, True]


def test_edge_normals_point_outward() -> None:
    normals, lengths = edge_normals(SQUARE)
    np.testing.assert_allclose(normals, [[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])
    np.testing.assert_allclose(lengths, 2.0)


def test_face_frame_is_orthonormal() -> None:
    face = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 1.0], [0.0, 1.0, 1.0]])
    np.testing.assert_allclose(newell_normal(face), [0.0, 0.0, 1.0])
    origin, basis = face_frame(face)
    np.testing.assert_allclose(origin, [0.5, 0.5, 1.0])
    np.testing.assert_allclose(basis @ basis.T, np.eye(2), atol=1e-15)
    np.testing.assert_allclose(np.cross(basis[0], basis[1]), [0.0, 0.0, 1.0], atol=1e-15)


def test_diameter() -> None:
    assert diameter(SQUARE) == pytest.approx(np.sqrt(8.0))


def test_atomic_write_creates_parents(tmp_path) -> None:
    target = tmp_path / "nested" / "out.csv"
    atomic_write_text(target, "a,b\n")
    assert target.read_text(encoding="utf-8") == "a,b\n"
    assert [p.name for p in target.parent.iterdir()] == ["out.csv"]


def test_atomic_path_leaves_target_on_failure(tmp_path) -> None:
    target = tmp_path / "out.vtk"
    target.write_text("old", encoding="utf-8")
    with pytest.raises(RuntimeError), atomic_path(target) as tmp:
        tmp.write_text("new", encoding="utf-8")
        raise RuntimeError
    assert target.read_text(encoding="utf-8") == "old"
    assert [p.name for p in tmp_path.iterdir()] == ["out.vtk"]
