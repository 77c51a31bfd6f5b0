"""Wachspress barycentric coordinates on convex polygons and simple polyhedra.

Interior points use the rational form w_v / sum(w). Points on the boundary
(some h_f below ON_BOUNDARY_TOL times the diameter) take the continuous
extension: linear interpolation along a polygon edge, and the planar
Wachspress coordinates of the face for a polyhedron.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Protocol

import numpy as np

from .const import ON_BOUNDARY_TOL
from .exceptions import BasisError
from .helpers import diameter, edge_normals, face_frame, newell_normal, polygon_signed_area

if TYPE_CHECKING:
    from collections.abc import Sequence

    from .mesh_core import Mesh, PolyElement

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class BasisEval:
    """Shape function values (n,) and optional gradients (n, d) at one point."""

    values: np.ndarray
    gradients: np.ndarray | None = None


class BasisProvider(Protocol):
    """Evaluates the element shape functions at many points per call."""

    coords: np.ndarray
    dim: int
    size: float
    tol: float

    def distances(self, points: np.ndarray) -> np.ndarray: ...

    def values(self, points: np.ndarray) -> np.ndarray: ...

    def gradients(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]: ...


def _rational(
    weights_num: np.ndarray, log_grad: np.ndarray | None
) -> tuple[np.ndarray, np.ndarray | None]:
    """Normalise weights (m, n); gradients from d(log w)/dx of shape (m, n, d)."""
    phi = weights_num / weights_num.sum(axis=1, keepdims=True)
    if log_grad is None:
        return phi, None
    mean = np.einsum("mn,mnd->md", phi, log_grad)
    grad = phi[:, :, None] * (log_grad - mean[:, None, :])
    return phi, grad


class WachspressPolygon:
    """Wachspress coordinates of a convex counterclockwise polygon."""

    dim = 2

    def __init__(self, coords: np.ndarray) -> None:
        coords = np.asarray(coords, dtype=float)
        if coords.ndim != 2 or coords.shape[1] != 2 or len(coords) < 3:  # noqa: PLR2004
            raise BasisError(f"Need a planar polygon with >= 3 vertices, got {coords.shape}")
        if polygon_signed_area(coords) <= 0.0:
            raise BasisError("Polygon must be counterclockwise with positive area")
        self.coords = coords
        self.size = diameter(coords)
        self.tol = ON_BOUNDARY_TOL * self.size
        # edge k joins vertex k to vertex k+1
        self.normals, self.lengths = edge_normals(coords)
        prev = np.roll(self.normals, 1, axis=0)
        self.corner = prev[:, 0] * self.normals[:, 1] - prev[:, 1] * self.normals[:, 0]

    def distances(self, points: np.ndarray) -> np.ndarray:
        """Signed distances h (m, n) to each edge line; positive inside."""
        return np.einsum("nd,nd->n", self.coords, self.normals)[None, :] - points @ self.normals.T

    def _classify(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        h = self.distances(points)
        if np.any(h < -self.tol):
            worst = int(np.argmin(h.min(axis=1)))
            raise BasisError(f"Point {points[worst].tolist()} lies outside the polygon")
        return h, h.min(axis=1) < self.tol

    def _on_edges(self, points: np.ndarray, h: np.ndarray) -> np.ndarray:
        count = len(self.coords)
        edge = np.argmin(np.abs(h), axis=1)
        start, end = self.coords[edge], self.coords[(edge + 1) % count]
        span = end - start
        t = np.einsum("md,md->m", points - start, span) / np.einsum("md,md->m", span, span)
        t = np.clip(t, 0.0, 1.0)
        phi = np.zeros((len(points), count))
        rows = np.arange(len(points))
        phi[rows, edge] = 1.0 - t
        phi[rows, (edge + 1) % count] += t
        return phi

    def values(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        h, boundary = self._classify(points)
        phi = np.empty((len(points), len(self.coords)))
        inner = ~boundary
        if inner.any():
            hi = h[inner]
            weights = self.corner[None, :] / (np.roll(hi, 1, axis=1) * hi)
            phi[inner] = _rational(weights, None)[0]
        if boundary.any():
            phi[boundary] = self._on_edges(points[boundary], h[boundary])
        return phi

    def gradients(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Values (m, n) and gradients (m, n, 2) at strictly interior points."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        h, boundary = self._classify(points)
        if boundary.any():
            raise BasisError(
                f"Gradient requested on the boundary at {points[boundary][0].tolist()}"
            )
        weights = self.corner[None, :] / (np.roll(h, 1, axis=1) * h)
        ratio = self.normals[None, :, :] / h[:, :, None]
        log_grad = np.roll(ratio, 1, axis=1) + ratio
        phi, grad = _rational(weights, log_grad)
        return phi, grad


class WachspressPolyhedron:
    """Wachspress coordinates of a convex polyhedron whose vertices each touch three faces."""

    dim = 3

    def __init__(self, coords: np.ndarray, faces: Sequence[Sequence[int]]) -> None:
        coords = np.asarray(coords, dtype=float)
        self.coords = coords
        self.faces = tuple(tuple(int(k) for k in face) for face in faces)
        self.size = diameter(coords)
        self.tol = ON_BOUNDARY_TOL * self.size
        normals = []
        for face in self.faces:
            area = newell_normal(coords[list(face)])
            norm = np.linalg.norm(area)
            if norm == 0.0:
                raise BasisError(f"Face {face} has zero area")
            normals.append(area / norm)
        self.normals = np.array(normals)
        self.anchors = np.array([coords[list(face)].mean(axis=0) for face in self.faces])

        incident: list[list[int]] = [[] for _ in range(len(coords))]
        for f, face in enumerate(self.faces):
            for v in face:
                incident[v].append(f)
        triples = []
        dets = []
        for v, fs in enumerate(incident):
            if len(fs) != 3:  # noqa: PLR2004
                raise BasisError(
                    f"Vertex {v} has {len(fs)} incident faces; Wachspress needs exactly 3"
                )
            det = float(np.linalg.det(self.normals[fs]))
            if det < 0.0:
                fs = [fs[0], fs[2], fs[1]]
                det = -det
            triples.append(fs)
            dets.append(det)
        self.triples = np.array(triples, dtype=int)
        self.dets = np.array(dets)
        self._face_bases: dict[int, tuple[np.ndarray, np.ndarray, WachspressPolygon]] = {}

    def distances(self, points: np.ndarray) -> np.ndarray:
        """Signed distances h (m, faces) to each face plane; positive inside."""
        return np.einsum("fd,fd->f", self.anchors, self.normals)[None, :] - points @ self.normals.T

    def _classify(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        h = self.distances(points)
        if np.any(h < -self.tol):
            worst = int(np.argmin(h.min(axis=1)))
            raise BasisError(f"Point {points[worst].tolist()} lies outside the polyhedron")
        return h, h.min(axis=1) < self.tol

    def face_basis(self, f: int) -> tuple[np.ndarray, np.ndarray, WachspressPolygon]:
        """Frame origin, in-plane axes and planar Wachspress provider of face f."""
        if f not in self._face_bases:
            loop = self.coords[list(self.faces[f])]
            origin, axes = face_frame(loop)
            self._face_bases[f] = (origin, axes, WachspressPolygon((loop - origin) @ axes.T))
        return self._face_bases[f]

    def _on_faces(self, points: np.ndarray, h: np.ndarray) -> np.ndarray:
        phi = np.zeros((len(points), len(self.coords)))
        nearest = np.argmin(np.abs(h), axis=1)
        for f in np.unique(nearest):
            rows = np.flatnonzero(nearest == f)
            origin, axes, polygon = self.face_basis(int(f))
            local = (points[rows] - origin) @ axes.T
            phi[np.ix_(rows, list(self.faces[f]))] = polygon.values(local)
        return phi

    def _weights(self, h: np.ndarray) -> np.ndarray:
        return self.dets[None, :] / h[:, self.triples].prod(axis=2)

    def values(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        h, boundary = self._classify(points)
        phi = np.empty((len(points), len(self.coords)))
        inner = ~boundary
        if inner.any():
            phi[inner] = _rational(self._weights(h[inner]), None)[0]
        if boundary.any():
            phi[boundary] = self._on_faces(points[boundary], h[boundary])
        return phi

    def gradients(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Values (m, n) and gradients (m, n, 3) at strictly interior points."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        h, boundary = self._classify(points)
        if boundary.any():
            raise BasisError(
                f"Gradient requested on the boundary at {points[boundary][0].tolist()}"
            )
        ratio = self.normals[None, :, :] / h[:, :, None]
        log_grad = ratio[:, self.triples, :].sum(axis=2)
        return _rational(self._weights(h), log_grad)


def basis_for(mesh: Mesh, elem: PolyElement) -> BasisProvider:
    """Shape function provider for one mesh element."""
    coords = mesh.element_coords(elem)
    if mesh.dim == 2:  # noqa: PLR2004
        return WachspressPolygon(coords)
    return WachspressPolyhedron(coords, mesh.local_faces(elem))


def shape_2d(coords: np.ndarray, x: Sequence[float]) -> BasisEval:
    """Wachspress values of a convex polygon at one point of its closure."""
    return BasisEval(WachspressPolygon(coords).values(np.asarray(x, dtype=float))[0])


def shape_3d(
    coords: np.ndarray, faces: Sequence[Sequence[int]], x: Sequence[float]
) -> BasisEval:
    """Wachspress values of a convex polyhedron at one point of its closure."""
    provider = WachspressPolyhedron(coords, faces)
    return BasisEval(provider.values(np.asarray(x, dtype=float))[0])


def grad_shape(
    coords: np.ndarray,
    x: Sequence[float],
    faces: Sequence[Sequence[int]] | None = None,
) -> BasisEval:
    """Values and gradients at a strictly interior point; `faces` selects 3D."""
    provider: BasisProvider = (
        WachspressPolygon(coords) if faces is None else WachspressPolyhedron(coords, faces)
    )
    phi, grad = provider.gradients(np.asarray(x, dtype=float))
    return BasisEval(phi[0], grad[0])
