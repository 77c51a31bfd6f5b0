"""Helpers for polysfem."""

from __future__ import annotations

import os
import tempfile
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path

import numpy as np


def cross2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Scalar 2D cross product, broadcasting over leading axes."""
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def polygon_signed_area(xy: np.ndarray) -> float:
    """Shoelace area; positive for counterclockwise loops."""
    x, y = xy[:, 0], xy[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_area_centroid(xy: np.ndarray) -> tuple[float, np.ndarray]:
    """Signed area and area centroid of a simple polygon."""
    nxt = np.roll(xy, -1, axis=0)
    cross = cross2(xy, nxt)
    area = 0.5 * float(cross.sum())
    if area == 0.0:
        return 0.0, xy.mean(axis=0)
    centroid = ((xy + nxt) * cross[:, None]).sum(axis=0) / (6.0 * area)
    return area, centroid


def polygon_turns(xy: np.ndarray) -> np.ndarray:
    """Cross products of consecutive edges at every vertex."""
    incoming = xy - np.roll(xy, 1, axis=0)
    outgoing = np.roll(xy, -1, axis=0) - xy
    return cross2(incoming, outgoing)


def edge_normals(xy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unit outward normals and lengths of the edges (v_i, v_i+1) of a CCW polygon."""
    edges = np.roll(xy, -1, axis=0) - xy
    lengths = np.linalg.norm(edges, axis=1)
    normals = np.column_stack([edges[:, 1], -edges[:, 0]]) / lengths[:, None]
    return normals, lengths


def newell_normal(points: np.ndarray) -> np.ndarray:
    """Area vector of a planar polygon loop in 3D (right-hand rule)."""
    nxt = np.roll(points, -1, axis=0)
    return 0.5 * np.cross(points, nxt).sum(axis=0)


def face_frame(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Origin and orthonormal in-plane basis (2, 3) of a face, with e1 x e2 along its normal."""
    normal = newell_normal(points)
    normal = normal / np.linalg.norm(normal)
    origin = points.mean(axis=0)
    e1 = points[0] - origin
    e1 = e1 - np.dot(e1, normal) * normal
    e1 = e1 / np.linalg.norm(e1)
    e2 = np.cross(normal, e1)
    return origin, np.vstack([e1, e2])


def diameter(points: np.ndarray) -> float:
    """Largest distance between two points of the set."""
    diff = points[:, None, :] - points[None, :, :]
    return float(np.sqrt((diff**2).sum(axis=-1)).max())


@contextmanager
def atomic_path(path: str | os.PathLike[str]) -> Iterator[Path]:
    """Yield a temporary path next to `path`; move it into place on success."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(
        prefix=f".{target.stem}.", suffix=target.suffix, dir=target.parent
    )
    os.close(fd)
    tmp_path = Path(tmp)
    try:
        yield tmp_path
        os.replace(tmp_path, target)
    finally:
        if tmp_path.exists():
            tmp_path.unlink()


def atomic_write_text(path: str | os.PathLike[str], text: str) -> None:
    """Write text atomically (temporary file, then rename)."""
    with atomic_path(path) as tmp:
        tmp.write_text(text, encoding="utf-8", newline="\n")
