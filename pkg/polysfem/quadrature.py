"""Quadrature rules on segments, triangles and tetrahedra.

Triangle and tetrahedron rules are conical products of Gauss-Legendre and
Gauss-Jacobi rules (collapsed coordinates). They have positive weights,
strictly interior points and any requested polynomial order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


@dataclass(frozen=True)
class QuadratureRule:
    """Reference rule: points in local coordinates, weights summing to the reference measure."""

    points: np.ndarray
    weights: np.ndarray
    order: int

    @property
    def size(self) -> int:
        return int(self.weights.shape[0])


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array, dtype=float)
    array.setflags(write=False)
    return array


def points_for_order(order: int) -> int:
    """Gauss points per direction that integrate degree `order` exactly."""
    return max(1, math.ceil((order + 1) / 2))


@lru_cache(maxsize=32)
def gauss_line(n_points: int) -> QuadratureRule:
    """Gauss-Legendre rule on [0, 1]."""
    x, w = roots_legendre(n_points)
    return QuadratureRule(
        points=_frozen(((x + 1.0) / 2.0)[:, None]),
        weights=_frozen(w / 2.0),
        order=2 * n_points - 1,
    )


def _jacobi01(n_points: int, alpha: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Jacobi nodes on [0, 1] for the weight (1 - q)**alpha."""
    x, w = roots_jacobi(n_points, alpha, 0.0)
    return (x + 1.0) / 2.0, w / 2.0 ** (alpha + 1)


@lru_cache(maxsize=32)
def triangle_rule(order: int) -> QuadratureRule:
    """Rule on the reference triangle (0,0), (1,0), (0,1); weights sum to 1/2."""
    n = points_for_order(order)
    p, wp = gauss_line(n).points[:, 0], gauss_line(n).weights
    q, wq = _jacobi01(n, 1)
    pp, qq = np.meshgrid(p, q, indexing="ij")
    ww = np.outer(wp, wq)
    points = np.column_stack([(pp * (1.0 - qq)).ravel(), qq.ravel()])
    return QuadratureRule(points=_frozen(points), weights=_frozen(ww.ravel()), order=order)


@lru_cache(maxsize=32)
def tetrahedron_rule(order: int) -> QuadratureRule:
    """Rule on the reference tetrahedron; weights sum to 1/6."""
    n = points_for_order(order)
    p, wp = gauss_line(n).points[:, 0], gauss_line(n).weights
    q, wq = _jacobi01(n, 1)
    r, wr = _jacobi01(n, 2)
    pp, qq, rr = np.meshgrid(p, q, r, indexing="ij")
    ww = wp[:, None, None] * wq[None, :, None] * wr[None, None, :]
    points = np.column_stack(
        [
            (pp * (1.0 - qq) * (1.0 - rr)).ravel(),
            (qq * (1.0 - rr)).ravel(),
            rr.ravel(),
        ]
    )
    return QuadratureRule(points=_frozen(points), weights=_frozen(ww.ravel()), order=order)


@lru_cache(maxsize=1)
def symmetric_triangle_rule() -> QuadratureRule:
    """Three-point symmetric rule, exact for quadratics."""
    points = np.array([[2 / 3, 1 / 6], [1 / 6, 2 / 3], [1 / 6, 1 / 6]])
    return QuadratureRule(
        points=_frozen(points), weights=_frozen(np.full(3, 1 / 6)), order=2
    )


def simplex_rule(dim: int, order: int) -> QuadratureRule:
    """Reference rule on the `dim`-simplex."""
    if dim == 1:
        return gauss_line(points_for_order(order))
    if dim == 2:  # noqa: PLR2004
        return triangle_rule(order)
    if dim == 3:  # noqa: PLR2004
        return tetrahedron_rule(order)
    raise ValueError(f"No simplex rule for dimension {dim}")


def simplex_measure(vertices: np.ndarray) -> float:
    """Unsigned measure of a k-simplex embedded in any ambient dimension."""
    vertices = np.asarray(vertices, dtype=float)
    jac = (vertices[1:] - vertices[0]).T
    k = jac.shape[1]
    gram = jac.T @ jac
    return math.sqrt(max(np.linalg.det(gram), 0.0)) / math.factorial(k)


def map_rule(rule: QuadratureRule, vertices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map a reference simplex rule onto the simplex with the given vertices.

    Returns physical points (m, d) and weights (m,) summing to the simplex
    measure.
    """
    vertices = np.asarray(vertices, dtype=float)
    k = vertices.shape[0] - 1
    edges = vertices[1:] - vertices[0]
    points = vertices[0] + rule.points @ edges
    scale = simplex_measure(vertices) * math.factorial(k)
    return points, rule.weights * scale
