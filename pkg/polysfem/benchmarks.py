"""Closed-form elasticity solutions, error norms and convergence rates."""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from typing import TYPE_CHECKING

import numpy as np

from .const import (
    H1_CELL_ORDER,
    L2_ERROR_ORDER,
    MIN_RATE_LEVELS,
    PROBLEM_CANTILEVER_2D,
    PROBLEM_CANTILEVER_3D,
    PROBLEM_CUBE_BODY,
    PROBLEM_PATCH,
    PROBLEM_PATCH_3D,
    PROBLEM_PLATE_HOLE,
    SERIES_TERMS,
)
from .elasticity import Material, PlaneModel, d_matrix, volume_points
from .exceptions import BenchmarkError
from .inp_io import Method
from .quadrature import map_rule, simplex_rule
from .smoothing import build_subcells
from .wachspress import basis_for

if TYPE_CHECKING:
    from .inp_io import Model
    from .mesh_core import Mesh
    from .system import SolutionField

_LOGGER = logging.getLogger(__name__)

Field = Callable[[np.ndarray], np.ndarray]

# Hole chords dip below r = a by their sagitta; points deeper than this
# fraction of the radius mean a wrong domain.
_CHORD_CAP_DEPTH = 0.25
_CONSISTENCY_POINTS = 100
_FD_STEP = 1e-5


class Problem(StrEnum):
    PATCH = PROBLEM_PATCH
    PATCH_3D = PROBLEM_PATCH_3D
    CANTILEVER_2D = PROBLEM_CANTILEVER_2D
    PLATE_HOLE = PROBLEM_PLATE_HOLE
    CUBE_BODY = PROBLEM_CUBE_BODY
    CANTILEVER_3D = PROBLEM_CANTILEVER_3D


@dataclass(frozen=True)
class AnalyticalSolution:
    """Exact displacement and stress fields, vectorised over points (m, d)."""

    problem: Problem
    material: Material
    displacement: Field
    stress: Field
    parameters: dict[str, float] = field(default_factory=dict)
    body_force: tuple[float, ...] | None = None

    @property
    def dim(self) -> int:
        return self.material.dim

    def strain(self, points: np.ndarray) -> np.ndarray:
        """Voigt strain with engineering shears, from the compliance."""
        return np.linalg.solve(d_matrix(self.material), self.stress(points).T).T

    def check_consistency(
        self, rng_seed: int = 0, lower: Sequence[float] | None = None, upper: Sequence[float] | None = None
    ) -> float:
        """Largest relative mismatch between strain and the symmetric gradient of displacement."""
        rng = np.random.default_rng(rng_seed)
        lo = np.asarray(lower if lower is not None else np.zeros(self.dim), dtype=float)
        hi = np.asarray(upper if upper is not None else np.ones(self.dim), dtype=float)
        points = lo + rng.random((_CONSISTENCY_POINTS, self.dim)) * (hi - lo)
        numeric = symmetric_gradient(self.displacement, points)
        exact = self.strain(points)
        scale = max(float(np.abs(exact).max()), 1e-300)
        return float(np.abs(numeric - exact).max() / scale)


def _columns(points: np.ndarray) -> tuple[np.ndarray, ...]:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    return tuple(points[:, k] for k in range(points.shape[1]))


def symmetric_gradient(displacement: Field, points: np.ndarray, step: float = _FD_STEP) -> np.ndarray:
    """Voigt strain of a displacement field by central differences."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    dim = points.shape[1]
    grad = np.empty((len(points), dim, dim))
    for k in range(dim):
        shift = np.zeros(dim)
        shift[k] = step
        grad[:, :, k] = (displacement(points + shift) - displacement(points - shift)) / (2 * step)
    if dim == 2:  # noqa: PLR2004
        return np.column_stack([grad[:, 0, 0], grad[:, 1, 1], grad[:, 0, 1] + grad[:, 1, 0]])
    return np.column_stack(
        [
            grad[:, 0, 0],
            grad[:, 1, 1],
            grad[:, 2, 2],
            grad[:, 0, 1] + grad[:, 1, 0],
            grad[:, 1, 2] + grad[:, 2, 1],
            grad[:, 2, 0] + grad[:, 0, 2],
        ]
    )


def divergence(stress: Field, points: np.ndarray, step: float = _FD_STEP) -> np.ndarray:
    """div(sigma) of a Voigt stress field by central differences, (m, d)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    dim = points.shape[1]
    # tensor component (i, j) -> Voigt row
    voigt = (
        [[0, 2], [2, 1]] if dim == 2 else [[0, 3, 5], [3, 1, 4], [5, 4, 2]]  # noqa: PLR2004
    )
    result = np.zeros((len(points), dim))
    for j in range(dim):
        shift = np.zeros(dim)
        shift[j] = step
        derivative = (stress(points + shift) - stress(points - shift)) / (2 * step)
        for i in range(dim):
            result[:, i] += derivative[:, voigt[i][j]]
    return result


# ─── Exact solutions ──────────────────────────────────────────────────────────

# Affine patch fields: u = constant + gradient @ x
_PATCH_2D = (np.array([0.1, 0.05]), np.array([[0.2, 0.3], [-0.1, 0.2]]))
_PATCH_3D = (
    np.array([0.1, 0.05, -0.05]),
    np.array([[0.2, 0.3, 0.1], [-0.1, 0.2, 0.15], [0.1, -0.2, 0.25]]),
)


def patch_exact(dim: int = 2, E: float = 1.0, nu: float = 0.3) -> AnalyticalSolution:  # noqa: N803
    """Affine displacement with constant stress and no body force."""
    if dim == 2:  # noqa: PLR2004
        constant, grad = _PATCH_2D
        material = Material(E, nu, PlaneModel.PLANE_STRESS)
        strain = np.array([grad[0, 0], grad[1, 1], grad[0, 1] + grad[1, 0]])
        problem = Problem.PATCH
    elif dim == 3:  # noqa: PLR2004
        constant, grad = _PATCH_3D
        material = Material(E, nu, PlaneModel.SOLID_3D)
        strain = np.array(
            [
                grad[0, 0],
                grad[1, 1],
                grad[2, 2],
                grad[0, 1] + grad[1, 0],
                grad[1, 2] + grad[2, 1],
                grad[2, 0] + grad[0, 2],
            ]
        )
        problem = Problem.PATCH_3D
    else:
        raise BenchmarkError(f"Patch field needs dim 2 or 3, got {dim}")
    sigma = d_matrix(material) @ strain

    def displacement(points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return constant + points @ grad.T

    def stress(points: np.ndarray) -> np.ndarray:
        return np.tile(sigma, (len(np.atleast_2d(points)), 1))

    return AnalyticalSolution(problem, material, displacement, stress, {"E": E, "nu": nu})


def cantilever2d_exact(
    length: float = 8.0,
    depth: float = 4.0,
    load: float = 250.0,
    E: float = 3.0e7,  # noqa: N803
    nu: float = 0.3,
) -> AnalyticalSolution:
    """End-loaded plane-stress cantilever on x in [0, L], y in [-D/2, D/2]."""
    inertia = depth**3 / 12.0
    c = load / (6.0 * E * inertia)

    def displacement(points: np.ndarray) -> np.ndarray:
        x, y = _columns(points)
        u = c * y * ((6 * length - 3 * x) * x + (2 + nu) * (y**2 - depth**2 / 4))
        v = -c * (3 * nu * y**2 * (length - x) + (4 + 5 * nu) * depth**2 * x / 4 + (3 * length - x) * x**2)
        return np.column_stack([u, v])

    def stress(points: np.ndarray) -> np.ndarray:
        x, y = _columns(points)
        sxx = load * (length - x) * y / inertia
        sxy = -load / (2 * inertia) * (depth**2 / 4 - y**2)
        return np.column_stack([sxx, np.zeros_like(x), sxy])

    return AnalyticalSolution(
        Problem.CANTILEVER_2D,
        Material(E, nu, PlaneModel.PLANE_STRESS),
        displacement,
        stress,
        {"L": length, "D": depth, "P": load, "I": inertia},
    )


def plate_hole_exact(
    radius: float = 1.0, E: float = 1000.0, nu: float = 0.3, traction: float = 1.0  # noqa: N803
) -> AnalyticalSolution:
    """Kirsch field of an infinite plane-stress plate with a hole under x tension."""
    mu = E / (2 * (1 + nu))
    kappa = (3 - nu) / (1 + nu)
    a = radius

    def polar(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x, y = _columns(points)
        r = np.hypot(x, y)
        if np.any(r < a * (1.0 - _CHORD_CAP_DEPTH)):
            raise BenchmarkError(f"Kirsch field evaluated inside the hole (r = {r.min():.6g} < {a})")
        return r, np.arctan2(y, x)

    def displacement(points: np.ndarray) -> np.ndarray:
        r, t = polar(points)
        ux = (
            r / a * (kappa + 1) * np.cos(t)
            + 2 * a / r * ((1 + kappa) * np.cos(t) + np.cos(3 * t))
            - 2 * a**3 / r**3 * np.cos(3 * t)
        )
        uy = (
            r / a * (kappa - 3) * np.sin(t)
            + 2 * a / r * ((1 - kappa) * np.sin(t) + np.sin(3 * t))
            - 2 * a**3 / r**3 * np.sin(3 * t)
        )
        return traction * a / (8 * mu) * np.column_stack([ux, uy])

    def stress(points: np.ndarray) -> np.ndarray:
        r, t = polar(points)
        q2, q4 = a**2 / r**2, a**4 / r**4
        c2, c4, s2, s4 = np.cos(2 * t), np.cos(4 * t), np.sin(2 * t), np.sin(4 * t)
        sxx = 1 - q2 * (1.5 * c2 + c4) + 1.5 * q4 * c4
        syy = -q2 * (0.5 * c2 - c4) - 1.5 * q4 * c4
        sxy = -q2 * (0.5 * s2 + s4) + 1.5 * q4 * s4
        return traction * np.column_stack([sxx, syy, sxy])

    return AnalyticalSolution(
        Problem.PLATE_HOLE,
        Material(E, nu, PlaneModel.PLANE_STRESS),
        displacement,
        stress,
        {"a": a, "sigma": traction},
    )


# Quadratic field on the cube: constant, linear (x, y, z) and quadratic
# (x^2, y^2, z^2, xy, yz, zx) coefficients per component.
_CUBE_CONSTANT = np.array([0.1, 0.15, 0.15])
_CUBE_LINEAR = np.array([[0.2, 0.2, 0.1], [0.1, 0.1, 0.2], [0.15, 0.2, 0.1]])
_CUBE_QUADRATIC = np.array(
    [
        [0.15, 0.2, 0.1, 0.15, 0.1, 0.1],
        [0.2, 0.15, 0.1, 0.2, 0.1, 0.2],
        [0.15, 0.1, 0.2, 0.1, 0.2, 0.15],
    ]
)


def cube_body_force(c: np.ndarray) -> tuple[float, float, float]:
    """Constant body force balancing the quadratic cube field for material matrix c."""
    bx = -(0.3 * c[0, 0] + 0.2 * c[0, 1] + 0.15 * c[0, 2] + 0.6 * c[3, 3] + 0.35 * c[5, 5])
    by = -(0.15 * c[0, 1] + 0.3 * c[1, 1] + 0.2 * c[1, 2] + 0.55 * c[3, 3] + 0.4 * c[4, 4])
    bz = -(0.1 * c[0, 2] + 0.1 * c[1, 2] + 0.4 * c[2, 2] + 0.3 * c[4, 4] + 0.4 * c[5, 5])
    return float(bx), float(by), float(bz)


def cube_body_exact(E: float = 1.0, nu: float = 0.3, check: bool = True) -> AnalyticalSolution:  # noqa: N803, FBT001, FBT002
    """Quadratic displacement on [0,1] x [-1,1] x [0,1] with its balancing body force."""
    material = Material(E, nu, PlaneModel.SOLID_3D)
    c = d_matrix(material)

    def displacement(points: np.ndarray) -> np.ndarray:
        x, y, z = _columns(points)
        monomials = np.column_stack([x * x, y * y, z * z, x * y, y * z, z * x])
        linear = np.column_stack([x, y, z])
        return _CUBE_CONSTANT + linear @ _CUBE_LINEAR.T + monomials @ _CUBE_QUADRATIC.T

    def gradient(points: np.ndarray) -> np.ndarray:
        x, y, z = _columns(points)
        q = _CUBE_QUADRATIC
        grad = np.empty((len(x), 3, 3))
        for i in range(3):
            grad[:, i, 0] = _CUBE_LINEAR[i, 0] + 2 * q[i, 0] * x + q[i, 3] * y + q[i, 5] * z
            grad[:, i, 1] = _CUBE_LINEAR[i, 1] + 2 * q[i, 1] * y + q[i, 3] * x + q[i, 4] * z
            grad[:, i, 2] = _CUBE_LINEAR[i, 2] + 2 * q[i, 2] * z + q[i, 4] * y + q[i, 5] * x
        return grad

    def stress(points: np.ndarray) -> np.ndarray:
        g = gradient(points)
        strain = np.column_stack(
            [
                g[:, 0, 0],
                g[:, 1, 1],
                g[:, 2, 2],
                g[:, 0, 1] + g[:, 1, 0],
                g[:, 1, 2] + g[:, 2, 1],
                g[:, 2, 0] + g[:, 0, 2],
            ]
        )
        return strain @ c.T

    solution = AnalyticalSolution(
        Problem.CUBE_BODY,
        material,
        displacement,
        stress,
        {"E": E, "nu": nu},
        cube_body_force(c),
    )
    if check:
        check_equilibrium(solution, lower=(0.0, -1.0, 0.0), upper=(1.0, 1.0, 1.0))
    return solution


def check_equilibrium(
    solution: AnalyticalSolution,
    lower: Sequence[float],
    upper: Sequence[float],
    tolerance: float = 1e-8,
    rng_seed: int = 0,
) -> None:
    """Raise BenchmarkError unless -div(sigma) equals the body force at random points."""
    rng = np.random.default_rng(rng_seed)
    lo, hi = np.asarray(lower, dtype=float), np.asarray(upper, dtype=float)
    points = lo + rng.random((_CONSISTENCY_POINTS, len(lo))) * (hi - lo)
    body = np.zeros(len(lo)) if solution.body_force is None else np.asarray(solution.body_force)
    mismatch = np.abs(-divergence(solution.stress, points) - body).max()
    scale = max(float(np.abs(body).max()), 1.0)
    if mismatch > tolerance * scale:
        raise BenchmarkError(
            f"{solution.problem}: body force does not balance the stress field "
            f"(mismatch {mismatch:.3e})"
        )


def cantilever3d_exact(
    length: float = 5.0,
    half_width: float = 1.0,
    half_depth: float = 1.0,
    load: float = 1.0,
    E: float = 1.0,  # noqa: N803
    nu: float = 0.3,
    series_terms: int = SERIES_TERMS,
) -> AnalyticalSolution:
    """Shear-loaded prismatic bar on [-a, a] x [-b, b] x [0, L] (series solution)."""
    if series_terms < 1:
        raise BenchmarkError(f"series_terms must be >= 1, got {series_terms}")
    a, b, F = half_width, half_depth, load  # noqa: N806
    inertia = 4 * a * b**3 / 3
    n = np.arange(1, series_terms + 1, dtype=float)
    sign = (-1.0) ** n

    def series(x: np.ndarray, y: np.ndarray, power: int, trig: Callable, hyper: Callable) -> np.ndarray:
        k = n * np.pi / a
        # sinh/cosh(k y) / cosh(k b) evaluated as exp differences to avoid overflow
        ratio = hyper(np.outer(y, k), k * b)
        return (trig(np.outer(x, k)) * ratio) @ (sign / n**power)

    def sinh_ratio(ky: np.ndarray, kb: np.ndarray) -> np.ndarray:
        return (np.exp(ky - kb) - np.exp(-ky - kb)) / (1 + np.exp(-2 * kb))

    def cosh_ratio(ky: np.ndarray, kb: np.ndarray) -> np.ndarray:
        return (np.exp(ky - kb) + np.exp(-ky - kb)) / (1 + np.exp(-2 * kb))

    def displacement(points: np.ndarray) -> np.ndarray:
        x, y, z = _columns(points)
        c = F / (E * inertia)
        u = -nu * c * x * y * z
        v = c * (nu * (x**2 - y**2) * z / 2 - z**3 / 6)
        w = c * (
            y * (nu * x**2 + z**2) / 2
            + nu * y**3 / 6
            + (1 + nu) * (b**2 * y - y**3 / 3)
            - nu * a**2 * y / 3
            - 4 * nu * a**3 / np.pi**3 * series(x, y, 3, np.cos, sinh_ratio)
        )
        return np.column_stack([u, v, w])

    def stress(points: np.ndarray) -> np.ndarray:
        x, y, z = _columns(points)
        zero = np.zeros_like(x)
        szz = F * y * z / inertia
        sxz = 2 * a**2 * nu * F / (np.pi**2 * inertia * (1 + nu)) * series(x, y, 2, np.sin, sinh_ratio)
        syz = (b**2 - y**2) * F / (2 * inertia) + nu * F / (inertia * (1 + nu)) * (
            (3 * x**2 - a**2) / 6 - 2 * a**2 / np.pi**2 * series(x, y, 2, np.cos, cosh_ratio)
        )
        return np.column_stack([zero, zero, szz, zero, syz, sxz])

    return AnalyticalSolution(
        Problem.CANTILEVER_3D,
        Material(E, nu, PlaneModel.SOLID_3D),
        displacement,
        stress,
        {"L": length, "a": a, "b": b, "F": F, "I": inertia, "N": float(series_terms)},
    )


def shear_resultant(solution: AnalyticalSolution, z: float = 0.0, points_per_axis: int = 128) -> float:
    """Integral of sigma_yz over the cross-section at height z (Gauss-Legendre)."""
    a, b = solution.parameters["a"], solution.parameters["b"]
    x, w = np.polynomial.legendre.leggauss(points_per_axis)
    xx, yy = np.meshgrid(a * x, b * x, indexing="ij")
    ww = np.outer(a * w, b * w)
    points = np.column_stack([xx.ravel(), yy.ravel(), np.full(xx.size, z)])
    return float(solution.stress(points)[:, 4] @ ww.ravel())


EXACT_SOLUTIONS: dict[Problem, Callable[[], AnalyticalSolution]] = {
    Problem.PATCH: lambda: patch_exact(2),
    Problem.PATCH_3D: lambda: patch_exact(3),
    Problem.CANTILEVER_2D: cantilever2d_exact,
    Problem.PLATE_HOLE: plate_hole_exact,
    Problem.CUBE_BODY: cube_body_exact,
    Problem.CANTILEVER_3D: cantilever3d_exact,
}


# ─── Error norms ──────────────────────────────────────────────────────────────


def l2_error(
    mesh: Mesh,
    displacements: np.ndarray,
    exact: Field,
    order: int = L2_ERROR_ORDER,
) -> float:
    """Relative L2 error of the Wachspress-interpolated nodal field."""
    nodal = np.asarray(displacements, dtype=float).reshape(len(mesh.nodes), mesh.dim)
    numerator = denominator = 0.0
    for elem in mesh.elements:
        provider = basis_for(mesh, elem)
        points, weights = volume_points(mesh, elem, order, provider)
        uh = provider.values(points) @ nodal[mesh.rows(elem.vertex_ids)]
        u = exact(points)
        numerator += float(weights @ ((u - uh) ** 2).sum(axis=1))
        denominator += float(weights @ (u**2).sum(axis=1))
    if denominator == 0.0:
        raise BenchmarkError("Exact displacement has zero L2 norm")
    return math.sqrt(numerator / denominator)


def _energy(diff: np.ndarray, d: np.ndarray) -> np.ndarray:
    return np.einsum("qi,ij,qj->q", diff, d, diff)


def h1_energy_error(
    model: Model,
    solution: SolutionField,
    exact_strain: Field,
    order: int = H1_CELL_ORDER,
) -> float:
    """Relative energy-norm error of the recovered strains.

    Cell-constant smoothed strains are compared with the exact strain by an
    order-`order` rule on each subcell; compatible strains are compared at the
    quadrature points they were computed at.
    """
    mesh = model.mesh
    numerator = denominator = 0.0
    if solution.method is Method.PFEM:
        exact = exact_strain(solution.points)
        for elem in mesh.elements:
            rows = solution.owners == elem.id
            d = d_matrix(model.material_for(elem.id))
            diff = exact[rows] - solution.strains[rows]
            numerator += float(solution.weights[rows] @ _energy(diff, d))
            denominator += float(solution.weights[rows] @ _energy(exact[rows], d))
    else:
        rule = simplex_rule(mesh.dim, order)
        offset = 0
        for elem in mesh.elements:
            d = d_matrix(model.material_for(elem.id))
            for cell in build_subcells(mesh, elem):
                points, weights = map_rule(rule, cell.vertices)
                exact = exact_strain(points)
                diff = exact - solution.strains[offset]
                numerator += float(weights @ _energy(diff, d))
                denominator += float(weights @ _energy(exact, d))
                offset += 1
    if denominator == 0.0:
        raise BenchmarkError("Exact strain has zero energy")
    return math.sqrt(numerator / denominator)


# ─── Convergence ──────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class LevelResult:
    level: int
    elements: int
    ndof: int
    h: float
    l2: float
    h1: float
    integration_points: int = 0
    seconds: float = 0.0


@dataclass(frozen=True)
class RateFit:
    slope: float
    monotone: bool


@dataclass
class ConvergenceReport:
    problem: str
    method: str
    levels: list[LevelResult] = field(default_factory=list)

    @property
    def l2_rate(self) -> RateFit:
        return convergence_rate([r.h for r in self.levels], [r.l2 for r in self.levels])

    @property
    def h1_rate(self) -> RateFit:
        return convergence_rate([r.h for r in self.levels], [r.h1 for r in self.levels])

    @property
    def seconds(self) -> float:
        """Wall time spent solving and measuring all levels."""
        return sum(r.seconds for r in self.levels)


def mesh_size(measure: float, elements: int, dim: int) -> float:
    return (measure / elements) ** (1.0 / dim)


def convergence_rate(h: Sequence[float], errors: Sequence[float]) -> RateFit:
    """Least-squares slope of log(error) against log(h)."""
    if len(h) != len(errors) or len(h) < MIN_RATE_LEVELS:
        raise BenchmarkError(
            f"Need matching sequences of at least {MIN_RATE_LEVELS} levels, got {len(h)}"
        )
    h_arr, e_arr = np.asarray(h, dtype=float), np.asarray(errors, dtype=float)
    if np.any(h_arr <= 0.0) or np.any(e_arr <= 0.0):
        raise BenchmarkError("Mesh sizes and errors must be positive")
    order = np.argsort(-h_arr)
    monotone = bool(np.all(np.diff(e_arr[order]) < 0.0))
    if not monotone:
        _LOGGER.warning("Errors %s do not decrease monotonically under refinement", e_arr[order])
    slope = float(np.polyfit(np.log(h_arr), np.log(e_arr), 1)[0])
    return RateFit(slope, monotone)
