"""Polytope mesh model, validation, Voronoi generation and extrusion."""

from __future__ import annotations

import logging
import math
from collections import Counter, defaultdict
from collections.abc import Callable, Iterable
from dataclasses import dataclass
from enum import StrEnum
from functools import cached_property

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import QhullError, Voronoi, cKDTree

from .const import (
    CONVEXITY_TOL,
    DEFAULT_LLOYD_ITERATIONS,
    DEFAULT_SEED,
    DEGENERATE_MEASURE_TOL,
    HOLE_TOL,
    MIN_ELEMENTS,
    PLANARITY_TOL,
    SHORT_EDGE_TOL,
    TILING_TOL,
    WELD_TOL,
)
from .exceptions import MeshError
from .helpers import (
    diameter,
    newell_normal,
    polygon_area_centroid,
    polygon_signed_area,
    polygon_turns,
)

_LOGGER = logging.getLogger(__name__)

# Seeds closer than this many cell sizes to the hole are mirrored across it.
_HOLE_REFLECTION_FACTOR = 1.5
# Real seeds are kept at least this many cell sizes outside the hole.
_HOLE_SEED_MARGIN = 0.1


@dataclass(frozen=True)
class Node:
    id: int
    coords: tuple[float, ...]


@dataclass(frozen=True)
class PolyElement:
    """Polygon (vertex loop, counterclockwise) or polyhedron (vertices plus outward face loops)."""

    id: int
    vertex_ids: tuple[int, ...]
    faces: tuple[tuple[int, ...], ...] = ()

    @property
    def node_count(self) -> int:
        return len(self.vertex_ids)


@dataclass(frozen=True)
class MeshViolation:
    kind: str
    message: str
    element_id: int | None = None


@dataclass(frozen=True)
class Mesh:
    """Nodes and polytope elements; immutable after construction."""

    nodes: tuple[Node, ...]
    elements: tuple[PolyElement, ...]
    dim: int

    @cached_property
    def node_index(self) -> dict[int, int]:
        """Row of each node id in `coords`."""
        return {node.id: row for row, node in enumerate(self.nodes)}

    @cached_property
    def coords(self) -> np.ndarray:
        array = np.array([node.coords for node in self.nodes], dtype=float)
        array = array.reshape(len(self.nodes), self.dim)
        array.setflags(write=False)
        return array

    @cached_property
    def _element_by_id(self) -> dict[int, PolyElement]:
        return {elem.id: elem for elem in self.elements}

    def element(self, element_id: int) -> PolyElement:
        try:
            return self._element_by_id[element_id]
        except KeyError as error:
            raise MeshError(f"Unknown element {element_id}") from error

    def rows(self, node_ids: Iterable[int]) -> np.ndarray:
        """Coordinate rows of the given node ids."""
        try:
            return np.array([self.node_index[nid] for nid in node_ids], dtype=int)
        except KeyError as error:
            raise MeshError(f"Unknown node {error.args[0]}") from error

    def element_coords(self, elem: PolyElement) -> np.ndarray:
        return self.coords[self.rows(elem.vertex_ids)]

    def local_faces(self, elem: PolyElement) -> tuple[tuple[int, ...], ...]:
        """Faces of a polyhedron as positions in its vertex list."""
        position = {nid: k for k, nid in enumerate(elem.vertex_ids)}
        try:
            return tuple(tuple(position[nid] for nid in face) for face in elem.faces)
        except KeyError as error:
            raise MeshError(
                f"Element {elem.id}: face references node {error.args[0]} "
                "outside its vertex list"
            ) from error

    def facets(self, elem: PolyElement) -> tuple[tuple[int, ...], ...]:
        """Boundary facets of an element as node-id tuples: edges in 2D, faces in 3D."""
        if self.dim == 2:  # noqa: PLR2004
            ids = elem.vertex_ids
            return tuple((ids[k], ids[(k + 1) % len(ids)]) for k in range(len(ids)))
        return elem.faces

    @cached_property
    def facet_owners(self) -> dict[tuple[int, ...], list[tuple[int, int]]]:
        """Every facet (sorted node ids) with the (element id, local facet) pairs owning it."""
        owners: dict[tuple[int, ...], list[tuple[int, int]]] = defaultdict(list)
        for elem in self.elements:
            for local, facet in enumerate(self.facets(elem)):
                owners[tuple(sorted(facet))].append((elem.id, local))
        return dict(owners)

    def boundary_facets(self) -> dict[tuple[int, ...], tuple[int, int]]:
        """Facets owned by exactly one element, keyed by sorted node ids."""
        return {
            key: owners[0]
            for key, owners in self.facet_owners.items()
            if len(owners) == 1
        }

    def is_boundary_facet(self, elem: PolyElement, local: int) -> bool:
        facet = self.facets(elem)[local]
        return len(self.facet_owners[tuple(sorted(facet))]) == 1

    @property
    def measure(self) -> float:
        return float(sum(element_measure(self, elem) for elem in self.elements))


class DomainKind(StrEnum):
    RECTANGLE = "rectangle"
    QUARTER_PLATE = "quarter_plate"
    BOX = "box"


@dataclass(frozen=True)
class DomainGeometry:
    """Benchmark domain: rectangle, quarter plate with a hole at the origin, or box."""

    kind: DomainKind
    extents: tuple[float, ...]
    origin: tuple[float, ...]
    hole_radius: float = 0.0

    def __post_init__(self) -> None:
        if any(length <= 0.0 for length in self.extents):
            raise MeshError(f"Domain lengths must be positive: {self.extents}")
        if self.kind is DomainKind.QUARTER_PLATE and not (
            0.0 < self.hole_radius < min(self.extents)
        ):
            raise MeshError(
                f"Hole radius {self.hole_radius} must lie in (0, {min(self.extents)})"
            )

    @classmethod
    def rectangle(
        cls, length: float, depth: float, origin: tuple[float, float] = (0.0, 0.0)
    ) -> DomainGeometry:
        return cls(DomainKind.RECTANGLE, (float(length), float(depth)), tuple(origin))

    @classmethod
    def quarter_plate_with_hole(cls, radius: float, side: float) -> DomainGeometry:
        return cls(
            DomainKind.QUARTER_PLATE,
            (float(side), float(side)),
            (0.0, 0.0),
            hole_radius=float(radius),
        )

    @classmethod
    def box(
        cls,
        extents: tuple[float, float, float],
        origin: tuple[float, float, float] = (0.0, 0.0, 0.0),
    ) -> DomainGeometry:
        return cls(DomainKind.BOX, tuple(float(e) for e in extents), tuple(origin))

    @property
    def dim(self) -> int:
        return 3 if self.kind is DomainKind.BOX else 2

    @property
    def measure(self) -> float:
        measure = math.prod(self.extents)
        if self.kind is DomainKind.QUARTER_PLATE:
            measure -= math.pi * self.hole_radius**2 / 4.0
        return measure

    @property
    def diameter(self) -> float:
        return math.sqrt(sum(e * e for e in self.extents))

    @property
    def lower(self) -> np.ndarray:
        return np.asarray(self.origin, dtype=float)

    @property
    def upper(self) -> np.ndarray:
        return self.lower + np.asarray(self.extents, dtype=float)

    def footprint(self) -> DomainGeometry:
        """xy rectangle of a box domain."""
        if self.kind is not DomainKind.BOX:
            return self
        return DomainGeometry.rectangle(
            self.extents[0], self.extents[1], (self.origin[0], self.origin[1])
        )

    def outline(self) -> np.ndarray:
        """Counterclockwise outer rectangle of a planar domain."""
        (x0, y0), (x1, y1) = self.lower[:2], self.upper[:2]
        return np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]], dtype=float)


# ─── Geometric queries ────────────────────────────────────────────────────────


def element_centroid(mesh: Mesh, elem: PolyElement) -> np.ndarray:
    """Geometric centre: arithmetic mean of the vertices."""
    return mesh.element_coords(elem).mean(axis=0)


def polyhedron_volume(coords: np.ndarray, faces: Iterable[Iterable[int]]) -> float:
    """Signed volume from tetrahedra joining the vertex average to face-centre fans."""
    centre = coords.mean(axis=0)
    volume = 0.0
    for face in faces:
        loop = coords[list(face)]
        mid = loop.mean(axis=0)
        nxt = np.roll(loop, -1, axis=0)
        cross = np.cross(loop - mid, nxt - mid)
        volume += float(np.einsum("ij,j->", cross, mid - centre)) / 6.0
    return volume


def element_measure(mesh: Mesh, elem: PolyElement) -> float:
    """Area (2D) or volume (3D) of an element; raises on degenerate elements."""
    coords = mesh.element_coords(elem)
    if mesh.dim == 2:  # noqa: PLR2004
        measure = polygon_signed_area(coords)
    else:
        measure = polyhedron_volume(coords, mesh.local_faces(elem))
    scale = diameter(coords) ** mesh.dim
    if measure <= DEGENERATE_MEASURE_TOL * scale:
        raise MeshError(f"Element {elem.id} is degenerate (measure {measure:.3e})")
    return measure


def boundary_node_ids(mesh: Mesh) -> list[int]:
    """Ids of all nodes lying on a boundary facet."""
    ids = {nid for key in mesh.boundary_facets() for nid in key}
    return sorted(ids)


def nodes_where(
    mesh: Mesh,
    predicate: Callable[[np.ndarray], np.ndarray],
    candidates: Iterable[int] | None = None,
) -> list[int]:
    """Ids of nodes whose coordinates satisfy a vectorised predicate."""
    ids = list(candidates) if candidates is not None else [n.id for n in mesh.nodes]
    if not ids:
        return []
    mask = np.asarray(predicate(mesh.coords[mesh.rows(ids)]), dtype=bool)
    return [nid for nid, keep in zip(ids, mask, strict=True) if keep]


# ─── Validation ───────────────────────────────────────────────────────────────


def hole_node_mask(coords: np.ndarray, domain: DomainGeometry) -> np.ndarray:
    """Rows of `coords` lying on the hole circle of a quarter plate."""
    if domain.kind is not DomainKind.QUARTER_PLATE:
        return np.zeros(len(coords), dtype=bool)
    radius = domain.hole_radius
    return np.abs(np.linalg.norm(coords[:, :2], axis=1) - radius) <= HOLE_TOL * radius


def tiling_reference(mesh: Mesh, domain: DomainGeometry) -> float:
    """Measure the elements of a conforming mesh of `domain` must add up to.

    A quarter plate is meshed with chords between nodes on the hole circle,
    so the reference is the rectangle minus the polygon through those nodes.
    """
    if domain.kind is not DomainKind.QUARTER_PLATE:
        return domain.measure
    on_hole = mesh.coords[hole_node_mask(mesh.coords, domain)]
    theta = np.sort(np.arctan2(on_hole[:, 1], on_hole[:, 0]))
    cut = 0.5 * domain.hole_radius**2 * float(np.sin(np.diff(theta)).sum())
    return math.prod(domain.extents) - cut


def _polygon_violations(elem: PolyElement, xy: np.ndarray) -> list[MeshViolation]:
    if len(xy) < 3:  # noqa: PLR2004
        return [MeshViolation("degenerate", "fewer than 3 vertices", elem.id)]
    scale = diameter(xy) ** 2
    area = polygon_signed_area(xy)
    if abs(area) <= DEGENERATE_MEASURE_TOL * scale:
        return [MeshViolation("degenerate", "zero area", elem.id)]
    if area < 0.0:
        return [MeshViolation("orientation", "vertices are clockwise", elem.id)]
    turns = polygon_turns(xy)
    if np.any(turns <= CONVEXITY_TOL * scale):
        bad = [elem.vertex_ids[k] for k in np.flatnonzero(turns <= CONVEXITY_TOL * scale)]
        return [
            MeshViolation("convexity", f"reflex or straight angle at nodes {bad}", elem.id)
        ]
    return []


def _polyhedron_violations(
    elem: PolyElement, coords: np.ndarray, faces: tuple[tuple[int, ...], ...]
) -> list[MeshViolation]:
    violations: list[MeshViolation] = []
    if len(faces) < 4:  # noqa: PLR2004
        return [MeshViolation("manifold", "fewer than 4 faces", elem.id)]
    size = diameter(coords)
    centre = coords.mean(axis=0)
    directed: Counter[tuple[int, int]] = Counter()
    for k, face in enumerate(faces):
        if len(face) < 3:  # noqa: PLR2004
            violations.append(MeshViolation("degenerate", f"face {k} has < 3 vertices", elem.id))
            continue
        loop = coords[list(face)]
        area_vector = newell_normal(loop)
        norm = np.linalg.norm(area_vector)
        if norm <= DEGENERATE_MEASURE_TOL * size**2:
            violations.append(MeshViolation("degenerate", f"face {k} has zero area", elem.id))
            continue
        normal = area_vector / norm
        deviation = np.abs((loop - loop.mean(axis=0)) @ normal).max()
        if deviation > PLANARITY_TOL * size:
            violations.append(
                MeshViolation("planarity", f"face {k} deviates by {deviation:.3e}", elem.id)
            )
        if np.dot(normal, loop.mean(axis=0) - centre) <= 0.0:
            violations.append(
                MeshViolation("orientation", f"face {k} normal points inward", elem.id)
            )
        for a, b in zip(face, face[1:] + face[:1], strict=True):
            directed[(a, b)] += 1
    undirected: Counter[tuple[int, int]] = Counter()
    for (a, b), count in directed.items():
        undirected[(min(a, b), max(a, b))] += count
    if any(count != 2 for count in undirected.values()):  # noqa: PLR2004
        violations.append(MeshViolation("manifold", "an edge is not shared by two faces", elem.id))
    used = {v for face in faces for v in face}
    euler = len(used) - len(undirected) + len(faces)
    if euler != 2:  # noqa: PLR2004
        violations.append(MeshViolation("manifold", f"Euler characteristic {euler} != 2", elem.id))
    if not violations and polyhedron_volume(coords, faces) <= 0.0:
        violations.append(MeshViolation("orientation", "negative volume", elem.id))
    return violations


def validate_mesh(mesh: Mesh, domain: DomainGeometry | None = None) -> list[MeshViolation]:
    """Collect every violation of the mesh invariants; an empty list means valid."""
    violations: list[MeshViolation] = []
    for node in mesh.nodes:
        if len(node.coords) != mesh.dim or not all(map(math.isfinite, node.coords)):
            violations.append(
                MeshViolation("dimension", f"node {node.id} has invalid coordinates")
            )
    seen: dict[frozenset[int], int] = {}
    for elem in mesh.elements:
        missing = [nid for nid in elem.vertex_ids if nid not in mesh.node_index]
        if missing:
            violations.append(
                MeshViolation("dangling", f"references missing nodes {missing}", elem.id)
            )
            continue
        key = frozenset(elem.vertex_ids)
        if key in seen:
            violations.append(
                MeshViolation("duplicate", f"same vertex set as element {seen[key]}", elem.id)
            )
        seen.setdefault(key, elem.id)
        coords = mesh.element_coords(elem)
        if mesh.dim == 2:  # noqa: PLR2004
            violations.extend(_polygon_violations(elem, coords))
            continue
        try:
            faces = mesh.local_faces(elem)
        except MeshError as error:
            violations.append(MeshViolation("dangling", str(error), elem.id))
            continue
        violations.extend(_polyhedron_violations(elem, coords, faces))
    if domain is not None and not violations:
        total = mesh.measure
        reference = tiling_reference(mesh, domain)
        if abs(total - reference) > TILING_TOL * domain.measure:
            violations.append(
                MeshViolation("tiling", f"elements cover {total!r}, domain measures {reference!r}")
            )
    return violations


# ─── Voronoi generation ───────────────────────────────────────────────────────


def clip_halfplane(poly: np.ndarray, normal: np.ndarray, offset: float) -> np.ndarray:
    """Keep the part of a convex polygon with normal . x <= offset."""
    side = poly @ normal - offset
    kept: list[np.ndarray] = []
    count = len(poly)
    for k in range(count):
        cur, nxt = poly[k], poly[(k + 1) % count]
        s_cur, s_nxt = side[k], side[(k + 1) % count]
        if s_cur <= 0.0:
            kept.append(cur)
        if (s_cur < 0.0 < s_nxt) or (s_nxt < 0.0 < s_cur):
            t = s_cur / (s_cur - s_nxt)
            kept.append(cur + t * (nxt - cur))
    if not kept:
        return np.empty((0, 2))
    return np.array(kept)


def _cell_size(domain: DomainGeometry, n_elements: int) -> float:
    return math.sqrt(domain.measure / n_elements)


def _initial_seeds(
    domain: DomainGeometry, n_elements: int, rng: np.random.Generator
) -> np.ndarray:
    lower, upper = domain.lower[:2], domain.upper[:2]
    if domain.kind is not DomainKind.QUARTER_PLATE:
        return lower + rng.random((n_elements, 2)) * (upper - lower)
    minimum = domain.hole_radius + _HOLE_SEED_MARGIN * _cell_size(domain, n_elements)
    seeds = np.empty((0, 2))
    while len(seeds) < n_elements:
        batch = lower + rng.random((2 * n_elements, 2)) * (upper - lower)
        batch = batch[np.linalg.norm(batch, axis=1) > minimum]
        seeds = np.vstack([seeds, batch])
    return seeds[:n_elements]


def _hole_ghosts(domain: DomainGeometry, seeds: np.ndarray) -> np.ndarray:
    """Mirror images across the hole of the seeds lying close to it."""
    if domain.kind is not DomainKind.QUARTER_PLATE:
        return np.empty((0, 2))
    radius = domain.hole_radius
    reach = _HOLE_REFLECTION_FACTOR * _cell_size(domain, len(seeds))
    distance = np.linalg.norm(seeds, axis=1)
    near = distance - radius < reach
    scale = (2.0 * radius - distance[near]) / distance[near]
    return seeds[near] * scale[:, None]


def _keep_seeds_inside(domain: DomainGeometry, seeds: np.ndarray) -> np.ndarray:
    if domain.kind is not DomainKind.QUARTER_PLATE:
        return seeds
    minimum = domain.hole_radius + _HOLE_SEED_MARGIN * _cell_size(domain, len(seeds))
    distance = np.linalg.norm(seeds, axis=1)
    inside = distance < minimum
    seeds = seeds.copy()
    seeds[inside] *= (minimum / distance[inside])[:, None]
    return seeds


def _clipped_cells(
    domain: DomainGeometry, seeds: np.ndarray, rng_seed: int
) -> list[np.ndarray]:
    """Voronoi cells of `seeds` clipped to the domain outline (hole handled by ghost seeds)."""
    points = np.vstack([seeds, _hole_ghosts(domain, seeds)])
    try:
        voronoi = Voronoi(points)
    except QhullError as error:
        raise MeshError(
            f"Degenerate seed configuration (rng_seed={rng_seed}): {error}"
        ) from error
    neighbours: list[list[int]] = [[] for _ in range(len(seeds))]
    for i, j in voronoi.ridge_points:
        if i < len(seeds):
            neighbours[i].append(int(j))
        if j < len(seeds):
            neighbours[j].append(int(i))
    outline = domain.outline()
    cells = []
    for i, seed in enumerate(seeds):
        poly = outline
        for j in sorted(neighbours[i]):
            other = points[j]
            normal = other - seed
            offset = 0.5 * (np.dot(other, other) - np.dot(seed, seed))
            poly = clip_halfplane(poly, normal, offset)
            if len(poly) < 3:  # noqa: PLR2004
                break
        if len(poly) < 3:  # noqa: PLR2004
            raise MeshError(
                f"Seed {i} at {seed.tolist()} has an empty cell after clipping "
                f"(rng_seed={rng_seed})"
            )
        cells.append(poly)
    return cells


def _outline_lines(points: np.ndarray, domain: DomainGeometry) -> np.ndarray:
    """Which of the four outline lines (x0, y0, x1, y1) pass through each point."""
    tolerance = WELD_TOL * domain.diameter
    lower, upper = domain.lower[:2], domain.upper[:2]
    return np.hstack([np.abs(points - lower) <= tolerance, np.abs(points - upper) <= tolerance])


def _weld(
    cells: list[np.ndarray], domain: DomainGeometry, tolerance: float
) -> tuple[np.ndarray, list[list[int]]]:
    """Merge cell vertices closer than `tolerance`; return unique points and index loops.

    A merged point keeps the position of the members lying on the most
    outline lines, so corners and sides stay put.
    """
    stacked = np.vstack(cells)
    pairs = np.array(sorted(cKDTree(stacked).query_pairs(tolerance)), dtype=int).reshape(-1, 2)
    graph = coo_matrix(
        (np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(len(stacked), len(stacked))
    )
    count, index = connected_components(graph, directed=False)
    rank = _outline_lines(stacked, domain).sum(axis=1)
    best = np.zeros(count, dtype=int)
    np.maximum.at(best, index, rank)
    chosen = rank == best[index]
    points = np.zeros((count, 2))
    members = np.zeros(count)
    np.add.at(points, index[chosen], stacked[chosen])
    np.add.at(members, index[chosen], 1.0)
    points /= members[:, None]
    loops = []
    start = 0
    for cell in cells:
        loop: list[int] = []
        for k in index[start : start + len(cell)]:
            if not loop or loop[-1] != k:
                loop.append(int(k))
        while len(loop) > 1 and loop[0] == loop[-1]:
            loop.pop()
        loops.append(loop)
        start += len(cell)
    return points, loops


def _hole_edges(lines: np.ndarray, loops: list[list[int]]) -> set[tuple[int, int]]:
    """Edges owned by one loop that do not run along an outline line."""
    uses = Counter(
        (min(a, b), max(a, b))
        for loop in loops
        for a, b in zip(loop, loop[1:] + loop[:1], strict=True)
    )
    return {
        edge
        for edge, count in uses.items()
        if count == 1 and not np.any(lines[edge[0]] & lines[edge[1]])
    }


def _fit_hole(
    domain: DomainGeometry, points: np.ndarray, loops: list[list[int]]
) -> tuple[np.ndarray, list[list[int]]]:
    """Give every cell touching the hole a single chord with both ends on the circle.

    Ghost seeds cut the hole side of a cell into edges around the outside of
    the circle. Corners owned by that cell alone are dropped, the remaining
    hole vertices are moved radially onto the circle and unused points go.
    """
    if domain.kind is not DomainKind.QUARTER_PLATE:
        return points, loops
    lines = _outline_lines(points, domain)
    users = Counter(v for loop in loops for v in loop)
    hole = _hole_edges(lines, loops)

    def on_hole(a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in hole

    fitted = [
        [
            v
            for k, v in enumerate(loop)
            if users[v] > 1
            or not (on_hole(loop[k - 1], v) and on_hole(v, loop[(k + 1) % len(loop)]))
        ]
        for loop in loops
    ]
    on_circle = sorted({v for edge in _hole_edges(lines, fitted) for v in edge})
    points = points.copy()
    points[on_circle] *= (domain.hole_radius / np.linalg.norm(points[on_circle], axis=1))[
        :, None
    ]
    used = sorted({v for loop in fitted for v in loop})
    renumber = {old: new for new, old in enumerate(used)}
    return points[used], [[renumber[v] for v in loop] for loop in fitted]


def voronoi_mesh(
    domain: DomainGeometry,
    n_elements: int,
    lloyd_iterations: int = DEFAULT_LLOYD_ITERATIONS,
    rng_seed: int = DEFAULT_SEED,
) -> Mesh:
    """Clipped, Lloyd-regularised Voronoi polygon mesh; a pure function of its arguments."""
    if domain.kind is DomainKind.BOX:
        raise MeshError("Box domains are meshed with polyhedral_mesh")
    if n_elements < MIN_ELEMENTS:
        raise MeshError(f"Need at least {MIN_ELEMENTS} elements, got {n_elements}")
    rng = np.random.default_rng(rng_seed)
    seeds = _initial_seeds(domain, n_elements, rng)
    for _ in range(lloyd_iterations):
        cells = _clipped_cells(domain, seeds, rng_seed)
        seeds = np.array([polygon_area_centroid(cell)[1] for cell in cells])
        seeds = _keep_seeds_inside(domain, seeds)
    cells = _clipped_cells(domain, seeds, rng_seed)
    tolerance = max(
        WELD_TOL * domain.diameter, SHORT_EDGE_TOL * _cell_size(domain, n_elements)
    )
    points, loops = _weld(cells, domain, tolerance)
    points, loops = _fit_hole(domain, points, loops)

    nodes = tuple(Node(k + 1, (float(x), float(y))) for k, (x, y) in enumerate(points))
    elements = tuple(
        PolyElement(k + 1, tuple(v + 1 for v in loop)) for k, loop in enumerate(loops)
    )
    mesh = Mesh(nodes, elements, 2)
    violations = validate_mesh(mesh, domain)
    if violations:
        raise MeshError(
            f"Generated mesh is invalid (rng_seed={rng_seed}): {violations[0]}"
        )
    _LOGGER.debug(
        "Generated %s elements, %s nodes (lloyd=%s, seed=%s)",
        len(elements),
        len(nodes),
        lloyd_iterations,
        rng_seed,
    )
    return mesh


# ─── Extrusion ────────────────────────────────────────────────────────────────


def extrude_mesh(mesh2d: Mesh, layers: int, height: float, z0: float = 0.0) -> Mesh:
    """Extrude every polygon into `layers` prisms with quadrilateral lateral faces."""
    if mesh2d.dim != 2:  # noqa: PLR2004
        raise MeshError("Only planar meshes can be extruded")
    if layers < 1 or height <= 0.0:
        raise MeshError(f"Invalid extrusion: layers={layers}, height={height}")
    for elem in mesh2d.elements:
        bad = _polygon_violations(elem, mesh2d.element_coords(elem))
        if bad:
            raise MeshError(f"Cannot extrude element {elem.id}: {bad[0].message}")

    count = len(mesh2d.nodes)
    z = z0 + height * np.arange(layers + 1) / layers
    nodes = tuple(
        Node(layer * count + row + 1, (*node.coords, float(z[layer])))
        for layer in range(layers + 1)
        for row, node in enumerate(mesh2d.nodes)
    )
    elements = []
    for layer in range(layers):
        for elem in mesh2d.elements:
            base = [layer * count + mesh2d.node_index[nid] + 1 for nid in elem.vertex_ids]
            top = [nid + count for nid in base]
            faces = [tuple(reversed(base)), tuple(top)]
            for k in range(len(base)):
                nxt = (k + 1) % len(base)
                faces.append((base[k], base[nxt], top[nxt], top[k]))
            elements.append(
                PolyElement(len(elements) + 1, tuple(base + top), tuple(faces))
            )
    return Mesh(nodes, tuple(elements), 3)


def polyhedral_mesh(
    domain: DomainGeometry,
    n_base: int,
    layers: int,
    lloyd_iterations: int = DEFAULT_LLOYD_ITERATIONS,
    rng_seed: int = DEFAULT_SEED,
) -> Mesh:
    """Voronoi mesh of a box footprint extruded along z."""
    if domain.kind is not DomainKind.BOX:
        raise MeshError("polyhedral_mesh needs a box domain")
    base = voronoi_mesh(domain.footprint(), n_base, lloyd_iterations, rng_seed)
    return extrude_mesh(base, layers, domain.extents[2], domain.origin[2])
