"""Reader and writer for the user-element input deck.

The dialect is a small Abaqus-style keyword subset:

    *Node                                   id, x, y[, z]
    *User element, nodes=n, type=Un, properties=2, coordinates=d
                                            active dofs, e.g. 1,2
    *Element, type=Un, ELSET=name           id, node ids...
    *Polyhedron Faces, ELSET=name           element id, k, k positions (1-based)
    *UEL Property, ELSET=name               E, nu
    *Boundary                               node, first dof, last dof[, value]
    *Traction                               element id, facet (1-based), components...
    *Body Force                             components...
    *Method                                 CSFEM | PFEM
    *Plane Strain

Keywords are case-insensitive, `**` starts a comment line and a data line
ending in a comma continues on the next line.
"""

from __future__ import annotations

import logging
import re
from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from functools import cached_property
from pathlib import Path

from .const import METHOD_CSFEM, METHOD_PFEM
from .elasticity import Material, PlaneModel
from .exceptions import InpError, InpParseError
from .helpers import atomic_write_text
from .mesh_core import Mesh, Node, PolyElement

_LOGGER = logging.getLogger(__name__)

ENTRIES_PER_LINE = 16

VectorValue = tuple[float, ...] | Callable

_LABEL = re.compile(r"^U(\d+)$", re.IGNORECASE)


class Method(StrEnum):
    CSFEM = METHOD_CSFEM
    PFEM = METHOD_PFEM


@dataclass(frozen=True)
class ElementGroup:
    """User-element group: every member has `node_count` nodes."""

    label: str
    elset: str
    node_count: int
    element_ids: tuple[int, ...]
    E: float  # noqa: N815
    nu: float


@dataclass(frozen=True)
class DirichletBC:
    """Prescribed displacement; `component` is 0-based (x=0)."""

    node: int
    component: int
    value: float = 0.0


@dataclass(frozen=True)
class TractionLoad:
    """Surface load on local facet `facet` (0-based) of an element."""

    element: int
    facet: int
    traction: VectorValue


@dataclass(frozen=True)
class Model:
    mesh: Mesh
    groups: tuple[ElementGroup, ...]
    dirichlet: tuple[DirichletBC, ...] = ()
    tractions: tuple[TractionLoad, ...] = ()
    body_force: VectorValue | None = None
    method: Method = Method.CSFEM
    plane_model: PlaneModel = PlaneModel.PLANE_STRESS

    def __post_init__(self) -> None:
        if self.mesh.dim == 3 and self.plane_model is not PlaneModel.SOLID_3D:  # noqa: PLR2004
            object.__setattr__(self, "plane_model", PlaneModel.SOLID_3D)

    @property
    def dim(self) -> int:
        return self.mesh.dim

    @cached_property
    def _groups_by_element(self) -> dict[int, ElementGroup]:
        return {eid: group for group in self.groups for eid in group.element_ids}

    def group_of(self, element_id: int) -> ElementGroup:
        try:
            return self._groups_by_element[element_id]
        except KeyError as error:
            raise InpError(f"Element {element_id} belongs to no group") from error

    def material_for(self, element_id: int) -> Material:
        group = self.group_of(element_id)
        return Material(group.E, group.nu, self.plane_model)


def check_model(model: Model) -> None:
    """Raise InpError unless groups cover every element once with matching node counts."""
    seen: dict[int, str] = {}
    labels: set[str] = set()
    for group in model.groups:
        match = _LABEL.match(group.label)
        if match is None or int(match.group(1)) != group.node_count:
            raise InpError(f"Group label {group.label} does not match nodes={group.node_count}")
        if group.label.upper() in labels:
            raise InpError(f"User element {group.label} declared twice")
        labels.add(group.label.upper())
        if not 0.0 < group.nu < 0.5 or not group.E > 0.0:  # noqa: PLR2004
            raise InpError(
                f"ELSET {group.elset}: need E > 0 and 0 < nu < 0.5, got {group.E}, {group.nu}"
            )
        for eid in group.element_ids:
            if eid in seen:
                raise InpError(f"Element {eid} is in groups {seen[eid]} and {group.elset}")
            seen[eid] = group.elset
            elem = model.mesh.element(eid)
            if elem.node_count != group.node_count:
                raise InpError(
                    f"Element {eid} has {elem.node_count} nodes but group {group.label} "
                    f"declares nodes={group.node_count}"
                )
    missing = [elem.id for elem in model.mesh.elements if elem.id not in seen]
    if missing:
        raise InpError(f"Elements {missing} belong to no group")


def build_model(  # noqa: PLR0913
    mesh: Mesh,
    material: Material,
    dirichlet: Sequence[DirichletBC] = (),
    tractions: Sequence[TractionLoad] = (),
    body_force: VectorValue | None = None,
    method: Method | str = Method.CSFEM,
) -> Model:
    """Model with one group per element node count, all sharing `material`."""
    by_count: dict[int, list[int]] = {}
    for elem in mesh.elements:
        by_count.setdefault(elem.node_count, []).append(elem.id)
    groups = tuple(
        ElementGroup(f"U{count}", f"nodes{count}", count, tuple(ids), material.E, material.nu)
        for count, ids in sorted(by_count.items(), reverse=True)
    )
    model = Model(
        mesh,
        groups,
        tuple(dirichlet),
        tuple(tractions),
        body_force,
        Method(method),
        material.model,
    )
    check_model(model)
    return model


# ─── Parsing ──────────────────────────────────────────────────────────────────


@dataclass
class _Block:
    keyword: str
    params: dict[str, str]
    line: int
    rows: list[tuple[int, list[str]]] = field(default_factory=list)


_KEYWORDS = frozenset(
    {
        "node",
        "user element",
        "element",
        "polyhedron faces",
        "uel property",
        "boundary",
        "traction",
        "body force",
        "method",
        "plane strain",
    }
)


def _logical_lines(text: str) -> Iterator[tuple[int, str]]:
    """Yield (first line number, content) with comments dropped and continuations joined."""
    pending: list[str] = []
    start = 0
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("**"):
            continue
        if not pending:
            start = number
        pending.append(line)
        if line.endswith(",") and not line.startswith("*"):
            continue
        yield start, "".join(pending)
        pending = []
    if pending:
        yield start, "".join(pending)


def _blocks(text: str) -> list[_Block]:
    blocks: list[_Block] = []
    for number, line in _logical_lines(text):
        if line.startswith("*"):
            parts = [part.strip() for part in line[1:].split(",")]
            keyword = " ".join(parts[0].lower().split())
            if keyword not in _KEYWORDS:
                raise InpParseError(f"Unknown keyword *{parts[0]}", number)
            params = {}
            for part in parts[1:]:
                if not part:
                    continue
                key, _, value = part.partition("=")
                params[key.strip().lower()] = value.strip()
            blocks.append(_Block(keyword, params, number))
            continue
        if not blocks:
            raise InpParseError("Data line before any keyword", number)
        fields = [item.strip() for item in line.rstrip(",").split(",")]
        blocks[-1].rows.append((number, fields))
    return blocks


def _ints(fields: Sequence[str], line: int) -> list[int]:
    try:
        return [int(item) for item in fields]
    except ValueError as error:
        raise InpParseError(f"Expected integers, got {list(fields)}", line) from error


def _floats(fields: Sequence[str], line: int) -> list[float]:
    try:
        return [float(item) for item in fields]
    except ValueError as error:
        raise InpParseError(f"Expected numbers, got {list(fields)}", line) from error


def _int_param(block: _Block, key: str) -> int:
    if key not in block.params:
        raise InpParseError(f"*{block.keyword} needs {key}=", block.line)
    return _ints([block.params[key]], block.line)[0]


def _require(block: _Block, key: str) -> str:
    if key not in block.params or not block.params[key]:
        raise InpParseError(f"*{block.keyword} needs {key}=", block.line)
    return block.params[key]


@dataclass
class _Deck:
    """Accumulates parsed sections before the model is assembled."""

    nodes: list[Node] = field(default_factory=list)
    user_elements: dict[str, tuple[int, int, int]] = field(default_factory=dict)
    elements: dict[int, tuple[int, ...]] = field(default_factory=dict)
    elsets: dict[str, tuple[str, int, list[int]]] = field(default_factory=dict)
    properties: dict[str, tuple[float, float]] = field(default_factory=dict)
    faces: dict[int, list[tuple[int, ...]]] = field(default_factory=dict)
    # line each ELSET, property and element was declared on
    elset_lines: dict[str, int] = field(default_factory=dict)
    property_lines: dict[str, int] = field(default_factory=dict)
    element_lines: dict[int, int] = field(default_factory=dict)
    dirichlet: list[DirichletBC] = field(default_factory=list)
    tractions: list[TractionLoad] = field(default_factory=list)
    body_force: tuple[float, ...] | None = None
    method: Method = Method.CSFEM
    plane_strain: bool = False
    dim: int | None = None

    def set_dim(self, dim: int, line: int) -> None:
        if dim not in (2, 3):
            raise InpParseError(f"Only 2 or 3 coordinates are supported, got {dim}", line)
        if self.dim is not None and self.dim != dim:
            raise InpParseError(f"Mixed dimensions {self.dim} and {dim}", line)
        self.dim = dim


def _read_node(deck: _Deck, block: _Block) -> None:
    for line, fields in block.rows:
        nid = _ints(fields[:1], line)[0]
        coords = tuple(_floats(fields[1:], line))
        deck.set_dim(len(coords), line)
        deck.nodes.append(Node(nid, coords))


def _read_user_element(deck: _Deck, block: _Block) -> None:
    label = _require(block, "type").upper()
    nodes = _int_param(block, "nodes")
    match = _LABEL.match(label)
    if match is None or int(match.group(1)) != nodes:
        raise InpParseError(f"Label {label} must be U followed by nodes={nodes}", block.line)
    if label in deck.user_elements:
        raise InpParseError(f"User element {label} declared twice", block.line)
    coordinates = _int_param(block, "coordinates")
    deck.set_dim(coordinates, block.line)
    properties = int(block.params.get("properties", "2"))
    if properties != 2:  # noqa: PLR2004
        raise InpParseError(f"{label}: expected properties=2 (E, nu)", block.line)
    deck.user_elements[label] = (nodes, properties, coordinates)


def _read_element(deck: _Deck, block: _Block) -> None:
    label = _require(block, "type").upper()
    elset = _require(block, "elset")
    if label not in deck.user_elements:
        raise InpParseError(f"Element type {label} has no *User element", block.line)
    nodes = deck.user_elements[label][0]
    key = elset.lower()
    if key in deck.elsets:
        raise InpParseError(f"ELSET {elset} declared twice", block.line)
    members: list[int] = []
    for line, fields in block.rows:
        ids = _ints(fields, line)
        eid, connectivity = ids[0], tuple(ids[1:])
        if len(connectivity) != nodes:
            raise InpParseError(
                f"Element {eid} has {len(connectivity)} nodes but type {label} "
                f"declares nodes={nodes}",
                line,
            )
        if eid in deck.elements:
            raise InpParseError(f"Element {eid} defined twice", line)
        deck.elements[eid] = connectivity
        deck.element_lines[eid] = line
        members.append(eid)
    if not members:
        _LOGGER.warning("ELSET %s (type %s) has no elements", elset, label)
    deck.elsets[key] = (elset, nodes, members)
    deck.elset_lines[key] = block.line


def _read_faces(deck: _Deck, block: _Block) -> None:
    for line, fields in block.rows:
        ids = _ints(fields, line)
        if len(ids) < 2 or len(ids) != ids[1] + 2:  # noqa: PLR2004
            raise InpParseError("Face record must be: element, k, k positions", line)
        eid = ids[0]
        if eid not in deck.elements:
            raise InpParseError(f"Faces given for unknown element {eid}", line)
        connectivity = deck.elements[eid]
        try:
            face = tuple(connectivity[pos - 1] for pos in ids[2:] if pos >= 1)
        except IndexError as error:
            raise InpParseError(f"Face position out of range for element {eid}", line) from error
        if len(face) != ids[1]:
            raise InpParseError(f"Face position out of range for element {eid}", line)
        deck.faces.setdefault(eid, []).append(face)


def _read_property(deck: _Deck, block: _Block) -> None:
    elset = _require(block, "elset").lower()
    values = [value for line, fields in block.rows for value in _floats(fields, line)]
    if len(values) != 2:  # noqa: PLR2004
        raise InpParseError(f"*UEL Property for {elset} needs E, nu", block.line)
    deck.properties[elset] = (values[0], values[1])
    deck.property_lines[elset] = block.line


def _read_boundary(deck: _Deck, block: _Block) -> None:
    for line, fields in block.rows:
        if len(fields) < 3:  # noqa: PLR2004
            raise InpParseError("Boundary record must be: node, first dof, last dof[, value]", line)
        node, first, last = _ints(fields[:3], line)
        value = _floats(fields[3:4], line)[0] if len(fields) > 3 else 0.0  # noqa: PLR2004
        if not 1 <= first <= last:
            raise InpParseError(f"Invalid dof range {first}..{last}", line)
        deck.dirichlet.extend(DirichletBC(node, dof - 1, value) for dof in range(first, last + 1))


def _read_traction(deck: _Deck, block: _Block) -> None:
    for line, fields in block.rows:
        eid, facet = _ints(fields[:2], line)
        if facet < 1:
            raise InpParseError(f"Facet numbers start at 1, got {facet}", line)
        deck.tractions.append(TractionLoad(eid, facet - 1, tuple(_floats(fields[2:], line))))


def _read_body_force(deck: _Deck, block: _Block) -> None:
    for line, fields in block.rows:
        deck.body_force = tuple(_floats(fields, line))


def _read_method(deck: _Deck, block: _Block) -> None:
    for line, fields in block.rows:
        try:
            deck.method = Method(fields[0].lower())
        except ValueError as error:
            raise InpParseError(f"Unknown method {fields[0]}", line) from error


def _read_plane_strain(deck: _Deck, block: _Block) -> None:
    deck.plane_strain = True


_READERS: dict[str, Callable[[_Deck, _Block], None]] = {
    "node": _read_node,
    "user element": _read_user_element,
    "element": _read_element,
    "polyhedron faces": _read_faces,
    "uel property": _read_property,
    "boundary": _read_boundary,
    "traction": _read_traction,
    "body force": _read_body_force,
    "method": _read_method,
    "plane strain": _read_plane_strain,
}


def parse_inp(text: str) -> Model:
    """Parse a deck into a Model; raises InpParseError with the offending line."""
    deck = _Deck()
    for block in _blocks(text):
        _READERS[block.keyword](deck, block)

    groups = []
    for key, (elset, nodes, members) in deck.elsets.items():
        if key not in deck.properties:
            raise InpParseError(
                f"No *UEL Property for ELSET {elset}", deck.elset_lines[key]
            )
        E, nu = deck.properties[key]  # noqa: N806
        if not E > 0.0 or not 0.0 < nu < 0.5:  # noqa: PLR2004
            raise InpParseError(
                f"ELSET {elset}: need E > 0 and 0 < nu < 0.5, got {E}, {nu}",
                deck.property_lines[key],
            )
        groups.append(ElementGroup(f"U{nodes}", elset, nodes, tuple(members), E, nu))

    dim = deck.dim or 2
    elements = []
    for eid in sorted(deck.elements):
        faces = tuple(deck.faces.get(eid, ()))
        if dim == 3 and not faces:  # noqa: PLR2004
            raise InpParseError(
                f"Element {eid} has no *Polyhedron Faces record", deck.element_lines[eid]
            )
        elements.append(PolyElement(eid, deck.elements[eid], faces))
    mesh = Mesh(tuple(deck.nodes), tuple(elements), dim)
    plane = (
        PlaneModel.SOLID_3D
        if dim == 3  # noqa: PLR2004
        else PlaneModel.PLANE_STRAIN
        if deck.plane_strain
        else PlaneModel.PLANE_STRESS
    )
    model = Model(
        mesh,
        tuple(groups),
        tuple(deck.dirichlet),
        tuple(deck.tractions),
        deck.body_force,
        deck.method,
        plane,
    )
    check_model(model)
    _LOGGER.debug(
        "Parsed deck: %s nodes, %s elements, %s groups",
        len(deck.nodes),
        len(elements),
        len(groups),
    )
    return model


def read_inp(path: str | Path) -> Model:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as error:
        raise InpError(f"Cannot read {path}: {error}") from error
    return parse_inp(text)


# ─── Writing ──────────────────────────────────────────────────────────────────


def _format(value: float) -> str:
    return repr(float(value))


def _wrap(items: Sequence[str]) -> list[str]:
    """Comma-separated records of at most ENTRIES_PER_LINE entries; continued lines end in a comma."""
    chunks = [items[k : k + ENTRIES_PER_LINE] for k in range(0, len(items), ENTRIES_PER_LINE)]
    lines = [", ".join(chunk) + "," for chunk in chunks[:-1]]
    lines.append(", ".join(chunks[-1]))
    return lines


def _constant(value: VectorValue | None, what: str) -> tuple[float, ...] | None:
    if value is None:
        return None
    if callable(value):
        raise InpError(f"{what} given as a function cannot be written to a deck")
    return tuple(value)


def write_inp(model: Model) -> str:
    """Render a Model as deck text; groups appear by descending node count."""
    mesh = model.mesh
    lines = ["** polysfem input deck", "*Node"]
    lines.extend(
        ", ".join([str(node.id), *map(_format, node.coords)]) for node in mesh.nodes
    )
    dofs = ",".join(str(k) for k in range(1, mesh.dim + 1))
    for group in sorted(model.groups, key=lambda g: g.node_count, reverse=True):
        lines.append(
            f"*User element, nodes={group.node_count}, type={group.label}, "
            f"properties=2, coordinates={mesh.dim}"
        )
        lines.append(dofs)
        lines.append(f"*Element, type={group.label}, ELSET={group.elset}")
        members = [mesh.element(eid) for eid in sorted(group.element_ids)]
        for elem in members:
            lines.extend(_wrap([str(elem.id), *map(str, elem.vertex_ids)]))
        if mesh.dim == 3 and members:  # noqa: PLR2004
            lines.append(f"*Polyhedron Faces, ELSET={group.elset}")
            for elem in members:
                position = {nid: k + 1 for k, nid in enumerate(elem.vertex_ids)}
                for face in elem.faces:
                    record = [elem.id, len(face), *(position[nid] for nid in face)]
                    lines.extend(_wrap([str(item) for item in record]))
        lines.append(f"*UEL Property, ELSET={group.elset}")
        lines.append(f"{_format(group.E)}, {_format(group.nu)}")
    if model.dirichlet:
        lines.append("*Boundary")
        lines.extend(
            f"{bc.node}, {bc.component + 1}, {bc.component + 1}, {_format(bc.value)}"
            for bc in model.dirichlet
        )
    if model.tractions:
        lines.append("*Traction")
        for load in model.tractions:
            values = _constant(load.traction, f"Traction on element {load.element}")
            lines.extend(
                _wrap([str(load.element), str(load.facet + 1), *map(_format, values or ())])
            )
    body = _constant(model.body_force, "Body force")
    if body is not None:
        lines.append("*Body Force")
        lines.append(", ".join(map(_format, body)))
    lines.append("*Method")
    lines.append(model.method.value.upper())
    if model.plane_model is PlaneModel.PLANE_STRAIN:
        lines.append("*Plane Strain")
    return "\n".join(lines) + "\n"


def write_inp_file(model: Model, path: str | Path) -> None:
    atomic_write_text(path, write_inp(model))
