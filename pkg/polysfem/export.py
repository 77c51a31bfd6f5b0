"""Legacy VTK output of a solved model on its smoothing-subcell triangulation."""

from __future__ import annotations

import logging
from pathlib import Path

import meshio
import numpy as np

from .const import VTK_DISPLACEMENT, VTK_SMOOTHED_STRESS, VTK_STRESS
from .helpers import atomic_path
from .inp_io import Method, Model
from .system import SolutionField
from .wachspress import basis_for

_LOGGER = logging.getLogger(__name__)


def subcell_geometry(model: Model, solution: SolutionField) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Points, simplex connectivity and displacements of the subcell triangulation.

    Mesh nodes come first in node order; every element then appends its centre
    (and in 3D its face centres), interpolated with the element shape functions.
    """
    mesh = model.mesh
    points = [mesh.coords]
    values = [solution.displacements]
    simplices = []
    count = len(mesh.nodes)
    for elem in mesh.elements:
        rows = mesh.rows(elem.vertex_ids)
        coords = mesh.coords[rows]
        centre = coords.mean(axis=0)
        extra = [centre]
        if mesh.dim == 2:  # noqa: PLR2004
            for k in range(len(rows)):
                simplices.append([rows[k], rows[(k + 1) % len(rows)], count])
        else:
            for f, face in enumerate(mesh.local_faces(elem)):
                extra.append(coords[list(face)].mean(axis=0))
                for k in range(len(face)):
                    simplices.append(
                        [rows[face[k]], rows[face[(k + 1) % len(face)]], count + 1 + f, count]
                    )
        extra_points = np.array(extra)
        phi = basis_for(mesh, elem).values(extra_points)
        points.append(extra_points)
        values.append(phi @ solution.displacements[rows])
        count += len(extra)
    return np.vstack(points), np.array(simplices, dtype=int), np.vstack(values)


def subcell_stresses(model: Model, solution: SolutionField) -> np.ndarray:
    """One stress per subcell: the smoothed value, or the weighted mean of its quadrature points."""
    if solution.method is Method.CSFEM:
        return solution.stresses
    mesh = model.mesh
    per_cell = []
    for elem in mesh.elements:
        cells = len(elem.vertex_ids) if mesh.dim == 2 else sum(len(f) for f in elem.faces)  # noqa: PLR2004
        rows = solution.owners == elem.id
        stresses = solution.stresses[rows].reshape(cells, -1, solution.stresses.shape[1])
        weights = solution.weights[rows].reshape(cells, -1)
        per_cell.append(np.einsum("cq,cqk->ck", weights, stresses) / weights.sum(axis=1)[:, None])
    return np.vstack(per_cell)


def write_vtk(path: str | Path, model: Model, solution: SolutionField) -> None:
    """Write displacements (point data) and subcell stresses (cell data) as ASCII VTK."""
    points, simplices, displacements = subcell_geometry(model, solution)
    if model.dim == 2:  # noqa: PLR2004
        points = np.column_stack([points, np.zeros(len(points))])
        displacements = np.column_stack([displacements, np.zeros(len(displacements))])
        cell_type = "triangle"
    else:
        cell_type = "tetra"
    name = VTK_SMOOTHED_STRESS if solution.method is Method.CSFEM else VTK_STRESS
    output = meshio.Mesh(
        points,
        [(cell_type, simplices)],
        point_data={VTK_DISPLACEMENT: displacements},
        cell_data={name: [subcell_stresses(model, solution)]},
    )
    with atomic_path(path) as tmp:
        meshio.write(tmp, output, file_format="vtk", binary=False)
    _LOGGER.debug("Wrote %s subcells to %s", len(simplices), path)
