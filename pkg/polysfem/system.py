"""Global assembly, Dirichlet elimination, linear solve and field recovery."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, cg, splu

from .config import SolverSettings
from .const import CG_MAXITER_FACTOR, RESIDUAL_CONTRACT
from .elasticity import (
    ElementStiffness,
    body_force_vector,
    d_matrix,
    stiffness_csfem,
    stiffness_pfem,
    strain_operators,
    traction_vector,
)
from .exceptions import ConstraintError, SolverError
from .inp_io import DirichletBC, Method, Model
from .mesh_core import PolyElement
from .wachspress import basis_for

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class GlobalSystem:
    """Unconstrained K u = f with node-major dofs (node row * dim + component)."""

    K: sp.csr_matrix  # noqa: N815
    f: np.ndarray
    dim: int
    node_index: dict[int, int]
    kernels: dict[int, ElementStiffness] = field(repr=False)

    @property
    def ndof(self) -> int:
        return int(self.f.shape[0])

    def dof(self, node: int, component: int) -> int:
        try:
            row = self.node_index[node]
        except KeyError as error:
            raise ConstraintError(f"Unknown node {node}") from error
        if not 0 <= component < self.dim:
            raise ConstraintError(f"Node {node}: component {component} outside 0..{self.dim - 1}")
        return row * self.dim + component


@dataclass(frozen=True)
class ConstrainedSystem:
    """System after symmetric elimination; `base` keeps the original K and f."""

    K: sp.csr_matrix  # noqa: N815
    f: np.ndarray
    constrained: np.ndarray
    values: np.ndarray
    base: GlobalSystem


@dataclass(frozen=True)
class SolutionField:
    """Nodal displacements and strains/stresses at the integration points.

    CSFEM has one point per subcell (the smoothed, cell-constant values);
    PFEM has every quadrature point.
    """

    displacements: np.ndarray
    strains: np.ndarray
    stresses: np.ndarray
    points: np.ndarray
    weights: np.ndarray
    owners: np.ndarray
    method: Method


def element_dofs(model: Model, elem: PolyElement) -> np.ndarray:
    rows = model.mesh.rows(elem.vertex_ids)
    dim = model.dim
    return (rows[:, None] * dim + np.arange(dim)[None, :]).ravel()


def _element_kernel(
    model: Model, settings: SolverSettings, elem: PolyElement
) -> tuple[ElementStiffness, np.ndarray | None]:
    mesh = model.mesh
    material = model.material_for(elem.id)
    provider = basis_for(mesh, elem)
    if model.method is Method.PFEM:
        stiffness = stiffness_pfem(
            mesh, elem, material, settings.pfem_order(mesh.dim), provider=provider
        ).without_operators()
    else:
        stiffness = stiffness_csfem(
            mesh, elem, material, rule=settings.smoothing_rule, provider=provider
        )
    loads = None
    if model.body_force is not None:
        loads = body_force_vector(
            mesh,
            elem,
            model.body_force,
            settings.body_force_order(mesh.dim),
            provider=provider,
        )
    return stiffness, loads


def assemble(model: Model, settings: SolverSettings | None = None) -> GlobalSystem:
    """Scatter element stiffness and loads into a CSR matrix and a load vector.

    Element kernels may run on several threads; the scatter runs in element
    order so the result does not depend on the worker count.
    """
    settings = settings or SolverSettings()
    mesh = model.mesh
    ndof = mesh.dim * len(mesh.nodes)

    def kernel(elem: PolyElement) -> tuple[ElementStiffness, np.ndarray | None]:
        return _element_kernel(model, settings, elem)

    if settings.workers > 1:
        with ThreadPoolExecutor(max_workers=settings.workers) as pool:
            results = list(pool.map(kernel, mesh.elements))
    else:
        results = [kernel(elem) for elem in mesh.elements]

    rows, cols, values = [], [], []
    f = np.zeros(ndof)
    kernels = {}
    for elem, (stiffness, loads) in zip(mesh.elements, results, strict=True):
        dofs = element_dofs(model, elem)
        rows.append(np.repeat(dofs, len(dofs)))
        cols.append(np.tile(dofs, len(dofs)))
        values.append(stiffness.matrix.ravel())
        if loads is not None:
            np.add.at(f, dofs, loads)
        kernels[elem.id] = stiffness

    for load in model.tractions:
        elem = mesh.element(load.element)
        loads = traction_vector(
            mesh, elem, load.facet, load.traction, settings.body_force_order(mesh.dim)
        )
        np.add.at(f, element_dofs(model, elem), loads)

    if rows:
        K = sp.coo_matrix(  # noqa: N806
            (np.concatenate(values), (np.concatenate(rows), np.concatenate(cols))),
            shape=(ndof, ndof),
        ).tocsr()
    else:
        K = sp.csr_matrix((ndof, ndof))  # noqa: N806
    _LOGGER.debug(
        "Assembled %s elements with %s into %s dofs (%s nonzeros)",
        len(mesh.elements),
        model.method.value,
        ndof,
        K.nnz,
    )
    return GlobalSystem(K, f, mesh.dim, dict(mesh.node_index), kernels)


def apply_dirichlet(
    system: GlobalSystem, constraints: Sequence[DirichletBC]
) -> ConstrainedSystem:
    """Symmetric elimination: known values move to f, rows/columns become identity."""
    prescribed: dict[int, float] = {}
    for bc in constraints:
        dof = system.dof(bc.node, bc.component)
        value = float(bc.value)
        if dof in prescribed and prescribed[dof] != value:
            raise ConstraintError(
                f"Node {bc.node} component {bc.component} prescribed as both "
                f"{prescribed[dof]!r} and {value!r}"
            )
        prescribed[dof] = value
    constrained = np.array(sorted(prescribed), dtype=int)
    values = np.array([prescribed[dof] for dof in constrained], dtype=float)

    ubar = np.zeros(system.ndof)
    ubar[constrained] = values
    free = np.ones(system.ndof)
    free[constrained] = 0.0
    keep = sp.diags(free)
    K = (keep @ system.K @ keep + sp.diags(1.0 - free)).tocsr()  # noqa: N806
    f = system.f - system.K @ ubar
    f[constrained] = values
    return ConstrainedSystem(K, f, constrained, values, system)


def relative_residual(K: sp.spmatrix, u: np.ndarray, f: np.ndarray) -> float:  # noqa: N803
    scale = np.linalg.norm(f)
    return float(np.linalg.norm(K @ u - f) / (scale if scale > 0.0 else 1.0))


def _conjugate_gradient(
    K: sp.csr_matrix, f: np.ndarray, settings: SolverSettings  # noqa: N803
) -> tuple[np.ndarray, list[float]]:
    diagonal = K.diagonal()
    if np.any(diagonal <= 0.0):
        raise SolverError("Matrix has a non-positive diagonal; it is not SPD")
    inverse = 1.0 / diagonal
    jacobi = LinearOperator(K.shape, matvec=lambda x: inverse * x, dtype=float)
    history: list[float] = []

    def record(xk: np.ndarray) -> None:
        history.append(relative_residual(K, xk, f))

    u, info = cg(
        K,
        f,
        rtol=settings.solver_tolerance,
        atol=0.0,
        maxiter=CG_MAXITER_FACTOR * len(f),
        M=jacobi,
        callback=record,
    )
    if info != 0:
        raise SolverError(
            f"Conjugate gradients stopped with info={info} after {len(history)} iterations",
            history,
        )
    return u, history


def _direct_solve(K: sp.csr_matrix, f: np.ndarray) -> np.ndarray:  # noqa: N803
    """Sparse LU in SuperLU's symmetric mode: diagonal pivots on an A^T + A ordering."""
    factor = splu(
        K.tocsc(),
        permc_spec="MMD_AT_PLUS_A",
        diag_pivot_thresh=0.0,
        options={"SymmetricMode": True},
    )
    return factor.solve(f)


def solve(system: ConstrainedSystem, settings: SolverSettings | None = None) -> np.ndarray:
    """Nodal displacement vector; raises SolverError unless the residual contract holds.

    Systems up to ``direct_solve_max_dofs`` go through the symmetric direct
    solve; larger ones, and singular factorisations, use Jacobi-preconditioned CG.
    """
    settings = settings or SolverSettings()
    K, f = system.K, system.f  # noqa: N806
    history: list[float] = []
    u = None
    if len(f) <= settings.direct_solve_max_dofs:
        try:
            u = _direct_solve(K, f)
        except RuntimeError as error:
            _LOGGER.warning("Direct solve failed (%s); falling back to CG", error)
        if u is not None and not np.all(np.isfinite(u)):
            _LOGGER.warning("Direct solve produced non-finite values; falling back to CG")
            u = None
    if u is None:
        u, history = _conjugate_gradient(K, f, settings)
    residual = relative_residual(K, u, f)
    history.append(residual)
    if residual >= RESIDUAL_CONTRACT:
        raise SolverError(
            f"Relative residual {residual:.3e} exceeds {RESIDUAL_CONTRACT:.0e}", history
        )
    _LOGGER.debug("Solved %s dofs, relative residual %.3e", len(f), residual)
    return u


def solve_model(
    model: Model, settings: SolverSettings | None = None
) -> tuple[GlobalSystem, ConstrainedSystem, np.ndarray]:
    """Assemble, constrain and solve a model in one call."""
    system = assemble(model, settings)
    constrained = apply_dirichlet(system, model.dirichlet)
    return system, constrained, solve(constrained, settings)


def recover_fields(
    model: Model,
    u: np.ndarray,
    system: GlobalSystem | None = None,
    settings: SolverSettings | None = None,
) -> SolutionField:
    """Strains B u_e and stresses D B u_e at every integration point of every element."""
    system = system or assemble(model, settings)
    strains, stresses, points, weights, owners = [], [], [], [], []
    for elem in model.mesh.elements:
        kernel = system.kernels[elem.id]
        b = kernel.b_matrices
        if b is None:
            b = strain_operators(model.mesh, elem, kernel.points)
        strain = b @ u[element_dofs(model, elem)]
        strains.append(strain)
        stresses.append(strain @ d_matrix(model.material_for(elem.id)).T)
        points.append(kernel.points)
        weights.append(kernel.weights)
        owners.append(np.full(len(kernel.weights), elem.id))
    return SolutionField(
        displacements=u.reshape(-1, model.dim),
        strains=np.vstack(strains),
        stresses=np.vstack(stresses),
        points=np.vstack(points),
        weights=np.concatenate(weights),
        owners=np.concatenate(owners),
        method=model.method,
    )


def reaction_forces(system: ConstrainedSystem, u: np.ndarray) -> np.ndarray:
    """K u - f of the unconstrained system at constrained dofs, zero elsewhere."""
    reactions = np.zeros_like(u)
    full = system.base.K @ u - system.base.f
    reactions[system.constrained] = full[system.constrained]
    return reactions


def permute_system(system: ConstrainedSystem, permutation: np.ndarray) -> ConstrainedSystem:
    """Same system with unknowns renumbered: new dof k is old dof permutation[k]."""
    permutation = np.asarray(permutation, dtype=int)
    inverse = np.empty_like(permutation)
    inverse[permutation] = np.arange(len(permutation))
    K = system.K[permutation][:, permutation].tocsr()  # noqa: N806
    return ConstrainedSystem(
        K, system.f[permutation], inverse[system.constrained], system.values, system.base
    )
