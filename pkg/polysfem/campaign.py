"""Convergence campaigns: solve a problem over its refinement ladder and tabulate errors."""

from __future__ import annotations

import csv
import dataclasses
import io
import logging
import time
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .benchmarks import (
    ConvergenceReport,
    LevelResult,
    h1_energy_error,
    l2_error,
    mesh_size,
)
from .config import SolverSettings
from .const import CSV_COLUMNS, DEFAULT_LLOYD_ITERATIONS, DEFAULT_SEED, MIN_RATE_LEVELS
from .helpers import atomic_path, atomic_write_text
from .inp_io import Method, Model
from .mesh_core import Mesh
from .presets import Preset, get_preset, level_mesh, preset_model
from .system import (
    SolutionField,
    apply_dirichlet,
    assemble,
    recover_fields,
    relative_residual,
    solve,
)

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class LevelRun:
    """Everything one solve at one refinement level produced."""

    model: Model
    displacements: np.ndarray
    solution: SolutionField
    residual: float
    result: LevelResult


def solve_and_measure(
    preset: Preset,
    model: Model,
    level: int = 0,
    settings: SolverSettings | None = None,
) -> LevelRun:
    """Solve a model and measure its errors against the preset's exact solution."""
    start = time.perf_counter()
    settings = settings or SolverSettings()
    system = assemble(model, settings)
    constrained = apply_dirichlet(system, model.dirichlet)
    u = solve(constrained, settings)
    solution = recover_fields(model, u, system, settings)
    mesh = model.mesh
    exact = preset.exact
    result = LevelResult(
        level=level,
        elements=len(mesh.elements),
        ndof=system.ndof,
        h=mesh_size(preset.domain.measure, len(mesh.elements), mesh.dim),
        l2=l2_error(mesh, solution.displacements, exact.displacement),
        h1=h1_energy_error(model, solution, exact.strain),
        integration_points=len(solution.weights),
        seconds=time.perf_counter() - start,
    )
    return LevelRun(
        model, u, solution, relative_residual(constrained.K, u, constrained.f), result
    )


def run_level(  # noqa: PLR0913
    problem: str,
    method: Method | str,
    level: int,
    settings: SolverSettings | None = None,
    lloyd_iterations: int = DEFAULT_LLOYD_ITERATIONS,
    rng_seed: int = DEFAULT_SEED,
    mesh: Mesh | None = None,
) -> LevelRun:
    """Mesh, constrain, solve and measure one refinement level of a problem."""
    preset = get_preset(problem)
    mesh = mesh or level_mesh(preset, level, lloyd_iterations, rng_seed)
    run = solve_and_measure(preset, preset_model(preset, mesh, method), level, settings)
    _LOGGER.info(
        "%s %s level %s: %s elements, %s dofs, L2=%.3e, H1=%.3e (%.1f s)",
        problem,
        Method(method).value,
        level,
        run.result.elements,
        run.result.ndof,
        run.result.l2,
        run.result.h1,
        run.result.seconds,
    )
    return run


def run_ladder(  # noqa: PLR0913
    problem: str,
    methods: Sequence[str],
    levels: int,
    settings: SolverSettings | None = None,
    lloyd_iterations: int = DEFAULT_LLOYD_ITERATIONS,
    rng_seed: int = DEFAULT_SEED,
    csv_path: Path | None = None,
    on_level: Callable[[str, LevelRun], None] | None = None,
) -> dict[str, ConvergenceReport]:
    """Run levels 1..levels for every method; the methods share one mesh per level.

    The CSV is rewritten after every level, so a failure keeps the rows of
    the levels that finished.
    """
    preset = get_preset(problem)
    reports = {method: ConvergenceReport(problem, method) for method in methods}
    for level in range(1, levels + 1):
        mesh = level_mesh(preset, level, lloyd_iterations, rng_seed)
        for method in methods:
            run = run_level(problem, method, level, settings, mesh=mesh)
            reports[method].levels.append(run.result)
            if on_level is not None:
                on_level(method, run)
        if csv_path is not None:
            write_csv(csv_path, reports)
    return reports


def csv_rows(reports: dict[str, ConvergenceReport]) -> list[list[object]]:
    """Rows ordered by level, then by method in the order given."""
    rows = []
    depth = max((len(report.levels) for report in reports.values()), default=0)
    for index in range(depth):
        for method, report in reports.items():
            if index < len(report.levels):
                r = report.levels[index]
                rows.append([method, report.problem, r.level, r.ndof, r.h, r.l2, r.h1])
    return rows


def write_csv(path: Path, reports: dict[str, ConvergenceReport]) -> None:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in csv_rows(reports):
        writer.writerow([f"{v!r}" if isinstance(v, float) else v for v in row])
    atomic_write_text(path, buffer.getvalue())
    _LOGGER.debug("Wrote %s", path)


def plot_convergence(path: Path, reports: dict[str, ConvergenceReport]) -> None:
    """Log-log error plot with fitted slopes in the legend, saved as SVG."""
    import matplotlib as mpl  # noqa: PLC0415

    mpl.use("Agg")
    import matplotlib.pyplot as plt  # noqa: PLC0415

    figure, axes = plt.subplots(1, 2, figsize=(10, 4))
    for method, report in reports.items():
        if len(report.levels) < MIN_RATE_LEVELS:
            continue
        h = [r.h for r in report.levels]
        for ax, norm, fit in (
            (axes[0], [r.l2 for r in report.levels], report.l2_rate),
            (axes[1], [r.h1 for r in report.levels], report.h1_rate),
        ):
            ax.loglog(h, norm, marker="o", label=f"{method} (slope {fit.slope:.2f})")
    for ax, title in zip(axes, ("L2 displacement", "energy"), strict=True):
        ax.set_xlabel("h")
        ax.set_ylabel("relative error")
        ax.set_title(title)
        ax.grid(visible=True, which="both", linewidth=0.3)
        ax.legend()
    figure.suptitle(next(iter(reports.values())).problem if reports else "")
    figure.tight_layout()
    with atomic_path(path) as tmp:
        figure.savefig(tmp, format="svg")
    plt.close(figure)


def smoothing_sensitivity(
    problem: str,
    level: int = 1,
    settings: SolverSettings | None = None,
    extra_points: int = 2,
    rng_seed: int = DEFAULT_SEED,
) -> float:
    """Relative change of the CSFEM solution when every smoothing rule gets more points."""
    settings = settings or SolverSettings()
    preset = get_preset(problem)
    mesh = level_mesh(preset, level, rng_seed=rng_seed)
    raised = dataclasses.replace(
        settings,
        smoothing_boundary_points=settings.smoothing_boundary_points + extra_points,
        smoothing_interior_points=settings.smoothing_interior_points + extra_points,
        smoothing_facet_order=settings.smoothing_facet_order + extra_points,
    )
    model = preset_model(preset, mesh, Method.CSFEM)
    base = solve_and_measure(preset, model, level, settings).displacements
    finer = solve_and_measure(preset, model, level, raised).displacements
    return float(np.linalg.norm(finer - base) / np.linalg.norm(base))
