"""Benchmark presets, refinement ladders and convergence campaign tests.

Features: campaign
See: docs/FEATURES.md#campaign
"""

from __future__ import annotations

import csv
import logging

import numpy as np
import pytest

from polysfem.benchmarks import ConvergenceReport, LevelResult, Problem
from polysfem.campaign import (
    csv_rows,
    plot_convergence,
    run_ladder,
    run_level,
    smoothing_sensitivity,
    solve_and_measure,
    write_csv,
)
from polysfem.const import CSV_COLUMNS
from polysfem.elasticity import Material, PlaneModel
from polysfem.exceptions import BenchmarkError
from polysfem.inp_io import Method, build_model
from polysfem.presets import (
    apply_preset,
    dirichlet_for,
    get_preset,
    level_mesh,
    preset_model,
    tractions_for,
)
from polysfem.system import assemble

pytestmark = pytest.mark.feature("campaign")

LLOYD = 5


@pytest.fixture(name="cantilever_mesh", scope="module")
def cantilever_mesh_fixture():
    return level_mesh(get_preset("cantilever2d"), 1, lloyd_iterations=LLOYD)


def test_unknown_problem() -> None:
    with pytest.raises(BenchmarkError, match="Unknown problem 'beam'"):
        get_preset("beam")


@pytest.mark.parametrize(
    ("problem", "dim", "measure"),
    [
        ("patch", 2, 1.0),
        ("patch3d", 3, 1.0),
        ("cantilever2d", 2, 32.0),
        ("plate_hole", 2, 25.0 - np.pi / 4),
        ("cube_body", 3, 2.0),
        ("cantilever3d", 3, 20.0),
    ],
)
def test_preset_domains(problem: str, dim: int, measure: float) -> None:
    preset = get_preset(problem)
    assert preset.problem is Problem(problem)
    assert preset.dim == dim
    assert preset.domain.measure == pytest.approx(measure)
    assert preset.exact.dim == dim


def test_ladder_sizes() -> None:
    mesh = level_mesh(get_preset("patch"), 1, lloyd_iterations=LLOYD)
    assert len(mesh.elements) == 100
    cube = level_mesh(get_preset("cube_body"), 1, lloyd_iterations=LLOYD)
    assert len(cube.elements) == 16 * 4
    bar = level_mesh(get_preset("cantilever3d"), 1, lloyd_iterations=LLOYD)
    assert len(bar.elements) == 16 * 10
    with pytest.raises(BenchmarkError, match="1-based"):
        level_mesh(get_preset("patch"), 0)


def test_cantilever_boundary_conditions(cantilever_mesh) -> None:
    preset = get_preset("cantilever2d")
    dirichlet = dirichlet_for(preset, cantilever_mesh)
    rows = cantilever_mesh.rows([bc.node for bc in dirichlet])
    np.testing.assert_allclose(cantilever_mesh.coords[rows, 0], 0.0, atol=1e-9)
    assert {bc.component for bc in dirichlet} == {0, 1}
    exact = preset.exact.displacement(cantilever_mesh.coords[rows])
    values = np.array([bc.value for bc in dirichlet])
    np.testing.assert_allclose(values, exact[np.arange(len(dirichlet)), [bc.component for bc in dirichlet]])

    loads = tractions_for(preset, cantilever_mesh)
    length = 0.0
    for load in loads:
        elem = cantilever_mesh.element(load.element)
        ends = cantilever_mesh.rows(cantilever_mesh.facets(elem)[load.facet])
        xy = cantilever_mesh.coords[ends]
        np.testing.assert_allclose(xy[:, 0], 8.0, atol=1e-9)
        length += float(np.linalg.norm(xy[1] - xy[0]))
    assert length == pytest.approx(4.0)


def test_cantilever_traction_resultant(cantilever_mesh) -> None:
    model = preset_model(get_preset("cantilever2d"), cantilever_mesh)
    resultant = assemble(model).f.reshape(-1, 2).sum(axis=0)
    np.testing.assert_allclose(resultant, [0.0, -250.0], atol=1e-9)


def test_plate_is_clamped_on_straight_edges() -> None:
    preset = get_preset("plate_hole")
    mesh = level_mesh(preset, 1, lloyd_iterations=LLOYD)
    clamped = mesh.coords[mesh.rows({bc.node for bc in dirichlet_for(preset, mesh)})]
    on_edge = (np.abs(clamped) < 1e-8).any(axis=1) | (np.abs(clamped - 5.0) < 1e-8).any(axis=1)
    assert on_edge.all()
    assert tractions_for(preset, mesh) == ()


def test_apply_preset_overrides_deck(cantilever_mesh, caplog: pytest.LogCaptureFixture) -> None:
    deck = build_model(cantilever_mesh, Material(1.0, 0.2))
    with caplog.at_level(logging.WARNING, logger="polysfem.presets"):
        model = apply_preset(get_preset("cantilever2d"), deck, "pfem")
    assert "overrides" in caplog.text
    assert all((g.E, g.nu) == (3.0e7, 0.3) for g in model.groups)
    assert model.method is Method.PFEM
    assert model.dirichlet
    assert model.tractions
    with pytest.raises(BenchmarkError, match="3D problem"):
        apply_preset(get_preset("cube_body"), deck)


def test_patch_level_is_exact() -> None:
    run = run_level("patch", "csfem", 1, lloyd_iterations=LLOYD)
    assert run.result.l2 < 1e-9
    assert run.result.h1 < 1e-8
    assert run.residual < 1e-10
    assert run.result.integration_points == sum(
        len(e.vertex_ids) for e in run.model.mesh.elements
    )


def test_patch3d_level_is_exact() -> None:
    run = run_level("patch3d", "csfem", 1, lloyd_iterations=LLOYD)
    assert run.model.plane_model is PlaneModel.SOLID_3D
    assert run.result.l2 < 1e-9
    assert run.result.h1 < 1e-8


def test_ladder_shares_meshes_and_writes_csv(tmp_path) -> None:
    seen = []
    path = tmp_path / "rates.csv"
    reports = run_ladder(
        "cantilever2d",
        ["csfem", "pfem"],
        2,
        lloyd_iterations=LLOYD,
        csv_path=path,
        on_level=lambda method, run: seen.append((method, run.result.level, run.result.ndof)),
    )
    assert [(m, lvl) for m, lvl, _ in seen] == [
        ("csfem", 1),
        ("pfem", 1),
        ("csfem", 2),
        ("pfem", 2),
    ]
    assert seen[0][2] == seen[1][2]
    csfem = reports["csfem"].levels
    assert csfem[1].h < csfem[0].h
    assert csfem[1].l2 < csfem[0].l2

    with path.open(encoding="utf-8") as stream:
        rows = list(csv.DictReader(stream))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert [(r["method"], r["level"]) for r in rows] == [
        ("csfem", "1"),
        ("pfem", "1"),
        ("csfem", "2"),
        ("pfem", "2"),
    ]
    assert float(rows[0]["L2"]) == csfem[0].l2


def test_csv_rows_interleave_levels(tmp_path) -> None:
    first = ConvergenceReport("patch", "csfem", [LevelResult(1, 10, 20, 0.1, 1e-3, 1e-2)])
    second = ConvergenceReport(
        "patch",
        "pfem",
        [LevelResult(1, 10, 20, 0.1, 2e-3, 2e-2), LevelResult(2, 40, 60, 0.05, 5e-4, 1e-2)],
    )
    rows = csv_rows({"csfem": first, "pfem": second})
    assert [(row[0], row[2]) for row in rows] == [("csfem", 1), ("pfem", 1), ("pfem", 2)]
    path = tmp_path / "out" / "rates.csv"
    write_csv(path, {"csfem": first, "pfem": second})
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[1] == "csfem,patch,1,20,0.1,0.001,0.01"


def test_plot_is_written(tmp_path) -> None:
    report = ConvergenceReport(
        "patch",
        "csfem",
        [LevelResult(k, 10, 20, 0.1 / 2**k, 1e-3 / 4**k, 1e-2 / 2**k) for k in range(3)],
    )
    path = tmp_path / "rates.svg"
    plot_convergence(path, {"csfem": report})
    text = path.read_text(encoding="utf-8")
    assert "<svg" in text


def test_plot_skips_reports_too_short_for_a_rate(tmp_path) -> None:
    short = ConvergenceReport(
        "patch",
        "pfem",
        [LevelResult(k, 10, 20, 0.1 / 2**k, 1e-3 / 4**k, 1e-2 / 2**k) for k in range(2)],
    )
    path = tmp_path / "short.svg"
    plot_convergence(path, {"pfem": short})
    assert "<svg" in path.read_text(encoding="utf-8")


def test_smoothing_sensitivity_vanishes_on_patch() -> None:
    assert smoothing_sensitivity("patch") < 1e-8


def test_solve_and_measure_reports_residual(cantilever_mesh) -> None:
    preset = get_preset("cantilever2d")
    run = solve_and_measure(preset, preset_model(preset, cantilever_mesh), level=7)
    assert run.result.level == 7
    assert run.residual < 1e-10
    assert run.result.ndof == 2 * len(cantilever_mesh.nodes)
    assert run.displacements.shape == (run.result.ndof,)
