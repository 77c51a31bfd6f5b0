"""Command-line front end tests.

Features: cli
See: docs/FEATURES.md#cli
"""

from __future__ import annotations

import json

import pytest

from polysfem.cli import main, parse_domain
from polysfem.const import CSV_COLUMNS, EXIT_INPUT, EXIT_NUMERICAL, EXIT_OK
from polysfem.exceptions import ConfigError
from polysfem.inp_io import read_inp

pytestmark = pytest.mark.feature("cli")


@pytest.mark.parametrize(
    ("text", "dim", "measure"),
    [
        ("rect:8x4", 2, 32.0),
        ("square:2", 2, 4.0),
        ("cube:1", 3, 1.0),
        ("box:1x2x3", 3, 6.0),
    ],
)
def test_parse_domain(text: str, dim: int, measure: float) -> None:
    domain = parse_domain(text)
    assert domain.dim == dim
    assert domain.measure == pytest.approx(measure)


@pytest.mark.parametrize("text", ["circle:1", "rect:8", "rect:axb", "box:1x2"])
def test_bad_domains(text: str) -> None:
    with pytest.raises(ConfigError):
        parse_domain(text)


def test_mesh_is_deterministic(tmp_path, capsys: pytest.CaptureFixture[str]) -> None:
    first, second = tmp_path / "a.inp", tmp_path / "b.inp"
    for path in (first, second):
        args = ["mesh", "--domain", "square:1", "--n", "20", "--lloyd", "3", "-o", str(path)]
        assert main(args) == EXIT_OK
    assert first.read_text(encoding="utf-8") == second.read_text(encoding="utf-8")
    assert "elements=20" in capsys.readouterr().out
    assert len(read_inp(first).mesh.elements) == 20


def test_mesh_material_flags(tmp_path) -> None:
    path = tmp_path / "steel.inp"
    args = ["mesh", "--domain", "rect:2x1", "--n", "8", "--E", "210e9", "--nu", "0.25", "-o", str(path)]
    assert main(args) == EXIT_OK
    assert {(g.E, g.nu) for g in read_inp(path).groups} == {(210e9, 0.25)}


def test_extruded_mesh(tmp_path, capsys: pytest.CaptureFixture[str]) -> None:
    path = tmp_path / "cube.inp"
    args = ["mesh", "--domain", "cube:1", "--n", "64", "--layers", "4", "--lloyd", "2", "-o", str(path)]
    assert main(args) == EXIT_OK
    assert "elements=256" in capsys.readouterr().out
    assert read_inp(path).dim == 3


def test_mesh_needs_a_domain(tmp_path) -> None:
    assert main(["mesh", "--n", "20", "-o", str(tmp_path / "x.inp")]) == EXIT_INPUT
    assert main(["mesh", "--domain", "circle:1", "--n", "20", "-o", str(tmp_path / "x.inp")]) == EXIT_INPUT


def test_validate_reports_a_clean_deck(tmp_path, capsys: pytest.CaptureFixture[str]) -> None:
    path = tmp_path / "patch.inp"
    assert main(["mesh", "--problem", "patch", "--lloyd", "3", "-o", str(path)]) == EXIT_OK
    capsys.readouterr()
    assert main(["validate", str(path)]) == EXIT_OK
    assert "no violations" in capsys.readouterr().out


def test_validate_flags_a_broken_deck(tmp_path, capsys: pytest.CaptureFixture[str]) -> None:
    path = tmp_path / "twisted.inp"
    path.write_text(
        """\
*Node
1, 0.0, 0.0
2, 1.0, 0.0
3, 1.0, 1.0
4, 0.0, 1.0
*User element, nodes=4, type=U4, properties=2, coordinates=2
1,2
*Element, type=U4, ELSET=four
1, 1, 3, 2, 4
*UEL Property, ELSET=four
1.0, 0.3
""",
        encoding="utf-8",
    )
    assert main(["validate", str(path)]) == EXIT_NUMERICAL
    assert "element 1" in capsys.readouterr().out


def test_missing_deck_is_an_input_error(tmp_path) -> None:
    assert main(["validate", str(tmp_path / "missing.inp")]) == EXIT_INPUT


def test_solve_preset_as_json(capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["solve", "--problem", "patch", "--lloyd", "3", "--json"]) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["method"] == "csfem"
    assert summary["elements"] == 100
    assert summary["L2"] < 1e-9
    assert summary["residual"] < 1e-10


def test_solve_deck_with_preset_and_vtk(tmp_path, capsys: pytest.CaptureFixture[str]) -> None:
    deck, vtk = tmp_path / "patch.inp", tmp_path / "patch.vtk"
    assert main(["mesh", "--domain", "square:1", "--n", "30", "--lloyd", "3", "-o", str(deck)]) == EXIT_OK
    capsys.readouterr()
    args = ["solve", str(deck), "--problem", "patch", "--method", "pfem", "--vtk", str(vtk)]
    assert main(args) == EXIT_OK
    out = capsys.readouterr().out
    assert "method=pfem" in out
    assert vtk.exists()


def test_solve_reads_settings_from_config(tmp_path, capsys: pytest.CaptureFixture[str]) -> None:
    config = tmp_path / "run.yaml"
    config.write_text("method: pfem\nlloyd_iterations: 3\n", encoding="utf-8")
    assert main(["--config", str(config), "solve", "--problem", "patch", "--json"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["method"] == "pfem"

    config.write_text("pfem_order_2d: 0\n", encoding="utf-8")
    assert main(["--config", str(config), "solve", "--problem", "patch"]) == EXIT_INPUT


def test_solve_needs_a_deck_or_problem() -> None:
    assert main(["solve"]) == EXIT_INPUT


def test_argument_errors_exit_with_usage() -> None:
    with pytest.raises(SystemExit) as info:
        main(["solve", "--problem", "patch", "--method", "both"])
    assert info.value.code == EXIT_INPUT
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == EXIT_OK


def test_converge_writes_csv_and_plot(tmp_path, capsys: pytest.CaptureFixture[str]) -> None:
    table, plot = tmp_path / "rates.csv", tmp_path / "rates.svg"
    args = [
        "converge",
        "--problem",
        "cantilever2d",
        "--method",
        "both",
        "--levels",
        "3",
        "--lloyd",
        "3",
        "-o",
        str(table),
        "--plot",
        str(plot),
    ]
    assert main(args) == EXIT_OK
    out = capsys.readouterr().out
    assert "csfem rates:" in out
    assert "pfem rates:" in out
    lines = table.read_text(encoding="utf-8").splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 7
    assert plot.read_text(encoding="utf-8").lstrip().startswith("<?xml")


def test_converge_needs_a_problem() -> None:
    assert main(["converge"]) == EXIT_INPUT
