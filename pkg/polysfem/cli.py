"""Command-line front end: mesh, solve, converge and validate."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from .benchmarks import ConvergenceReport
from .campaign import LevelRun, plot_convergence, run_ladder, solve_and_measure
from .config import RunConfig, build_run_config, load_config_file, merge
from .const import (
    BENCHMARK_PROBLEMS,
    CONF_BOUNDARY_POINTS,
    CONF_DIRECT_MAX_DOFS,
    CONF_FACET_ORDER,
    CONF_INTERIOR_POINTS,
    CONF_LEVELS,
    CONF_LLOYD_ITERATIONS,
    CONF_LOAD_ORDER,
    CONF_METHOD,
    CONF_OUTPUT,
    CONF_PFEM_ORDER_2D,
    CONF_PFEM_ORDER_3D,
    CONF_PLOT,
    CONF_PROBLEM,
    CONF_SEED,
    CONF_TOLERANCE,
    CONF_VTK,
    CONF_WORKERS,
    DEFAULT_LEVELS_2D,
    DEFAULT_LEVELS_3D,
    EXIT_INPUT,
    EXIT_NUMERICAL,
    EXIT_OK,
    METHOD_BOTH,
    METHODS,
    MIN_RATE_LEVELS,
    PROBLEMS,
    STARTUP_MESSAGE,
    VERSION,
)
from .elasticity import Material, PlaneModel
from .exceptions import (
    ConfigError,
    ConstraintError,
    InpError,
    MaterialError,
    PolySfemError,
    SolverError,
)
from .export import write_vtk
from .inp_io import Method, Model, build_model, read_inp, write_inp_file
from .json_encoder import CustomJSONEncoder
from .mesh_core import DomainGeometry, Mesh, polyhedral_mesh, validate_mesh, voronoi_mesh
from .presets import apply_preset, get_preset, level_mesh, preset_model
from .system import apply_dirichlet, assemble, recover_fields, relative_residual, solve

_LOGGER = logging.getLogger(__name__)

_INPUT_ERRORS = (InpError, ConfigError, MaterialError, ConstraintError, OSError)

# Keys the command line may override in a --config file
_OVERRIDABLE = (
    CONF_PROBLEM,
    CONF_METHOD,
    CONF_LEVELS,
    CONF_LLOYD_ITERATIONS,
    CONF_SEED,
    CONF_OUTPUT,
    CONF_PLOT,
    CONF_VTK,
    CONF_PFEM_ORDER_2D,
    CONF_PFEM_ORDER_3D,
    CONF_LOAD_ORDER,
    CONF_BOUNDARY_POINTS,
    CONF_INTERIOR_POINTS,
    CONF_FACET_ORDER,
    CONF_TOLERANCE,
    CONF_DIRECT_MAX_DOFS,
    CONF_WORKERS,
)


def parse_domain(text: str) -> DomainGeometry:
    """Domain from `rect:LxD`, `square:S`, `plate:AxS`, `cube:S` or `box:AxBxC`."""
    kind, _, sizes = text.partition(":")
    try:
        values = [float(v) for v in sizes.lower().split("x")] if sizes else []
    except ValueError as error:
        raise ConfigError(f"Bad domain sizes in {text!r}") from error
    shapes = {"rect": 2, "square": 1, "plate": 2, "cube": 1, "box": 3}
    if kind not in shapes or len(values) != shapes[kind]:
        raise ConfigError(
            f"Unknown domain {text!r}; use rect:LxD, square:S, plate:AxS, cube:S or box:AxBxC"
        )
    try:
        if kind == "rect":
            return DomainGeometry.rectangle(*values)
        if kind == "square":
            return DomainGeometry.rectangle(values[0], values[0])
        if kind == "plate":
            return DomainGeometry.quarter_plate_with_hole(*values)
        if kind == "cube":
            return DomainGeometry.box((values[0],) * 3)
        return DomainGeometry.box(tuple(values))
    except PolySfemError as error:
        raise ConfigError(str(error)) from error


def _add_settings(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("solver settings")
    group.add_argument("--pfem-order-2d", dest=CONF_PFEM_ORDER_2D, type=int)
    group.add_argument("--pfem-order-3d", dest=CONF_PFEM_ORDER_3D, type=int)
    group.add_argument("--load-order", dest=CONF_LOAD_ORDER, type=int)
    group.add_argument("--smoothing-boundary-points", dest=CONF_BOUNDARY_POINTS, type=int)
    group.add_argument("--smoothing-interior-points", dest=CONF_INTERIOR_POINTS, type=int)
    group.add_argument("--smoothing-facet-order", dest=CONF_FACET_ORDER, type=int)
    group.add_argument("--tolerance", dest=CONF_TOLERANCE, type=float)
    group.add_argument("--direct-max-dofs", dest=CONF_DIRECT_MAX_DOFS, type=int)
    group.add_argument("--workers", dest=CONF_WORKERS, type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polysfem",
        description="Smoothed and polygonal finite elements for linear elastostatics.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    parser.add_argument("--config", type=Path, help="YAML settings file")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true")
    verbosity.add_argument("-q", "--quiet", action="store_true")
    commands = parser.add_subparsers(dest="command", required=True)

    mesh = commands.add_parser("mesh", help="generate a Voronoi mesh and write a deck")
    mesh.add_argument("--domain", help="rect:LxD, square:S, plate:AxS, cube:S or box:AxBxC")
    mesh.add_argument("--problem", dest=CONF_PROBLEM, choices=PROBLEMS)
    mesh.add_argument("--level", type=int, default=1)
    mesh.add_argument("--n", type=int, help="element count (2D) or base polygon count (3D)")
    mesh.add_argument("--layers", type=int, default=1)
    mesh.add_argument("--lloyd", dest=CONF_LLOYD_ITERATIONS, type=int)
    mesh.add_argument("--seed", dest=CONF_SEED, type=int)
    mesh.add_argument("--E", dest="young", type=float)
    mesh.add_argument("--nu", dest="poisson", type=float)
    mesh.add_argument("-o", "--output", dest=CONF_OUTPUT, required=True)

    run = commands.add_parser("solve", help="solve a deck or a benchmark preset")
    run.add_argument("deck", nargs="?", type=Path)
    run.add_argument("--problem", dest=CONF_PROBLEM, choices=PROBLEMS)
    run.add_argument("--method", dest=CONF_METHOD, choices=METHODS)
    run.add_argument("--level", type=int, default=1)
    run.add_argument("--lloyd", dest=CONF_LLOYD_ITERATIONS, type=int)
    run.add_argument("--seed", dest=CONF_SEED, type=int)
    run.add_argument("--vtk", dest=CONF_VTK)
    run.add_argument("--json", action="store_true", help="print the summary as JSON")
    _add_settings(run)

    converge = commands.add_parser("converge", help="run a refinement ladder")
    converge.add_argument("--problem", dest=CONF_PROBLEM, choices=BENCHMARK_PROBLEMS)
    converge.add_argument("--method", dest=CONF_METHOD, choices=(*METHODS, METHOD_BOTH))
    converge.add_argument("--levels", dest=CONF_LEVELS, type=int)
    converge.add_argument("--lloyd", dest=CONF_LLOYD_ITERATIONS, type=int)
    converge.add_argument("--seed", dest=CONF_SEED, type=int)
    converge.add_argument("-o", "--output", dest=CONF_OUTPUT, help="CSV table")
    converge.add_argument("--plot", dest=CONF_PLOT, help="SVG log-log plot")
    converge.add_argument("--json", action="store_true", help="print the summary as JSON")
    _add_settings(converge)

    check = commands.add_parser("validate", help="check the mesh of a deck")
    check.add_argument("deck", type=Path)
    return parser


def _setup_logging(args: argparse.Namespace) -> None:
    level = logging.INFO
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Config file values overridden by explicit flags, validated once."""
    file_values = load_config_file(args.config) if args.config else {}
    overrides = {key: getattr(args, key, None) for key in _OVERRIDABLE}
    return build_run_config(merge(file_values, overrides))


def _emit(summary: dict[str, Any], as_json: bool) -> None:  # noqa: FBT001
    if as_json:
        print(json.dumps(summary, cls=CustomJSONEncoder, indent=2))  # noqa: T201
        return
    print(", ".join(f"{key}={value}" for key, value in summary.items()))  # noqa: T201


# ─── mesh ─────────────────────────────────────────────────────────────────────


def cmd_mesh(args: argparse.Namespace, config: RunConfig) -> int:
    """Generate a mesh and write it as a deck grouped by node count."""
    if config.problem is not None:
        preset = get_preset(config.problem)
        mesh = level_mesh(preset, args.level, config.lloyd_iterations, config.seed)
        material = preset.exact.material
    else:
        if args.domain is None or args.n is None:
            raise ConfigError("mesh needs --domain and --n, or --problem")
        domain = parse_domain(args.domain)
        mesh = _generate(domain, args.n, args.layers, config)
        material = Material(1.0, 0.3, PlaneModel.PLANE_STRESS if domain.dim == 2 else PlaneModel.SOLID_3D)  # noqa: PLR2004
    if args.young is not None or args.poisson is not None:
        material = dataclasses.replace(
            material,
            E=material.E if args.young is None else args.young,
            nu=material.nu if args.poisson is None else args.poisson,
        )
    model = build_model(mesh, material)
    write_inp_file(model, config.output)
    groups = ", ".join(f"{g.label}:{len(g.element_ids)}" for g in model.groups)
    _LOGGER.info("Wrote %s", config.output)
    print(f"elements={len(mesh.elements)}, nodes={len(mesh.nodes)}, groups={groups}")  # noqa: T201
    return EXIT_OK


def _generate(domain: DomainGeometry, n: int, layers: int, config: RunConfig) -> Mesh:
    if domain.dim == 3:  # noqa: PLR2004
        return polyhedral_mesh(domain, n, layers, config.lloyd_iterations, config.seed)
    return voronoi_mesh(domain, n, config.lloyd_iterations, config.seed)


# ─── solve ────────────────────────────────────────────────────────────────────


def _solve_model(args: argparse.Namespace, config: RunConfig) -> Model:
    method = getattr(args, CONF_METHOD, None)
    preset = get_preset(config.problem) if config.problem else None
    if args.deck is not None:
        model = read_inp(args.deck)
        if preset is not None:
            return apply_preset(preset, model, method)
        if method is not None:
            return dataclasses.replace(model, method=Method(method))
        return model
    if preset is None:
        raise ConfigError("solve needs a deck or --problem")
    mesh = level_mesh(preset, args.level, config.lloyd_iterations, config.seed)
    return preset_model(preset, mesh, method or config.method)


def cmd_solve(args: argparse.Namespace, config: RunConfig) -> int:
    """Solve one model; report errors when a preset supplies the exact solution."""
    if config.method == METHOD_BOTH:
        raise ConfigError("solve runs one method; use converge for both")
    model = _solve_model(args, config)
    settings = config.settings
    if config.problem is not None:
        run: LevelRun = solve_and_measure(get_preset(config.problem), model, args.level, settings)
        solution, residual = run.solution, run.residual
        summary: dict[str, Any] = {
            "problem": config.problem,
            "method": model.method,
            "elements": run.result.elements,
            "ndof": run.result.ndof,
            "residual": residual,
            "L2": run.result.l2,
            "H1": run.result.h1,
            "integration_points": run.result.integration_points,
        }
    else:
        system = assemble(model, settings)
        constrained = apply_dirichlet(system, model.dirichlet)
        u = solve(constrained, settings)
        solution = recover_fields(model, u, system, settings)
        residual = relative_residual(constrained.K, u, constrained.f)
        summary = {
            "method": model.method,
            "elements": len(model.mesh.elements),
            "ndof": system.ndof,
            "residual": residual,
            "integration_points": len(solution.weights),
        }
    if config.vtk is not None:
        write_vtk(config.vtk, model, solution)
        summary["vtk"] = config.vtk
    _emit(summary, args.json)
    return EXIT_OK


# ─── converge ─────────────────────────────────────────────────────────────────


def _rates(report: ConvergenceReport) -> dict[str, Any]:
    if len(report.levels) < MIN_RATE_LEVELS:
        return {}
    l2, h1 = report.l2_rate, report.h1_rate
    return {
        "L2_rate": l2.slope,
        "H1_rate": h1.slope,
        "monotone": l2.monotone and h1.monotone,
    }


def cmd_converge(args: argparse.Namespace, config: RunConfig) -> int:
    """Run the refinement ladder for each method and report fitted rates."""
    if config.problem is None:
        raise ConfigError("converge needs --problem")
    preset = get_preset(config.problem)
    levels = config.levels or (DEFAULT_LEVELS_2D if preset.dim == 2 else DEFAULT_LEVELS_3D)  # noqa: PLR2004
    reports = run_ladder(
        config.problem,
        config.methods,
        levels,
        config.settings,
        config.lloyd_iterations,
        config.seed,
        csv_path=config.output,
    )
    if config.plot is not None:
        plot_convergence(config.plot, reports)
    summary = {
        "problem": config.problem,
        "levels": levels,
        "rates": {method: _rates(report) for method, report in reports.items()},
    }
    if args.json:
        summary["results"] = {
            method: [dataclasses.asdict(r) for r in report.levels]
            for method, report in reports.items()
        }
        _emit(summary, as_json=True)
        return EXIT_OK
    for method, report in reports.items():
        for r in report.levels:
            print(  # noqa: T201
                f"{method} level={r.level} ndof={r.ndof} h={r.h:.4g} L2={r.l2:.4e} H1={r.h1:.4e}"
            )
        rates = _rates(report)
        if rates:
            flag = "" if rates["monotone"] else " (non-monotone)"
            print(  # noqa: T201
                f"{method} rates: L2={rates['L2_rate']:.3f} H1={rates['H1_rate']:.3f}{flag}"
            )
    return EXIT_OK


# ─── validate ─────────────────────────────────────────────────────────────────


def cmd_validate(args: argparse.Namespace, config: RunConfig) -> int:  # noqa: ARG001
    """Parse a deck and list mesh violations; exit 1 when any are found."""
    model = read_inp(args.deck)
    violations = validate_mesh(model.mesh)
    for violation in violations:
        where = f"element {violation.element_id}: " if violation.element_id is not None else ""
        print(f"{violation.kind}: {where}{violation.message}")  # noqa: T201
    if violations:
        return EXIT_NUMERICAL
    print(f"{args.deck}: {len(model.mesh.elements)} elements, no violations")  # noqa: T201
    return EXIT_OK


COMMANDS = {
    "mesh": cmd_mesh,
    "solve": cmd_solve,
    "converge": cmd_converge,
    "validate": cmd_validate,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args)
    _LOGGER.info(STARTUP_MESSAGE)
    try:
        config = resolve_config(args)
        return COMMANDS[args.command](args, config)
    except _INPUT_ERRORS as error:
        _LOGGER.error("%s", error)  # noqa: TRY400
        return EXIT_INPUT
    except SolverError as error:
        _LOGGER.error("%s", error)  # noqa: TRY400
        for step, residual in enumerate(error.residual_history):
            print(f"residual[{step}] = {residual:.6e}", file=sys.stderr)  # noqa: T201
        return EXIT_NUMERICAL
    except PolySfemError as error:
        _LOGGER.error("%s", error)  # noqa: TRY400
        return EXIT_NUMERICAL
