"""Constants for polysfem."""

from typing import Final

NAME: Final = "polysfem"
VERSION = "0.1.0"

ISSUE_URL: Final = "https://github.com/polysfem/polysfem/issues"

STARTUP_MESSAGE: Final = f"""
-------------------------------------------------------------------
{NAME}
Version: {VERSION}
Cell-based smoothed FEM on polygonal and polyhedral meshes.
If you have any issues with this you need to open an issue here:
{ISSUE_URL}
-------------------------------------------------------------------
"""

METHOD_CSFEM: Final = "csfem"
METHOD_PFEM: Final = "pfem"
METHOD_BOTH: Final = "both"
METHODS: Final = (METHOD_CSFEM, METHOD_PFEM)

PROBLEM_PATCH: Final = "patch"
PROBLEM_PATCH_3D: Final = "patch3d"
PROBLEM_CANTILEVER_2D: Final = "cantilever2d"
PROBLEM_PLATE_HOLE: Final = "plate_hole"
PROBLEM_CUBE_BODY: Final = "cube_body"
PROBLEM_CANTILEVER_3D: Final = "cantilever3d"
BENCHMARK_PROBLEMS: Final = (
    PROBLEM_CANTILEVER_2D,
    PROBLEM_PLATE_HOLE,
    PROBLEM_CUBE_BODY,
    PROBLEM_CANTILEVER_3D,
)
PROBLEMS: Final = (PROBLEM_PATCH, PROBLEM_PATCH_3D, *BENCHMARK_PROBLEMS)

# Geometry tolerances, relative to the element or domain diameter
ON_BOUNDARY_TOL: Final = 1e-12
PLANARITY_TOL: Final = 1e-9
CONVEXITY_TOL: Final = 1e-12
WELD_TOL: Final = 1e-10
# Voronoi edges shorter than this fraction of the cell size are collapsed
SHORT_EDGE_TOL: Final = 1e-3
# Nodes within this fraction of the hole radius lie on the hole
HOLE_TOL: Final = 1e-9
TILING_TOL: Final = 1e-8
DEGENERATE_MEASURE_TOL: Final = 1e-14
QUADRATURE_NUDGE: Final = 1e-12

# Mesh generation
DEFAULT_LLOYD_ITERATIONS: Final = 50
DEFAULT_SEED: Final = 42
MIN_ELEMENTS: Final = 4

# Smoothing quadrature (points per facet)
SMOOTHING_BOUNDARY_POINTS_2D: Final = 2
SMOOTHING_INTERIOR_POINTS_2D: Final = 3

# PFEM quadrature orders per sub-simplex
PFEM_ORDER_2D: Final = 8
PFEM_ORDER_3D: Final = 6
PFEM_REPRODUCTION_ORDER_3D: Final = 9
L2_ERROR_ORDER: Final = 6
H1_CELL_ORDER: Final = 3
TRACTION_POINTS_2D: Final = 3

# Solver
SOLVER_TOLERANCE: Final = 1e-12
RESIDUAL_CONTRACT: Final = 1e-10
DIRECT_SOLVE_MAX_DOFS: Final = 200_000
CG_MAXITER_FACTOR: Final = 20

# Benchmarks
SERIES_TERMS: Final = 50
LADDER_2D: Final = (100, 200, 400, 800)
LADDER_3D: Final = (4, 6, 8, 10)
DEFAULT_LEVELS_2D: Final = 4
DEFAULT_LEVELS_3D: Final = 3
MIN_RATE_LEVELS: Final = 3

# Output
CSV_COLUMNS: Final = ("method", "problem", "level", "ndof", "h", "L2", "H1")
VTK_DISPLACEMENT: Final = "displacement"
VTK_SMOOTHED_STRESS: Final = "smoothed_stress"
VTK_STRESS: Final = "stress"

EXIT_OK: Final = 0
EXIT_NUMERICAL: Final = 1
EXIT_INPUT: Final = 2

# Configuration keys
CONF_METHOD: Final = "method"
CONF_PROBLEM: Final = "problem"
CONF_LEVELS: Final = "levels"
CONF_LLOYD_ITERATIONS: Final = "lloyd_iterations"
CONF_SEED: Final = "seed"
CONF_PFEM_ORDER_2D: Final = "pfem_order_2d"
CONF_PFEM_ORDER_3D: Final = "pfem_order_3d"
CONF_LOAD_ORDER: Final = "load_order"
CONF_BOUNDARY_POINTS: Final = "smoothing_boundary_points"
CONF_INTERIOR_POINTS: Final = "smoothing_interior_points"
CONF_FACET_ORDER: Final = "smoothing_facet_order"
CONF_TOLERANCE: Final = "solver_tolerance"
CONF_DIRECT_MAX_DOFS: Final = "direct_solve_max_dofs"
CONF_WORKERS: Final = "workers"
CONF_OUTPUT: Final = "output"
CONF_PLOT: Final = "plot"
CONF_VTK: Final = "vtk"
