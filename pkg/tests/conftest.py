from __future__ import annotations

import numpy as np
import pytest

from polysfem.config import SolverSettings
from polysfem.elasticity import Material, PlaneModel
from polysfem.mesh_core import DomainGeometry, Mesh, voronoi_mesh
from tests.factories import mixed_mesh, unit_cube_mesh, unit_square_mesh


def pytest_addoption(parser):
    """Add --feature CLI option for filtering tests by feature group."""
    parser.addoption(
        "--feature",
        action="store",
        default=None,
        help="Only run tests marked with @pytest.mark.feature(NAME)",
    )


def pytest_configure(config):
    """Register custom markers."""
    config.addinivalue_line(
        "markers", "feature(name): mark test with feature group (see docs/FEATURES.md)"
    )
    config.addinivalue_line("markers", "slow: long-running convergence campaign")


def pytest_collection_modifyitems(config, items):
    """Filter tests by --feature option."""
    feature_name = config.getoption("--feature")
    if feature_name is None:
        return
    selected = []
    deselected = []
    for item in items:
        for marker in item.iter_markers("feature"):
            if feature_name in marker.args:
                selected.append(item)
                break
        else:
            deselected.append(item)
    config.hook.pytest_deselected(items=deselected)
    items[:] = selected


@pytest.fixture(name="rng")
def rng_fixture() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture(name="steel")
def steel_fixture() -> Material:
    return Material(200e9, 0.3, PlaneModel.PLANE_STRESS)


@pytest.fixture(name="solid")
def solid_fixture() -> Material:
    return Material(1.0, 0.3, PlaneModel.SOLID_3D)


@pytest.fixture(name="square_mesh")
def square_mesh_fixture() -> Mesh:
    return unit_square_mesh()


@pytest.fixture(name="hybrid_mesh")
def hybrid_mesh_fixture() -> Mesh:
    return mixed_mesh()


@pytest.fixture(name="cube_mesh")
def cube_mesh_fixture() -> Mesh:
    return unit_cube_mesh()


@pytest.fixture(name="patch_mesh", scope="session")
def patch_mesh_fixture() -> Mesh:
    """100-element Voronoi mesh of the unit square, seed 42."""
    return voronoi_mesh(DomainGeometry.rectangle(1.0, 1.0), 100, rng_seed=42)


@pytest.fixture(name="settings")
def settings_fixture() -> SolverSettings:
    return SolverSettings()
