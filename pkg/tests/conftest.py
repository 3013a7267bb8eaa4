import math

import numpy as np
import pytest

from pinchlab.mesh import generate_icosphere, perturb_radially
from pinchlab.spaceform import AmbientModel

# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES: list[str] = []

SPHERE_RADII = {-1.0: 1.0, 0.0: 1.0, 1.0: math.pi / 8}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def euclid():
    return AmbientModel(0.0)


@pytest.fixture(scope="session")
def unit_sphere4(euclid):
    return generate_icosphere(euclid, radius=1.0, subdivisions=4)


@pytest.fixture(scope="session")
def unit_sphere5(euclid):
    return generate_icosphere(euclid, radius=1.0, subdivisions=5)


@pytest.fixture(scope="session")
def geodesic_spheres():
    """Subdivision-5 geodesic spheres about the model origin in all three space forms."""
    return {d: generate_icosphere(AmbientModel(d), radius=R, subdivisions=5) for d, R in SPHERE_RADII.items()}


@pytest.fixture(scope="session")
def perturbed4(unit_sphere4):
    return perturb_radially(unit_sphere4, 0.1, seed=7)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


AMPLITUDES = (0.02, 0.05, 0.1, 0.2)


@pytest.fixture(scope="session")
def sphere_reports(geodesic_spheres):
    from pinchlab.pinch import assemble_report

    return {d: assemble_report(m) for d, m in geodesic_spheres.items()}


@pytest.fixture(scope="session")
def amplitude_sweep(unit_sphere4):
    """Reports along the (2, 0) perturbation sweep of the subdivision-4 unit sphere."""
    from pinchlab.pinch import assemble_report

    return [assemble_report(perturb_radially(unit_sphere4, a, wave=(2, 0))) for a in AMPLITUDES]


GLUED_EPS = (0.2, 0.1, 0.05)


@pytest.fixture(scope="session")
def glued_meshes():
    """Glued family at the default 128 x 128 resolution."""
    from pinchlab.gluedspheres import FamilyParams, build_mesh

    return {e: build_mesh(FamilyParams(eps=e)) for e in GLUED_EPS}


@pytest.fixture(scope="session")
def glued_report(glued_meshes):
    from pinchlab.pinch import assemble_report

    return assemble_report(glued_meshes[0.1])
