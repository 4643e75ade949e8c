import math
import sys

import numpy as np
import pytest
from hypothesis import settings

from busplanner import fixtures
from busplanner.geometry import ReferencePath, build_reference_path
from busplanner.scenario import scenario_from_dict

settings.register_profile("repo", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("repo")


def straight_path(length=60.0, delta_s=0.5):
    return build_reference_path([(0.0, 0.0), (length, 0.0)], delta_s)


def circle_path(radius=20.0, length=90.0, delta_s=0.5):
    """Exact circle samples starting at the origin heading +x.

    Positive ``radius`` turns left (center at (0, R)), negative turns right.
    """
    n = int(round(length / delta_s))
    s = np.arange(n + 1) * delta_s
    r = abs(radius)
    sign = 1.0 if radius > 0 else -1.0
    th = s / r
    return ReferencePath(
        delta_s=delta_s,
        stations=s,
        x=r * np.sin(th),
        y=sign * r * (1.0 - np.cos(th)),
        psi=sign * th,
        kappa=np.full(n + 1, 1.0 / radius),
    )


def spline_path(delta_s=0.5):
    """Gently curving spline through hand-picked waypoints (|kappa| below 0.05)."""
    wp = [(0, 0), (15, 2), (30, 0), (45, -4), (60, -3), (75, 2), (90, 4)]
    return build_reference_path(wp, delta_s)


def circle_center(radius):
    return np.array([0.0, radius])


@pytest.fixture(scope="session")
def straight():
    return straight_path()


@pytest.fixture(scope="session")
def circle():
    return circle_path()


@pytest.fixture(scope="session")
def spline():
    return spline_path()


def load_fixture(name, **kw):
    make = fixtures.ALL[name] if not kw else getattr(fixtures, name)
    return scenario_from_dict(make(**kw) if kw else make())


@pytest.fixture(scope="session")
def straight_scenario():
    return load_fixture("straight_road")


@pytest.fixture(scope="session")
def tight_scenario():
    return load_fixture("tight_passage")


def angle_close(a, b, tol):
    return abs(math.remainder(a - b, 2 * math.pi)) <= tol


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    lines = getattr(acceptance, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
