"""Shared benchmark vortices, solvers and extracted domains (built once per session)."""
import numpy as np
import pytest

from vortex_atmos.domain import extract_domain
from vortex_atmos.field import (GaussianPair, GaussianRing, HillBall, LambDipole, PatchPair,
                                TravelingVortex, calibrate_speed)
from vortex_atmos.stream import StreamSolver

HILL_W = 2.0 / 15.0


class Bench:
    """A traveling vortex with its solver and lazily extracted domain."""

    def __init__(self, tv):
        self.tv = tv
        self.solver = StreamSolver(tv)
        self._domain = None

    @property
    def domain(self):
        if self._domain is None:
            self._domain = extract_domain(self.tv, self.solver)
        return self._domain


@pytest.fixture(scope="session")
def hill():
    return Bench(TravelingVortex(HillBall(1.0, 1.0), HILL_W))


@pytest.fixture(scope="session")
def lamb():
    return Bench(TravelingVortex(LambDipole(1.0, 1.0), 1.0))


@pytest.fixture(scope="session")
def patch():
    p = PatchPair.from_circulation(1.0, 1.0, 0.1)
    return Bench(TravelingVortex(p, p.natural_speed()))


@pytest.fixture(scope="session")
def thin_patch():
    p = PatchPair.from_circulation(1.0, 1.0, 1.0 / 50.0)
    return Bench(TravelingVortex(p, p.natural_speed()))


def _gauss(sigma):
    g = GaussianRing(1.0, 1.0, sigma)
    W, res = calibrate_speed(g)
    return Bench(TravelingVortex(g, W, res))


@pytest.fixture(scope="session")
def gauss_thin():
    """sigma = 0.02: calibrated W sits below the centre speed (spheroidal)."""
    return _gauss(0.02)


@pytest.fixture(scope="session")
def gauss_toroid():
    """sigma = 0.004: calibrated W exceeds the centre speed (toroidal)."""
    return _gauss(0.004)


@pytest.fixture(scope="session")
def gauss_pair():
    g = GaussianPair(1.0, 1.0, 0.1)
    W, res = calibrate_speed(g)
    return Bench(TravelingVortex(g, W, res))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one summary line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
