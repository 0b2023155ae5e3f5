import math

import pytest

from kleinbarrier.kinematics import DoubleBarrierSpec, ParticleSpec

LAMBDA = 2.0 * math.pi  # Compton wavelength for m = 1


@pytest.fixture(scope="session")
def electron():
    return ParticleSpec(1.0)


@pytest.fixture(scope="session")
def fig2_spec():
    """a = 2.5 lambda, d = 5 lambda."""
    return DoubleBarrierSpec(0.0, 2.5 * LAMBDA, 5.0 * LAMBDA)


# one line per acceptance criterion, repeated at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
