import numpy as np
import pytest

from stablesde.drift import radial_singular_drift
from stablesde.heat_kernel import build_kernel
from stablesde.lattice import Lattice
from stablesde.stable_law import SpectralAtom, StableLaw, four_atom_law

REF_WEIGHT = 0.05**1.5


@pytest.fixture(scope="session")
def ref_law():
    return four_atom_law(REF_WEIGHT)


@pytest.fixture(scope="session")
def skew_law():
    atoms = (
        SpectralAtom(0.02, (1.0, 0.0)),
        SpectralAtom(0.05, (0.6, 0.8)),
        SpectralAtom(0.03, (0.0, -1.0)),
    )
    return StableLaw(1.5, (0.3, -0.2), atoms)


@pytest.fixture(scope="session")
def ref_grid(ref_law):
    return build_kernel(ref_law, 12.8, 512)


@pytest.fixture(scope="session")
def lat():
    return Lattice(2, 4.0, 256)


@pytest.fixture(scope="session")
def ref_drift(lat):
    return radial_singular_drift(lat, 0.0183, 0.1, 1.0, 0.025, 12, 12, b1_vector=(0.01, 0.0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


@pytest.fixture
def verdict():
    """Record one acceptance line and fail the test if the criterion does not hold."""

    def record(number, title, ok, detail):
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
