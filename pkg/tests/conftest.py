import time

import numpy as np
import pytest

from qnsym.operators import build_tfim, collective_z, maximally_mixed, product_state_C, thermal_state
from qnsym.symmetry import tfim_c_transform, tfim_t_transform

ACCEPTANCE_LINES = []
_SESSION_START = time.perf_counter()


def record_criterion(number, title, passed, detail=""):
    status = "PASS" if passed else "FAIL"
    ACCEPTANCE_LINES.append(f"[{status}] criterion {number}: {title}" + (f" ({detail})" if detail else ""))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
    elapsed = time.perf_counter() - _SESSION_START
    terminalreporter.write_line(f"session wall time {elapsed:.1f} s (budget 300 s)")


@pytest.fixture
def rng():
    return np.random.default_rng(20241019)


@pytest.fixture(scope="session")
def tfim8():
    return build_tfim(8, 1.5, periodic=True)


@pytest.fixture(scope="session")
def zcol8():
    return collective_z(8)


@pytest.fixture(scope="session")
def rho_c8():
    return product_state_C(8)


@pytest.fixture(scope="session")
def rho_thermal8(tfim8):
    return thermal_state(tfim8, 1.0)


@pytest.fixture(scope="session")
def rho_mixed8():
    return maximally_mixed(8)


@pytest.fixture(scope="session")
def c8():
    return tfim_c_transform(8)


@pytest.fixture(scope="session")
def t8():
    return tfim_t_transform(8)
