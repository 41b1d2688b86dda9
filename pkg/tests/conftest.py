import math

import numpy as np
import pytest
from hypothesis import strategies as st

from simplex_collapse.core_state import NoiseSchedule, StateVector, new_state_vector


def real_state(probs) -> StateVector:
    return new_state_vector([math.sqrt(p) for p in probs])


@pytest.fixture
def psi_36():
    return new_state_vector([0.6, 0.8])


@pytest.fixture
def eta_01():
    return NoiseSchedule.uniform(0.1, 2)


@st.composite
def simplex_points(draw, n=None, min_p=1e-3):
    n = draw(st.integers(2, 5)) if n is None else n
    w = draw(st.lists(st.floats(min_p, 1.0), min_size=n, max_size=n))
    if sum(w) == 0.0:
        w[0] = 1.0
    p = np.asarray(w) / sum(w)
    return p


@st.composite
def couplings(draw, n, max_total=0.9):
    e = draw(st.lists(st.floats(1e-3, max_total / n), min_size=n, max_size=n))
    return np.asarray(e)


@st.composite
def state_vectors(draw, n=None):
    n = draw(st.integers(2, 4)) if n is None else n
    re = draw(st.lists(st.floats(-1.0, 1.0), min_size=n, max_size=n))
    im = draw(st.lists(st.floats(-1.0, 1.0), min_size=n, max_size=n))
    a = np.asarray(re) + 1j * np.asarray(im)
    norm = np.linalg.norm(a)
    if norm < 1e-3:
        a = np.zeros(n, dtype=complex)
        a[0] = 1.0
        norm = 1.0
    return StateVector(a / norm)


_ACCEPTANCE: list[str] = []


def pytest_runtest_logreport(report):
    if report.when == "call":
        _ACCEPTANCE.extend(v for k, v in report.user_properties if k == "acceptance")


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
