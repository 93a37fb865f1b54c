import numpy as np
import pytest

from penalty_contact.cases import get_case
from penalty_contact.mesh import BoundaryTag, generate_structured_square

SEED = 20240611

D, N, C = BoundaryTag.DIRICHLET, BoundaryTag.NEUMANN, BoundaryTag.CONTACT
CONTACT_TAGGING = {"bottom": C, "right": D, "top": N, "left": D}
CLAMPED_TAGGING = {"bottom": D, "right": D, "top": D, "left": D}

# filled by tests/test_acceptance.py, printed at the end of the session
ACCEPTANCE_RESULTS = {}


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


@pytest.fixture
def square4():
    return generate_structured_square(4, CONTACT_TAGGING)


@pytest.fixture(scope="session")
def flat_punch():
    return get_case("flat_punch")


@pytest.fixture(scope="session")
def patch():
    return get_case("patch")


@pytest.fixture(scope="session")
def tension():
    return get_case("tension")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {key}: {detail}")
