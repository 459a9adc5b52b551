import numpy as np
import pytest

from lszwalk.davies import davies_instance, davies_lindbladian
from lszwalk.matrix_core import eig_hermitian

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Z = np.diag([1.0, -1.0]).astype(complex)


@pytest.fixture(scope="session")
def qubit1():
    """H = diag(0, 1), beta = 1, coupling X, Metropolis filter."""
    h = eig_hermitian(np.diag([0.0, 1.0]).astype(complex))
    return davies_instance(h, 1.0, [(PAULI_X, 1.0)], "metropolis")


@pytest.fixture(scope="session")
def qubit1_canonical(qubit1):
    return davies_lindbladian(qubit1)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    try:
        from test_acceptance import CRITERION_LINES
    except ImportError:
        return
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERION_LINES:
            terminalreporter.write_line(line)
