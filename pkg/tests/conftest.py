import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def full_hamiltonian(entries, s, E0=1.0):
    """Dense 2**n x 2**n H(s) built directly from a diagonal (test oracle)."""
    entries = np.asarray(entries, dtype=float)
    N = entries.size
    phi = np.full(N, 1.0 / np.sqrt(N))
    return s * np.diag(entries) - (1.0 - s) * E0 * np.outer(phi, phi)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES = {}


def record_acceptance(number, ok, detail):
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
