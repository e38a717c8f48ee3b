import numpy as np
import pytest

from teanet.autodiff import Tensor


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def t3(values, requires_grad=False):
    """Single-sample, single-channel tensor from a flat list."""
    a = np.asarray(values, dtype=np.float64).reshape(1, -1, 1)
    return Tensor(a, requires_grad=requires_grad)


ACCEPTANCE = []


def record_acceptance(number, ok, detail):
    """Log one acceptance line; the summary is printed at the end of the session."""
    line = f"ACCEPTANCE {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
