import numpy as np
import pytest

from spectral_tuner.model import forward


def finite_difference_jacobian(spec, params, coords, h=1e-5):
    """Central differences of the summed outputs, one parameter at a time."""
    flat = params.flat
    out = np.empty((flat.size, np.asarray(coords).shape[0]))
    work = flat.copy()
    for k in range(flat.size):
        work[k] = flat[k] + h
        fp = forward(spec, params.with_flat(work), coords).sum(axis=1)
        work[k] = flat[k] - h
        fm = forward(spec, params.with_flat(work), coords).sum(axis=1)
        work[k] = flat[k]
        out[k] = (fp - fm) / (2 * h)
    return out


def column_relative_error(a, b):
    return np.linalg.norm(a - b, axis=0) / np.linalg.norm(b, axis=0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one PASS/FAIL line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
