import numpy as np
import pytest

from risctl.link import LinkBudget


def make_budget(direct, to_bs, from_user, scale=None, atten=None, p_tx=1.0, noise=1e-12):
    direct = np.asarray(direct, dtype=complex)
    to_bs = np.asarray(to_bs, dtype=complex)
    from_user = np.asarray(from_user, dtype=complex)
    U, R = direct.shape[0], to_bs.shape[0]
    scale = np.ones((U, R)) if scale is None else np.asarray(scale, dtype=float)
    atten = np.ones((U, R)) if atten is None else np.asarray(atten, dtype=float)
    return LinkBudget(p_tx, noise, direct, to_bs, from_user, scale, atten)


@pytest.fixture
def budget_factory():
    return make_budget


# acceptance-criterion lines collected by tests/test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
