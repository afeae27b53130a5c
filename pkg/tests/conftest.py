import numpy as np
import pytest

from motensor.tensor import RankOneSum


def random_rank_one(rng, n=None, m=None, r=None, orders=(2, 3, 4, 5, 6)):
    n = n or int(rng.integers(1, 6))
    m = m or int(rng.choice(orders))
    r = r or int(rng.integers(1, 9))
    return RankOneSum(m, n, rng.normal(size=r), rng.normal(size=(r, n)))


def outer_power_sum(T):
    """Full array sum_k w_k u_k^{(x)m} built from explicit outer products."""
    out = np.zeros((T.dim,) * T.order)
    for w, u in zip(T.weights, T.vectors):
        t = np.array(1.0)
        for _ in range(T.order):
            t = np.multiply.outer(t, u)
        out += w * t
    return out


def full_contract(arr, x):
    for _ in range(arr.ndim):
        arr = arr @ x
    return float(arr)


@pytest.fixture
def rng():
    return np.random.default_rng(20261018)


_ACCEPTANCE = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        _ACCEPTANCE.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")
