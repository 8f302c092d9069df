import numpy as np
import pytest

from interperc.core import LayerGraph


def path_graph(n):
    return LayerGraph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# --- acceptance report ------------------------------------------------------

ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = {}
    config.addinivalue_line("markers", "acceptance: full-size acceptance criteria (slow)")


@pytest.fixture
def record_criterion(request):
    """Store ``(passed, detail)`` for a numbered criterion and echo it."""
    def rec(num, passed, detail):
        request.config.stash[ACCEPTANCE][num] = (bool(passed), detail)
        print(f"criterion {num}: {'PASS' if passed else 'FAIL'}  {detail}")
    return rec


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    res = config.stash.get(ACCEPTANCE, {})
    if not res:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(res):
        ok, detail = res[num]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")
