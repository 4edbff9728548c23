import numpy as np
import pytest

from rlpagerank import graph, kernels


@pytest.fixture
def two_cycle():
    return graph.build_from_edges(2, [(0, 1), (1, 0)])


@pytest.fixture
def three_node():
    # p(0,.) = [0, 1/2, 1/2], p(1,.) = [0, 0, 1], p(2,.) = [1, 0, 0]
    return graph.build_from_edges(3, [(0, 1), (0, 2), (1, 2), (2, 0)])


@pytest.fixture
def web50():
    return graph.generate(graph.GraphSpec(50, "power-law-out-degree", exponent=2.1,
                                          target_skew=1.0, seed=4))


def random_model(n, seed, weighted=False):
    rng = np.random.default_rng(seed)
    edges = set()
    for i in range(n):
        for j in rng.choice(n, size=rng.integers(1, min(n, 6) + 1), replace=False):
            edges.add((i, int(j)))
    edges = sorted(edges)
    weights = rng.uniform(0.1, 3.0, size=len(edges)) if weighted else None
    return graph.build_from_edges(n, edges, weights)


BACKENDS = [kernels.python_backend] + ([kernels.compiled_backend] if kernels.compiled_backend else [])


# one summary line per acceptance criterion, printed after the run
_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or not (rep.when == "call" or rep.failed):
        return
    number, title = mark.args
    detail = dict(item.user_properties).get("detail", "")
    status = "PASS" if rep.passed else "FAIL"
    _CRITERIA[number] = f"criterion {number:>2}  {status}  {title}" + (f"  [{detail}]" if detail else "")


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[k])
