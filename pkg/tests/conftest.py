import pytest

from ddequiv.circuit import Circuit, Gate
from ddequiv.dd import new_package
from ddequiv.kernel import available_backends

BACKENDS = available_backends()


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def pkg(backend):
    return new_package(backend)


def toffoli_circuit():
    return Circuit(3, (
        Gate("h", (1,)),
        Gate("x", (2,), (1,)),
        Gate("x", (0,), (2, 1)),
        Gate("x", (1,), (2,)),
    ), "g")


def clifford_t_circuit():
    layout = [("h", 1), ("x", 2, 1), ("h", 0), ("x", 0, 1), ("tdg", 0), ("x", 0, 2),
            ("t", 0), ("x", 0, 1), ("tdg", 0), ("t", 1), ("x", 0, 2), ("x", 1, 2),
            ("t", 0), ("h", 0), ("tdg", 1), ("t", 2)]
    return Circuit(3, tuple(Gate(k, (t,), c) for k, t, *c in layout), "gprime")


@pytest.fixture
def g():
    return toffoli_circuit()


@pytest.fixture
def gp():
    return clifford_t_circuit()


@pytest.fixture
def gt():
    c = clifford_t_circuit()
    return c.with_gates(c.gates[:15], "gtilde")


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
