import numpy as np
import pytest

from sobasip.model import Bounds, BoxProblem


def make_problem(fun, grad, hess, lower, upper, start, name="test"):
    return BoxProblem(name=name, bounds=Bounds(lower, upper), start=np.asarray(start, dtype=float),
                      fun=fun, grad=grad, hess=hess)


@pytest.fixture
def square():
    """f(x) = x^2 in one dimension on [-2, 2], started at 1."""
    return make_problem(lambda x: float(x[0] ** 2), lambda x: 2 * x, lambda x: np.array([[2.0]]),
                        [-2.0], [2.0], [1.0], name="square")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import LINES
    except ImportError:
        return
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
