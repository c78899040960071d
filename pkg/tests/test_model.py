import numpy as np
import pytest

from sobasip.model import Bounds, EvalCounters, OracleError, evaluate, is_strictly_interior, repair_start

from conftest import make_problem

INF = np.inf


@pytest.mark.parametrize(
    "x, lo, up, expected",
    [
        ([0.5], [0.0], [1.0], True),
        ([0.0], [0.0], [1.0], False),
        ([1.0], [0.0], [1.0], False),
        ([0.5], [-INF], [INF], True),
        ([-1e300], [-INF], [0.0], True),
    ],
)
def test_is_strictly_interior(x, lo, up, expected):
    assert is_strictly_interior(np.array(x), Bounds(lo, up)) is expected


def test_is_strictly_interior_dimension_mismatch():
    with pytest.raises(ValueError):
        is_strictly_interior(np.zeros(2), Bounds([0.0], [1.0]))


def test_bounds_must_be_ordered():
    with pytest.raises(ValueError):
        Bounds([1.0], [1.0])
    with pytest.raises(ValueError):
        Bounds([0.0, 2.0], [1.0, 1.0])
    Bounds([-INF], [INF])


def test_evaluate_quadratic_and_counters():
    p = make_problem(lambda x: float(x @ x), lambda x: 2 * x, lambda x: 2 * np.eye(1), [-10.0], [10.0], [3.0])
    c = EvalCounters()
    x = np.array([3.0])
    assert evaluate(p, x, "value", c) == 9.0
    np.testing.assert_array_equal(evaluate(p, x, "gradient", c), [6.0])
    assert (c.n_f, c.n_g, c.n_h) == (1, 1, 0)
    np.testing.assert_array_equal(evaluate(p, x, "hessian", c), [[2.0]])
    assert (c.n_f, c.n_g, c.n_h) == (1, 1, 1)


def test_evaluate_nan_raises_with_coordinate():
    p = make_problem(lambda x: float("nan"), lambda x: np.array([0.0, np.nan]), lambda x: np.eye(2),
                     [-1.0, -1.0], [1.0, 1.0], [0.0, 0.0])
    with pytest.raises(OracleError):
        evaluate(p, p.start, "value")
    with pytest.raises(OracleError) as info:
        evaluate(p, p.start, "gradient")
    assert info.value.index == 1


def test_evaluate_symmetrizes_hessian():
    p = make_problem(lambda x: 0.0, lambda x: np.zeros(2), lambda x: np.array([[1.0, 2.0], [0.0, 1.0]]),
                     [-1.0, -1.0], [1.0, 1.0], [0.0, 0.0])
    H = evaluate(p, p.start, "hessian")
    np.testing.assert_array_equal(H, H.T)
    assert H[0, 1] == 1.0


def test_counters_match_dispatches():
    calls = {"f": 0, "g": 0, "h": 0}

    def f(x):
        calls["f"] += 1
        return float(x[0])

    def g(x):
        calls["g"] += 1
        return np.ones(1)

    def h(x):
        calls["h"] += 1
        return np.zeros((1, 1))

    p = make_problem(f, g, h, [0.0], [1.0], [0.5])
    c = EvalCounters()
    rng = np.random.default_rng(3)
    for what in rng.choice(["value", "gradient", "hessian"], size=40):
        evaluate(p, np.array([0.5]), str(what), c)
    assert (c.n_f, c.n_g, c.n_h) == (calls["f"], calls["g"], calls["h"])


def test_start_must_be_interior():
    with pytest.raises(ValueError):
        make_problem(lambda x: 0.0, lambda x: x, lambda x: np.eye(1), [0.0], [1.0], [0.0])


def test_repair_start():
    b = Bounds([0.0, 0.1, -INF], [100.0, 0.15, 5.0])
    x = repair_start(np.array([0.0, 0.15, 5.0]), b)
    np.testing.assert_allclose(x, [0.01, 0.15 - 1e-2 * 0.05, 5.0 - 1e-2])
    assert is_strictly_interior(x, b)
