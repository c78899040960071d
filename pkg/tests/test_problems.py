import numpy as np
import pytest

from sobasip import oracles, problems
from sobasip.model import is_strictly_interior
from sobasip.ohm import smallest_eigenvalue
from sobasip.scaling import build_scaled_model, kkt_residual


def test_list_is_stable_and_contains_core_names():
    names = problems.list_problems()
    assert names == problems.list_problems()
    for nm in ("camel6", "hs38", "hs05", "hs25", "hs3mod", "hatflda", "hatfldc", "simbqp", "nonscomp", "bdexp",
               "mccormck", "synthetic_qp1", "synthetic_linear", "synthetic_saddle"):
        assert nm in names
    assert len(names) == len(set(names))


def test_get_camel6():
    p = problems.get("camel6")
    assert p.dim == 2
    np.testing.assert_array_equal(p.bounds.lower, [-3.0, -1.5])
    np.testing.assert_array_equal(p.bounds.upper, [3.0, 1.5])
    for sgn in (1, -1):
        x = np.array([sgn * 0.0898420137, -sgn * 0.7126564033])
        assert p.fun(x) == pytest.approx(-1.031628, abs=1e-6)
        assert np.linalg.norm(p.grad(x)) <= 1e-7


def test_camel6_minimum_by_grid():
    p = problems.get("camel6")
    x, f = oracles.grid_minimize(p, resolution=200)
    assert f == pytest.approx(-1.031628453489877, abs=1e-6)
    assert abs(abs(x[0]) - 0.089842) <= 1e-3 and abs(abs(x[1]) - 0.712656) <= 1e-3


def test_get_synthetic_qp1():
    p = problems.get("synthetic_qp1")
    c = p.reference[0]
    assert is_strictly_interior(c, p.bounds)
    assert p.fun(c) == 0.0


def test_get_scalable():
    p = problems.get("bdexp", n=100)
    assert p.dim == 100
    assert problems.get("nonscomp", 10).dim == 10
    with pytest.raises(ValueError):
        problems.get("camel6", 3)
    with pytest.raises(ValueError):
        problems.get("bdexp", 2)
    with pytest.raises(KeyError):
        problems.get("nosuch")


def test_hs25_start_repaired():
    p = problems.get("hs25")
    np.testing.assert_array_equal(p.meta["raw_start"], [100.0, 12.5, 3.0])
    assert is_strictly_interior(p.start, p.bounds)
    assert p.start[0] == pytest.approx(99.99)


@pytest.mark.parametrize("name", problems.list_problems())
def test_start_interior(name):
    p = problems.get(name)
    assert is_strictly_interior(p.start, p.bounds)


@pytest.mark.parametrize("name", problems.list_problems())
def test_fd_derivatives(name):
    chk = oracles.check_derivatives(problems.get(name), points=20, seed=0)
    assert chk.grad_ok, chk
    assert chk.hess_ok, chk


def _nudged(p, x):
    lo, up = p.bounds.lower, p.bounds.upper
    span = np.where(np.isfinite(up - lo), np.minimum(1.0, up - lo), 1.0)
    x = np.where(x <= lo, lo + 1e-9 * span, x)
    return np.where(x >= up, up - 1e-9 * span, x)


@pytest.mark.parametrize("name", [nm for nm in problems.list_problems() if problems.get(nm).reference is not None])
def test_reference_solutions_are_second_order_points(name):
    p = problems.get(name)
    x = _nudged(p, np.asarray(p.reference[0], dtype=float))
    g = p.grad(x)
    assert kkt_residual(x, g, p.bounds) <= 1e-5
    m = build_scaled_model(x, g, p.hess(x), p.bounds)
    assert smallest_eigenvalue(m.b_bar) >= -1e-6
    if p.reference[1] is not None:
        assert p.fun(x) == pytest.approx(p.reference[1], abs=1e-6)


def test_problem_file(tmp_path):
    f = tmp_path / "box.txt"
    f.write_text("# shrunken camel\nname small_camel\nobjective camel6\nn 2\nl -1 -1\nu 1 inf\nx0 0.5\n")
    p = problems.load_problem_file(f)
    assert p.name == "small_camel"
    np.testing.assert_array_equal(p.bounds.upper, [1.0, np.inf])
    np.testing.assert_array_equal(p.start, [0.5, 0.5])
    assert p.fun(p.start) == problems.get("camel6").fun(p.start)


def test_problem_file_errors(tmp_path):
    f = tmp_path / "bad.txt"
    f.write_text("name x\n")
    with pytest.raises(ValueError):
        problems.load_problem_file(f)
    f.write_text("objective camel6\nl 0 0 0\n")
    with pytest.raises(ValueError):
        problems.load_problem_file(f)
