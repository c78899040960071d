import math
import warnings

import numpy as np
import pytest

from sobasip import problems
from sobasip.model import Bounds, EvalCounters
from sobasip.ohm import OhmSolution
from sobasip.scaling import build_scaled_model
from sobasip.solver import (LINE_SEARCH_FAIL, RATIO, SOSP_REASONS, TERMINAL, TRUNCATED, SolverParams, StepOutcome,
                            alpha_max, backtrack, select_direction, solve, sosp_check, sufficient_decrease)

from conftest import make_problem

INF = np.inf


def _sol(s, t):
    s = np.asarray(s, dtype=float)
    return OhmSolution(s, float(t), 1.0, 1e-6, 0.0, 0.0, 0.0)


def _model(g_bar):
    n = len(g_bar)
    x = np.full(n, 0.5)
    return build_scaled_model(x, np.asarray(g_bar, dtype=float) / np.sqrt(0.5), np.eye(n),
                              Bounds(np.zeros(n), np.ones(n)))


def test_params_defaults_and_validation():
    p = SolverParams()
    assert (p.eps, p.delta, p.big_delta, p.nu, p.beta, p.gamma, p.tau) == (1e-6, 1e-6, 0.1, 0.01, 0.5, 0.1, 0.995)
    assert (p.max_iter, p.max_backtracks, p.local_phase_enabled) == (500, 60, False)
    assert p.terminal_threshold == pytest.approx(0.995037, abs=1e-6)
    with pytest.raises(ValueError):
        SolverParams(nu=0.6)
    with pytest.raises(ValueError):
        SolverParams(tau=1.0)
    th = SolverParams.theory(1e-4)
    assert th.delta == th.big_delta == pytest.approx(1e-2)


def test_select_direction_terminal():
    t = 0.999
    s = np.array([np.sqrt(1 - t * t), 0.0])
    out = select_direction(_sol(s, t), _model([1.0, 0.0]), SolverParams())
    assert out.case == TERMINAL
    np.testing.assert_allclose(out.d_bar, s / t)
    assert out.d_bar_norm <= 0.1


def test_select_direction_ratio():
    t = 0.5
    s = np.array([0.0, np.sqrt(1 - t * t)])
    out = select_direction(_sol(s, t), _model([1.0, 0.0]), SolverParams())
    assert out.case == RATIO
    assert out.d_bar_norm == pytest.approx(np.sqrt(3), abs=1e-12)
    assert out.d_bar_norm > SolverParams().big_delta


@pytest.mark.parametrize("gs, sign", [(-0.3, 1.0), (0.3, -1.0), (0.0, 1.0)])
def test_select_direction_truncated_sign(gs, sign):
    s = np.array([gs, np.sqrt(1 - gs * gs - 1e-6)])
    out = select_direction(_sol(s, 0.001), _model([1.0, 0.0]), SolverParams())
    assert out.case == TRUNCATED
    np.testing.assert_allclose(out.d_bar, sign * s)


def test_select_direction_scales_back():
    m = _model([1.0, 0.0])
    out = select_direction(_sol([-0.6, 0.0], 0.8), m, SolverParams())
    np.testing.assert_allclose(out.d, m.d_inv * out.d_bar)


@pytest.mark.parametrize(
    "x, d, lo, up, expected",
    [
        ([0.5], [1.0], [0.0], [1.0], 0.5),
        ([0.5, 0.5], [1.0, -1.0], [0.0, 0.0], [1.0, 1.0], 0.5),
        ([0.5, 0.5], [1.0, -1.0], [-INF, -INF], [INF, INF], INF),
        ([0.5], [0.0], [0.0], [1.0], INF),
        ([0.2], [-0.1], [0.0], [1.0], 2.0),
    ],
)
def test_alpha_max(x, d, lo, up, expected):
    assert alpha_max(np.array(x), np.array(d), Bounds(lo, up)) == pytest.approx(expected)


def test_backtrack_accepts_first_trial(square):
    out = StepOutcome(RATIO, np.array([-1.0]), np.array([-1.0]))
    c = EvalCounters()
    ls = backtrack(square, np.array([1.0]), 1.0, out, SolverParams(), c)
    assert out.alpha_max == pytest.approx(3.0)
    assert ls.ok and ls.backtracks == 0
    assert ls.alpha == pytest.approx(0.995)
    assert ls.f - 1.0 == pytest.approx(0.005**2 - 1.0)
    assert ls.f - 1.0 <= -(0.1 / 6) * 0.995**3
    assert c.n_f == 1


def test_sufficient_decrease_boundary_is_accepted():
    need = -(0.1 / 6.0) * 0.5**3 * 2.0**3
    assert sufficient_decrease(need, 0.5, 2.0, 0.1)
    assert not sufficient_decrease(np.nextafter(need, 0.0), 0.5, 2.0, 0.1)


def test_backtrack_cap_reports_failure():
    p = make_problem(lambda x: float(x[0]), lambda x: np.ones(1), lambda x: np.zeros((1, 1)), [-5.0], [5.0], [0.0])
    out = StepOutcome(RATIO, np.array([1.0]), np.array([1.0]))
    params = SolverParams(max_backtracks=10)
    ls = backtrack(p, np.array([0.0]), 0.0, out, params)
    assert not ls.ok
    assert ls.backtracks == 10
    assert ls.best_df > 0


def test_solve_line_search_fail_termination():
    # analytic gradient has the wrong sign, so the model direction climbs the true objective
    p = make_problem(lambda x: float(x[0]), lambda x: -np.ones(1), lambda x: np.zeros((1, 1)), [0.0], [1.0], [0.5])
    r = solve(p, SolverParams(max_backtracks=8))
    assert r.termination == LINE_SEARCH_FAIL
    assert "backtracks" in r.message


def test_sosp_check_examples():
    params = SolverParams()
    m = build_scaled_model(np.array([0.5]), np.zeros(1), np.array([[1.0]]), Bounds([0.0], [1.0]))
    assert sosp_check(m, params)
    tiny = build_scaled_model(np.array([0.5]), np.array([1e-7 / np.sqrt(0.5)]), np.array([[20.0]]),
                              Bounds([0.0], [1.0]))
    assert tiny.gbar_norm == pytest.approx(1e-7)
    assert sosp_check(tiny, params, lambda1=22.232)
    assert not sosp_check(m, params, lambda1=-1.0)


def _quad1d(c):
    return make_problem(lambda x: float((x[0] - c) ** 2), lambda x: 2 * (x - c), lambda x: np.array([[2.0]]),
                        [0.0], [1.0], [0.9])


def test_solve_interior_quadratic():
    r = solve(_quad1d(0.3))
    assert r.sosp
    assert r.gbar_norm <= 1e-6
    assert abs(r.x[0] - 0.3) <= 1e-5
    assert r.n_it <= 15


def test_solve_linear_boundary_solution():
    p = make_problem(lambda x: float(x[0]), lambda x: np.ones(1), lambda x: np.zeros((1, 1)), [0.0], [1.0], [0.5])
    r = solve(p)
    xs = np.array([it.x[0] for it in r.iterates])
    assert np.all(xs > 0.0) and np.all(xs < 1.0)
    assert np.all(np.diff(xs) < 0)
    assert r.sosp
    assert r.x[0] <= 1e-10  # residual |v| g = x
    assert r.gbar_norm <= 1e-6


def test_solve_camel6():
    r = solve(problems.get("camel6"))
    assert r.termination in SOSP_REASONS
    assert r.gbar_norm <= 1e-6
    assert r.f == pytest.approx(-1.031628453489877, abs=1e-8)


def test_solve_escapes_saddle():
    p = problems.get("synthetic_saddle")
    r = solve(p)
    assert r.sosp
    assert r.lambda1 > 0
    assert abs(abs(r.x[1]) - 1.0) <= 1e-5
    assert r.f == pytest.approx(-0.25, abs=1e-9)


def test_solve_rejects_boundary_start():
    with pytest.raises(ValueError):
        solve(_quad1d(0.3), x0=np.array([1.0]))


def test_counts_are_consistent():
    r = solve(problems.get("hs38"))
    assert r.counters.n_g == r.counters.n_h == r.n_it + 1
    assert r.counters.n_f >= r.n_it + 1
    assert len(r.iterates) == r.n_it + 1


def test_local_phase_runs():
    r = solve(problems.get("camel6"), SolverParams(local_phase_enabled=True))
    assert r.sosp
    assert any(it.delta == 0.0 for it in r.iterates if it.case)


@pytest.mark.parametrize("name", ["camel6", "hs38", "hatflda", "hs05", "mccormck", "synthetic_qp1"])
def test_trace_invariants(name):
    p = problems.get(name)
    r = solve(p)
    lo, up = p.bounds.lower, p.bounds.upper
    params = r.params
    for it in r.iterates:
        assert np.all(lo < it.x) and np.all(it.x < up)
        if it.case is None:
            continue
        if it.case == TERMINAL:
            assert it.d_bar_norm == pytest.approx(np.linalg.norm(it.s) / abs(it.t), rel=1e-12)
            # sqrt(1 - t^2) cancels near t = 1, so only an absolute match is meaningful
            assert it.d_bar_norm == pytest.approx(math.sqrt(max(0.0, 1 - it.t**2)) / abs(it.t), abs=1e-7)
            assert it.d_bar_norm <= params.big_delta
        else:
            assert it.d_bar_norm > params.big_delta
            need = (params.gamma / 6) * it.alpha**3 * it.d_bar_norm**3 - 1e-12 * (1 + abs(it.f))
            assert it.f - it.f_new >= need
            assert it.f_new < it.f


@pytest.mark.parametrize("name", ["camel6", "hs38", "hatflda", "nonscomp"])
def test_backtrack_cap_consistency_soft(name):
    r = solve(problems.get(name))
    rows = [it for it in r.iterates]
    p = problems.get(name)
    L = 0.0
    for a, b in zip(rows, rows[1:]):
        step = np.linalg.norm(b.x - a.x)
        if step > 0:
            L = max(L, np.linalg.norm(p.hess(b.x) - p.hess(a.x)) / step)
    prm = r.params
    cap = math.ceil(math.log(3 * prm.delta * prm.nu / (L + prm.gamma)) / math.log(prm.beta))
    worst = max(it.backtracks for it in rows if it.case)
    if worst > cap:
        warnings.warn(f"{name}: observed {worst} backtracks above the estimated cap {cap}")
    assert worst <= prm.max_backtracks
