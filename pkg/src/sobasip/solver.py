"""Second-order affine-scaling interior-point driver.

Each iteration builds the scaled model at ``x``, takes the leftmost
eigenvector ``[s; t]`` of the bordered matrix and picks a scaled direction
from the size of ``|t|``:

* ``|t| > 1/sqrt(1 + big_delta**2)``: small step ``s/t`` taken in full,
* ``|t| >= nu``: ``s/t`` with backtracking,
* otherwise ``sign(-g_bar^T s) * s`` with backtracking.

Backtracking starts from ``tau * min(1, alpha_max)`` and accepts the first
``alpha`` with ``f(x + alpha d) - f(x) <= -(gamma/6) alpha^3 ||d_bar||^3``.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .model import BoxProblem, EvalCounters, evaluate, is_strictly_interior
from .ohm import TOL_EIG, assemble_f, leftmost_eigenpair, smallest_eigenvalue
from .scaling import build_scaled_model

_log = logging.getLogger(__name__)

TERMINAL = "terminal_small_value"
RATIO = "ratio_direction"
TRUNCATED = "truncated_direction"

SOSP_TERMINAL = "sosp_terminal"
SOSP_CHECK = "sosp_check"
MAX_ITER = "max_iter"
LINE_SEARCH_FAIL = "line_search_fail"
SOSP_REASONS = (SOSP_TERMINAL, SOSP_CHECK)


@dataclass(frozen=True)
class SolverParams:
    eps: float = 1e-6
    delta: float = 1e-6
    big_delta: float = 0.1
    nu: float = 0.01
    beta: float = 0.5
    gamma: float = 0.1
    tau: float = 0.995
    max_iter: int = 500
    max_backtracks: int = 60
    local_phase_enabled: bool = False
    local_trigger: float = 1e-3
    tol_eig: float = TOL_EIG
    eig_method: str = "auto"

    def __post_init__(self):
        checks = [
            (self.eps > 0, "eps must be positive"),
            (self.delta >= 0, "delta must be nonnegative"),
            (self.big_delta > 0, "big_delta must be positive"),
            (0 < self.nu < 0.5, "nu must lie in (0, 1/2)"),
            (0 < self.beta < 1, "beta must lie in (0, 1)"),
            (self.gamma > 0, "gamma must be positive"),
            (0 < self.tau < 1, "tau must lie in (0, 1)"),
            (self.max_iter >= 1, "max_iter must be positive"),
            (self.max_backtracks >= 1, "max_backtracks must be positive"),
            (self.local_trigger > 0, "local_trigger must be positive"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValueError(msg)

    @property
    def terminal_threshold(self):
        return 1.0 / math.sqrt(1.0 + self.big_delta**2)

    @classmethod
    def theory(cls, eps=1e-6, **kw):
        """Preset with ``delta = big_delta = sqrt(eps)``."""
        r = math.sqrt(eps)
        return cls(eps=eps, delta=r, big_delta=r, **kw)


@dataclass
class StepOutcome:
    case: str
    d_bar: np.ndarray
    d: np.ndarray
    alpha_max: float = math.inf
    alpha0: float = 1.0
    alpha: float = 1.0
    backtracks: int = 0

    @property
    def d_bar_norm(self):
        return float(np.linalg.norm(self.d_bar))


@dataclass
class IterRecord:
    """One row of the iterate trace; the step fields describe the move from ``x``."""

    k: int
    x: np.ndarray
    f: float
    gbar_norm: float
    lambda1: float
    delta: float = float("nan")
    theta: float = float("nan")
    t: float = float("nan")
    s: np.ndarray | None = None
    case: str | None = None
    d_bar_norm: float = float("nan")
    d: np.ndarray | None = None
    alpha_max: float = float("nan")
    alpha0: float = float("nan")
    alpha: float = float("nan")
    backtracks: int = 0
    f_new: float = float("nan")


@dataclass
class SolveReport:
    problem: str
    n: int
    x: np.ndarray
    f: float
    gbar_norm: float
    lambda1: float
    termination: str
    n_it: int
    counters: EvalCounters
    params: SolverParams
    wall_time: float
    iterates: list = field(default_factory=list)
    message: str = ""

    @property
    def sosp(self):
        return self.termination in SOSP_REASONS

    def summary(self):
        return {
            "problem": self.problem,
            "n": self.n,
            "n_it": self.n_it,
            "n_f": self.counters.n_f,
            "n_g": self.counters.n_g,
            "gbar_norm": self.gbar_norm,
            "lambda1_bbar": self.lambda1,
            "termination": self.termination,
            "cpu_s": self.wall_time,
        }


def select_direction(sol, model, params: SolverParams) -> StepOutcome:
    """Choose the scaled direction from the homogenized solution."""
    t = sol.t
    s = sol.s
    if abs(t) > params.terminal_threshold:
        case, d_bar = TERMINAL, s / t
    elif abs(t) >= params.nu:
        if t == 0.0:
            raise RuntimeError("ratio direction requested with t == 0")
        case, d_bar = RATIO, s / t
    else:
        # sign(0) taken as +1 so that a direction orthogonal to g_bar survives
        sign = -1.0 if model.g_bar @ s > 0 else 1.0
        case, d_bar = TRUNCATED, sign * s
    return StepOutcome(case=case, d_bar=d_bar, d=model.d_inv * d_bar)


def alpha_max(x, d, bounds) -> float:
    """Exact step length along ``d`` to the nearest bound (``inf`` if none)."""
    x = np.asarray(x, dtype=float)
    d = np.asarray(d, dtype=float)
    best = math.inf
    with np.errstate(divide="ignore", invalid="ignore"):
        pos = d > 0
        neg = d < 0
        if pos.any():
            r = (bounds.upper[pos] - x[pos]) / d[pos]
            best = min(best, float(r.min()))
        if neg.any():
            r = (bounds.lower[neg] - x[neg]) / d[neg]
            best = min(best, float(r.min()))
    return best


def sufficient_decrease(df, alpha, d_bar_norm, gamma):
    return df <= -(gamma / 6.0) * alpha**3 * d_bar_norm**3


@dataclass
class LineSearchResult:
    ok: bool
    alpha: float
    backtracks: int
    x: np.ndarray
    f: float
    best_alpha: float = float("nan")
    best_df: float = float("nan")


def backtrack(problem: BoxProblem, x, f0, outcome: StepOutcome, params: SolverParams,
              counters: EvalCounters | None = None, unit_first=False) -> LineSearchResult:
    """Geometric backtracking on the cubic sufficient-decrease test.

    ``alpha0 = tau * min(1, alpha_max)``; with ``unit_first`` it is
    ``min(1, tau * alpha_max)`` instead.  Trial points that round onto a
    bound are rejected like a failed decrease test.
    """
    if outcome.d_bar_norm <= 0:
        raise ValueError("backtracking needs a nonzero direction")
    amax = alpha_max(x, outcome.d, problem.bounds)
    outcome.alpha_max = amax
    alpha = min(1.0, params.tau * amax) if unit_first else params.tau * min(1.0, amax)
    outcome.alpha0 = alpha
    best_alpha, best_df = alpha, math.inf
    for j in range(params.max_backtracks + 1):
        x_new = x + alpha * outcome.d
        if is_strictly_interior(x_new, problem.bounds):
            f_new = evaluate(problem, x_new, "value", counters)
            df = f_new - f0
            if df < best_df:
                best_alpha, best_df = alpha, df
            if sufficient_decrease(df, alpha, outcome.d_bar_norm, params.gamma):
                outcome.alpha, outcome.backtracks = alpha, j
                return LineSearchResult(True, alpha, j, x_new, f_new, best_alpha, best_df)
        if j < params.max_backtracks:
            alpha *= params.beta
    outcome.alpha, outcome.backtracks = best_alpha, params.max_backtracks
    return LineSearchResult(False, best_alpha, params.max_backtracks, x, f0, best_alpha, best_df)


def sosp_check(model, params: SolverParams, lambda1=None) -> bool:
    """Approximate second-order stationarity on the scaled model."""
    if lambda1 is None:
        lambda1 = smallest_eigenvalue(model.b_bar)
    return model.gbar_norm <= params.eps and lambda1 >= -math.sqrt(params.eps)


def solve(problem: BoxProblem, params: SolverParams | None = None, x0=None, keep_trace=True) -> SolveReport:
    """Run the method from ``problem.start`` (or ``x0``) until termination.

    The small-step branch moves to ``x + d`` (scaled back by
    ``tau * alpha_max`` if that would leave the interior) and stops when the
    new point is an approximate second-order stationary point; otherwise the
    iteration continues from there.

    Returns
    -------
    SolveReport
        ``termination`` is one of ``sosp_terminal``, ``sosp_check``,
        ``max_iter`` or ``line_search_fail``.
    """
    params = params or SolverParams()
    bounds = problem.bounds
    x = problem.start.copy() if x0 is None else np.asarray(x0, dtype=float).copy()
    if not is_strictly_interior(x, bounds):
        raise ValueError("initial point must be strictly interior")
    counters = EvalCounters()
    trace = []
    t_start = time.perf_counter()

    f = evaluate(problem, x, "value", counters)
    g = evaluate(problem, x, "gradient", counters)
    H = evaluate(problem, x, "hessian", counters)
    local = False
    termination = MAX_ITER
    message = ""
    k = 0
    while True:
        model = build_scaled_model(x, g, H, bounds)
        lam1 = smallest_eigenvalue(model.b_bar)
        rec = IterRecord(k=k, x=x.copy(), f=f, gbar_norm=model.gbar_norm, lambda1=lam1)
        if keep_trace:
            trace.append(rec)
        if sosp_check(model, params, lam1):
            termination = SOSP_CHECK
            break
        if k >= params.max_iter:
            termination = MAX_ITER
            break
        if params.local_phase_enabled and model.gbar_norm <= params.local_trigger:
            local = True
        delta = 0.0 if local else params.delta
        sol = leftmost_eigenpair(assemble_f(model.b_bar, model.g_bar, delta), params.tol_eig, params.eig_method)
        outcome = select_direction(sol, model, params)
        rec.delta, rec.theta, rec.t, rec.s = delta, sol.theta, sol.t, sol.s.copy()
        rec.case, rec.d_bar_norm, rec.d = outcome.case, outcome.d_bar_norm, outcome.d.copy()

        if outcome.case == TERMINAL:
            amax = alpha_max(x, outcome.d, bounds)
            alpha = 1.0
            x_new = x + outcome.d
            if not is_strictly_interior(x_new, bounds):
                alpha = params.tau * amax
                x_new = x + alpha * outcome.d
            if not is_strictly_interior(x_new, bounds):
                termination, message = LINE_SEARCH_FAIL, "small step cannot stay interior"
                break
            f_new = evaluate(problem, x_new, "value", counters)
            rec.alpha_max, rec.alpha0, rec.alpha, rec.backtracks, rec.f_new = amax, alpha, alpha, 0, f_new
        else:
            ls = backtrack(problem, x, f, outcome, params, counters, unit_first=local)
            rec.alpha_max, rec.alpha0 = outcome.alpha_max, outcome.alpha0
            rec.alpha, rec.backtracks = outcome.alpha, outcome.backtracks
            if not ls.ok:
                termination = LINE_SEARCH_FAIL
                message = f"no sufficient decrease after {params.max_backtracks} backtracks (best df={ls.best_df:.3e})"
                _log.warning("%s: %s", problem.name, message)
                break
            x_new, f_new = ls.x, ls.f
            rec.f_new = f_new

        x, f = x_new, f_new
        g = evaluate(problem, x, "gradient", counters)
        H = evaluate(problem, x, "hessian", counters)
        k += 1
        if outcome.case == TERMINAL:
            model = build_scaled_model(x, g, H, bounds)
            lam1 = smallest_eigenvalue(model.b_bar)
            if sosp_check(model, params, lam1):
                if keep_trace:
                    trace.append(IterRecord(k=k, x=x.copy(), f=f, gbar_norm=model.gbar_norm, lambda1=lam1))
                termination = SOSP_TERMINAL
                break

    wall = time.perf_counter() - t_start
    last = IterRecord(k=k, x=x, f=f, gbar_norm=model.gbar_norm, lambda1=lam1)
    return SolveReport(
        problem=problem.name, n=problem.dim, x=x.copy(), f=f, gbar_norm=last.gbar_norm, lambda1=last.lambda1,
        termination=termination, n_it=k, counters=counters, params=params, wall_time=wall,
        iterates=trace, message=message,
    )


def with_params(params: SolverParams, **overrides) -> SolverParams:
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return replace(params, **overrides)
