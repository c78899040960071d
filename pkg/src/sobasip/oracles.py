"""Brute-force checks kept independent of the solver code paths.

Nothing here imports :mod:`sobasip.solver`, :mod:`sobasip.ohm` or
:mod:`sobasip.scaling`; scaled quantities are recomputed from scratch.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .model import BoxProblem


@dataclass(frozen=True)
class FdConfig:
    step: float = 1e-6
    scheme: str = "central"
    rel_tol: float = 1e-4

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("finite-difference step must be positive")
        if self.scheme != "central":
            raise ValueError("only central differences are supported")


GRAD_FD = FdConfig(1e-6, "central", 1e-4)
HESS_FD = FdConfig(1e-4, "central", 1e-3)


def _steps(x, problem, h):
    """Per-coordinate steps, shrunk so that ``x +- h e_i`` stays interior."""
    room = np.minimum(x - problem.bounds.lower, problem.bounds.upper - x)
    return np.minimum(h, 0.5 * room)


def fd_gradient(problem: BoxProblem, x, cfg: FdConfig = GRAD_FD):
    x = np.asarray(x, dtype=float)
    hs = _steps(x, problem, cfg.step)
    g = np.empty(x.size)
    for i, h in enumerate(hs):
        e = np.zeros(x.size)
        e[i] = h
        g[i] = (problem.fun(x + e) - problem.fun(x - e)) / (2 * h)
    return g


def fd_hessian(problem: BoxProblem, x, cfg: FdConfig = HESS_FD):
    """Central differences of the analytic gradient, symmetrized."""
    x = np.asarray(x, dtype=float)
    hs = _steps(x, problem, cfg.step)
    H = np.empty((x.size, x.size))
    for i, h in enumerate(hs):
        e = np.zeros(x.size)
        e[i] = h
        H[:, i] = (np.asarray(problem.grad(x + e)) - np.asarray(problem.grad(x - e))) / (2 * h)
    return 0.5 * (H + H.T)


def rel_error(approx, exact):
    approx, exact = np.asarray(approx, dtype=float), np.asarray(exact, dtype=float)
    return float(np.max(np.abs(approx - exact)) / max(1.0, float(np.max(np.abs(exact)))))


def random_interior_points(problem: BoxProblem, count, rng):
    """Uniform points in the box (shrunk 5%); infinite sides use a window of 2 around the start."""
    lo, up = problem.bounds.lower, problem.bounds.upper
    a = np.where(np.isfinite(lo), lo, np.minimum(problem.start, up) - 2.0)
    b = np.where(np.isfinite(up), up, np.maximum(problem.start, lo) + 2.0)
    w = b - a
    a, b = a + 0.05 * w, b - 0.05 * w
    return a + (b - a) * rng.random((count, problem.dim))


@dataclass(frozen=True)
class DerivativeCheck:
    problem: str
    worst_grad: float
    worst_hess: float
    grad_ok: bool
    hess_ok: bool

    @property
    def ok(self):
        return self.grad_ok and self.hess_ok


def check_derivatives(problem: BoxProblem, points=20, seed=0, grad_cfg=GRAD_FD, hess_cfg=HESS_FD):
    rng = np.random.default_rng(seed)
    wg = wh = 0.0
    pts = list(random_interior_points(problem, points, rng)) + [problem.start]
    for x in pts:
        wg = max(wg, rel_error(fd_gradient(problem, x, grad_cfg), problem.grad(x)))
        wh = max(wh, rel_error(fd_hessian(problem, x, hess_cfg), problem.hess(x)))
    return DerivativeCheck(problem.name, wg, wh, wg <= grad_cfg.rel_tol, wh <= hess_cfg.rel_tol)


def dense_spectrum(M):
    """Ascending eigenvalues and orthonormal eigenvectors (columns)."""
    M = np.asarray(M, dtype=float)
    w, Q = np.linalg.eigh(0.5 * (M + M.T))
    return w, Q


def bordered(b_bar, g_bar, delta):
    n = len(g_bar)
    F = np.zeros((n + 1, n + 1))
    F[:n, :n] = b_bar
    F[:n, n] = F[n, :n] = g_bar
    F[n, n] = -delta
    return F


def random_bordered_instances(count, seed=0, n_range=(2, 30), deltas=(0.0, 1e-6, 1e-2)):
    """Random symmetric ``B`` (scale varied), nonzero ``g`` and ``delta`` triples."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        A = rng.standard_normal((n, n)) * 10.0 ** rng.uniform(-2, 2)
        B = 0.5 * (A + A.T)
        g = rng.standard_normal(n) * 10.0 ** rng.uniform(-3, 1)
        out.append((B, g, float(deltas[k % len(deltas)])))
    return out


@dataclass(frozen=True)
class BorderBoundCheck:
    lam_f: float
    lam2_f: float
    lam_b: float
    delta: float

    @property
    def below_minus_delta(self):
        return self.lam_f < -self.delta

    @property
    def below_lam_b(self):
        return self.lam_f <= self.lam_b

    @property
    def interlaced(self):
        scale = 1e-12 * (1.0 + abs(self.lam_b))
        return self.lam_f <= self.lam_b + scale and self.lam_b <= self.lam2_f + scale


def border_bound_check(b_bar, g_bar, delta):
    wf, _ = dense_spectrum(bordered(b_bar, g_bar, delta))
    wb, _ = dense_spectrum(b_bar)
    return BorderBoundCheck(float(wf[0]), float(wf[1]), float(wb[0]), float(delta))


def _grid_axes(problem, resolution, window=10.0):
    lo, up = problem.bounds.lower, problem.bounds.upper
    a = np.where(np.isfinite(lo), lo, problem.start - window)
    b = np.where(np.isfinite(up), up, problem.start + window)
    k = np.arange(1, resolution + 1)
    return [a[i] + (b[i] - a[i]) * k / (resolution + 1) for i in range(problem.dim)], (b - a) / (resolution + 1)


def grid_minimize(problem: BoxProblem, resolution=100, refine_sweeps=20):
    """Best point of a uniform interior grid, then projected coordinate descent.

    The descent probes ``+-h`` per coordinate with ``h`` starting at half the
    grid spacing and halving each sweep; probes must stay strictly interior.
    """
    if problem.dim > 3:
        raise ValueError("grid_minimize supports n <= 3")
    axes, spacing = _grid_axes(problem, resolution)
    best_x, best_f = None, math.inf
    for pt in itertools.product(*axes):
        x = np.array(pt)
        fx = problem.fun(x)
        if fx < best_f:
            best_x, best_f = x, fx
    lo, up = problem.bounds.lower, problem.bounds.upper
    h = 0.5 * spacing
    x = best_x.copy()
    for _ in range(refine_sweeps):
        for i in range(problem.dim):
            for sgn in (-1.0, 1.0):
                y = x.copy()
                y[i] += sgn * h[i]
                if lo[i] < y[i] < up[i]:
                    fy = problem.fun(y)
                    if fy < best_f:
                        x, best_f = y, fy
        h = 0.5 * h
    return x, float(best_f)


def newton_polish(problem: BoxProblem, x, iters=50, tol=1e-14):
    """Plain Newton on the gradient (interior stationary points only)."""
    x = np.asarray(x, dtype=float).copy()
    for _ in range(iters):
        g = np.asarray(problem.grad(x))
        if np.linalg.norm(g) <= tol:
            break
        x = x - np.linalg.solve(problem.hess(x), g)
    return x


def _scaled(problem, x):
    """Recompute the scaled gradient, scaled Hessian and scaling diagonal at ``x``."""
    g = np.asarray(problem.grad(x), dtype=float)
    H = np.asarray(problem.hess(x), dtype=float)
    H = 0.5 * (H + H.T)
    lo, up = problem.bounds.lower, problem.bounds.upper
    absv = np.empty(x.size)
    c = np.zeros(x.size)
    for i in range(x.size):
        if g[i] < 0:
            absv[i] = up[i] - x[i] if math.isfinite(up[i]) else 1.0
            c[i] = -g[i] if math.isfinite(up[i]) else 0.0
        else:
            absv[i] = x[i] - lo[i] if math.isfinite(lo[i]) else 1.0
            c[i] = g[i] if math.isfinite(lo[i]) else 0.0
    dinv = np.sqrt(np.maximum(absv, 1e-16))
    B = np.outer(dinv, dinv) * H + np.diag(c)
    return dinv * g, B, dinv


@dataclass(frozen=True)
class Finding:
    k: int
    check: str
    detail: str

    def __str__(self):
        return f"iter {self.k}: {self.check}: {self.detail}"


def check_lemma_conclusions(report, problem: BoxProblem, tol=1e-8):
    """Re-verify a solve trace; an empty list means every check passed.

    Per iteration: strict interiority, ``theta > delta`` when the scaled
    gradient is nonzero, the stationarity / coupling residuals, the sign
    identity ``sign(-g^T s) t = |t|``, the cubic decrease at the accepted
    step and consistency of the next iterate with ``x + alpha d``.
    """
    findings = []
    params = report.params
    lo, up = problem.bounds.lower, problem.bounds.upper
    rows = report.iterates
    for idx, rec in enumerate(rows):
        x = rec.x
        if not (np.all(lo < x) and np.all(x < up)):
            findings.append(Finding(rec.k, "interior", "iterate touches or leaves the box"))
            continue
        if rec.case is None:
            continue
        gb, B, dinv = _scaled(problem, x)
        s, t, theta, delta = rec.s, rec.t, rec.theta, rec.delta
        # strict in exact arithmetic; allow eigensolver round-off on the scale of F
        slack = 8 * np.finfo(float).eps * (1.0 + np.abs(B).sum(axis=1).max() + np.abs(gb).sum())
        if np.any(gb) and not theta > delta - slack:
            findings.append(Finding(rec.k, "theta>delta", f"theta={theta:.3e} delta={delta:.3e}"))
        stat = np.linalg.norm(B @ s + theta * s + t * gb)
        coup = abs(gb @ s - t * (delta - theta))
        scale = tol * (1.0 + abs(theta)) + 1e-13 * (1.0 + np.abs(B).sum(axis=1).max())
        if stat > scale:
            findings.append(Finding(rec.k, "stationarity", f"residual {stat:.3e}"))
        if coup > scale:
            findings.append(Finding(rec.k, "coupling", f"residual {coup:.3e}"))
        if abs(t) > 1e-10 and np.sign(-(gb @ s)) * t != abs(t):
            findings.append(Finding(rec.k, "sign identity", f"g^T s={gb @ s:.3e}, t={t:.3e}"))
        d = rec.d
        dbar_norm = float(np.linalg.norm(d / dinv))
        x_new = x + rec.alpha * d
        if not (np.all(lo < x_new) and np.all(x_new < up)):
            findings.append(Finding(rec.k, "interior", f"x + alpha d leaves the box (alpha={rec.alpha:.3e})"))
            continue
        if rec.case != "terminal_small_value":
            df = problem.fun(x_new) - rec.f
            need = -(params.gamma / 6.0) * rec.alpha**3 * dbar_norm**3
            if df > need + 1e-12 * (1.0 + abs(rec.f)):
                findings.append(Finding(rec.k, "sufficient decrease", f"df={df:.3e} > {need:.3e}"))
        if idx + 1 < len(rows):
            nxt = rows[idx + 1].x
            if np.linalg.norm(nxt - x_new) > 1e-12 * (1.0 + np.linalg.norm(x_new)):
                findings.append(Finding(rec.k, "step consistency", "next iterate differs from x + alpha d"))
    return findings
