"""Registry of bound-constrained test problems with analytic derivatives.

Formulas follow the usual Hock-Schittkowski / CUTEst statements of these
problems (start points and bounds included).  ``simbqp`` is a small
re-encoded bounded QP in the same spirit, and three synthetic problems with
known solutions round out the set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .model import Bounds, BoxProblem, is_strictly_interior, repair_start

INF = math.inf


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    family: str
    build: Callable[[int], tuple]
    default_n: int
    scalable: bool = False
    min_n: int = 1
    note: str = ""


@dataclass
class Objective:
    fun: Callable
    grad: Callable
    hess: Callable


def _sumsq(r, J, second=()):
    """Value, gradient and Hessian of ``sum(r**2)``.

    ``second`` holds ``(res_idx, var_idx, var_idx2, value)`` arrays for the
    nonzero second derivatives of the residuals.
    """
    f = float(r @ r)
    g = 2.0 * J.T @ r
    H = 2.0 * J.T @ J
    for ri, a, b, val in second:
        w = 2.0 * r[ri] * val
        np.add.at(H, (a, b), w)
        off = a != b
        np.add.at(H, (b[off], a[off]), w[off])
    return f, g, H


def _from_sumsq(model):
    return Objective(lambda x: model(x)[0], lambda x: model(x)[1], lambda x: model(x)[2])


# --- individual problems -------------------------------------------------

def _camel6(n):
    def fun(x):
        a, b = x
        return (4 - 2.1 * a**2 + a**4 / 3) * a**2 + a * b + (-4 + 4 * b**2) * b**2

    def grad(x):
        a, b = x
        return np.array([8 * a - 8.4 * a**3 + 2 * a**5 + b, a - 8 * b + 16 * b**3])

    def hess(x):
        a, b = x
        return np.array([[8 - 25.2 * a**2 + 10 * a**4, 1.0], [1.0, -8 + 48 * b**2]])

    ref = np.array([0.08984201368301331, -0.7126564032704135])
    return (Objective(fun, grad, hess), Bounds([-3.0, -1.5], [3.0, 1.5]), np.array([1.1, 1.1]),
            (ref, -1.031628453489877))


def _hs05(n):
    def fun(x):
        a, b = x
        return math.sin(a + b) + (a - b) ** 2 - 1.5 * a + 2.5 * b + 1

    def grad(x):
        a, b = x
        c = math.cos(a + b)
        return np.array([c + 2 * (a - b) - 1.5, c - 2 * (a - b) + 2.5])

    def hess(x):
        a, b = x
        s = math.sin(a + b)
        return np.array([[2 - s, -2 - s], [-2 - s, 2 - s]])

    ref = np.array([-math.pi / 3 + 0.5, -math.pi / 3 - 0.5])
    return (Objective(fun, grad, hess), Bounds([-1.5, -3.0], [4.0, 3.0]), np.zeros(2),
            (ref, -math.sqrt(3) / 2 - math.pi / 3))


_HS25_I = np.arange(1, 100, dtype=float)
_HS25_U = 25 + (-50 * np.log(0.01 * _HS25_I)) ** (2 / 3)


def _hs25_model(x):
    x1, x2, x3 = x
    w = _HS25_U - x2
    lw = np.log(w)
    p = w**x3
    e = np.exp(-p / x1)
    r = e - 0.01 * _HS25_I
    q1 = p / x1**2
    q2 = x3 * w ** (x3 - 1) / x1
    q3 = -p * lw / x1
    dq = np.stack([q1, q2, q3], axis=1)
    J = e[:, None] * dq
    # second derivatives of the exponent q = -p/x1
    q11 = -2 * p / x1**3
    q12 = -x3 * w ** (x3 - 1) / x1**2
    q13 = p * lw / x1**2
    q22 = -x3 * (x3 - 1) * w ** (x3 - 2) / x1
    q23 = w ** (x3 - 1) * (1 + x3 * lw) / x1
    q33 = -p * lw**2 / x1
    f = float(r @ r)
    g = 2 * J.T @ r
    H = 2 * J.T @ J
    Q = {(0, 0): q11, (0, 1): q12, (0, 2): q13, (1, 1): q22, (1, 2): q23, (2, 2): q33}
    for (a, b), qab in Q.items():
        val = 2 * np.sum(r * e * (qab + dq[:, a] * dq[:, b]))
        H[a, b] += val
        if a != b:
            H[b, a] += val
    return f, g, H


def _hs25(n):
    ref = np.array([50.0, 25.0, 1.5])
    return (_from_sumsq(_hs25_model), Bounds([0.1, 0.0, 0.0], [100.0, 25.6, 5.0]), np.array([100.0, 12.5, 3.0]),
            (ref, 0.0))


def _hs38(n):
    def fun(x):
        a, b, c, d = x
        return (100 * (b - a**2) ** 2 + (1 - a) ** 2 + 90 * (d - c**2) ** 2 + (1 - c) ** 2
                + 10.1 * ((b - 1) ** 2 + (d - 1) ** 2) + 19.8 * (b - 1) * (d - 1))

    def grad(x):
        a, b, c, d = x
        return np.array([
            -400 * a * (b - a**2) - 2 * (1 - a),
            200 * (b - a**2) + 20.2 * (b - 1) + 19.8 * (d - 1),
            -360 * c * (d - c**2) - 2 * (1 - c),
            180 * (d - c**2) + 20.2 * (d - 1) + 19.8 * (b - 1),
        ])

    def hess(x):
        a, b, c, d = x
        return np.array([
            [1200 * a**2 - 400 * b + 2, -400 * a, 0.0, 0.0],
            [-400 * a, 220.2, 0.0, 19.8],
            [0.0, 0.0, 1080 * c**2 - 360 * d + 2, -360 * c],
            [0.0, 19.8, -360 * c, 200.2],
        ])

    return (Objective(fun, grad, hess), Bounds(np.full(4, -10.0), np.full(4, 10.0)),
            np.array([-3.0, -1.0, -3.0, -1.0]), (np.ones(4), 0.0))


def _hs3mod(n):
    def fun(x):
        return x[1] + (x[1] - x[0]) ** 2

    def grad(x):
        r = x[1] - x[0]
        return np.array([-2 * r, 1 + 2 * r])

    def hess(x):
        return np.array([[2.0, -2.0], [-2.0, 2.0]])

    return (Objective(fun, grad, hess), Bounds([-INF, 0.0], [INF, INF]), np.array([10.0, 1.0]),
            (np.zeros(2), 0.0))


def _hatflda(n):
    def model(x):
        sq = np.sqrt(x[1:])
        r = np.concatenate([[x[0] - 1], x[:-1] - sq])
        J = np.zeros((n, n))
        J[0, 0] = 1.0
        idx = np.arange(1, n)
        J[idx, idx - 1] = 1.0
        J[idx, idx] = -0.5 / sq
        second = [(idx, idx, idx, 0.25 / (x[1:] * sq))]
        return _sumsq(r, J, second)

    return (_from_sumsq(model), Bounds(np.full(n, 1e-7), np.full(n, INF)), np.full(n, 0.1), (np.ones(n), 0.0))


def _hatfldc(n):
    def model(x):
        mid = np.arange(1, n - 1)
        r = np.concatenate([[x[0] - 1], x[mid + 1] - x[mid] ** 2, [x[-1] - 1]])
        J = np.zeros((n, n))
        J[0, 0] = 1.0
        J[mid, mid + 1] = 1.0
        J[mid, mid] = -2 * x[mid]
        J[n - 1, n - 1] = 1.0
        second = [(mid, mid, mid, np.full(mid.size, -2.0))]
        return _sumsq(r, J, second)

    lower = np.zeros(n)
    upper = np.full(n, 10.0)
    lower[-1], upper[-1] = -INF, INF
    return (_from_sumsq(model), Bounds(lower, upper), np.full(n, 0.9), (np.ones(n), 0.0))


def _nonscomp(n):
    def model(x):
        idx = np.arange(1, n)
        r = np.concatenate([[x[0] - 1], 2 * (x[idx] - x[idx - 1] ** 2)])
        J = np.zeros((n, n))
        J[0, 0] = 1.0
        J[idx, idx] = 2.0
        J[idx, idx - 1] = -4 * x[idx - 1]
        second = [(idx, idx - 1, idx - 1, np.full(idx.size, -4.0))]
        return _sumsq(r, J, second)

    return (_from_sumsq(model), Bounds(np.full(n, -100.0), np.full(n, 100.0)), np.full(n, 3.0), (np.ones(n), 0.0))


def _bdexp(n):
    i = np.arange(n - 2)

    def parts(x):
        a = x[i] + x[i + 1]
        c = x[i + 2]
        e = np.exp(-a * c)
        return a, c, e

    def fun(x):
        a, c, e = parts(x)
        return float(np.sum(a * e))

    def grad(x):
        a, c, e = parts(x)
        g = np.zeros(n)
        fa = e * (1 - a * c)
        np.add.at(g, i, fa)
        np.add.at(g, i + 1, fa)
        np.add.at(g, i + 2, -a**2 * e)
        return g

    def hess(x):
        a, c, e = parts(x)
        H = np.zeros((n, n))
        faa = c * e * (a * c - 2)
        fac = a * e * (a * c - 2)
        fcc = a**3 * e
        for p, q, val in ((i, i, faa), (i + 1, i + 1, faa), (i, i + 1, faa), (i + 1, i, faa),
                          (i, i + 2, fac), (i + 2, i, fac), (i + 1, i + 2, fac), (i + 2, i + 1, fac),
                          (i + 2, i + 2, fcc)):
            np.add.at(H, (p, q), val)
        return H

    ref = np.zeros(n)
    ref[-1] = 1.0
    return (Objective(fun, grad, hess), Bounds(np.zeros(n), np.full(n, INF)), np.ones(n), (ref, 0.0))


def _mccormck(n):
    i = np.arange(n - 1)

    def fun(x):
        a, b = x[i], x[i + 1]
        return float(np.sum(-1.5 * a + 2.5 * b + 1 + (a - b) ** 2 + np.sin(a + b)))

    def grad(x):
        a, b = x[i], x[i + 1]
        c = np.cos(a + b)
        g = np.zeros(n)
        np.add.at(g, i, -1.5 + 2 * (a - b) + c)
        np.add.at(g, i + 1, 2.5 - 2 * (a - b) + c)
        return g

    def hess(x):
        a, b = x[i], x[i + 1]
        s = np.sin(a + b)
        H = np.zeros((n, n))
        np.add.at(H, (i, i), 2 - s)
        np.add.at(H, (i + 1, i + 1), 2 - s)
        np.add.at(H, (i, i + 1), -2 - s)
        np.add.at(H, (i + 1, i), -2 - s)
        return H

    return (Objective(fun, grad, hess), Bounds(np.full(n, -1.5), np.full(n, 3.0)), np.ones(n), None)


def _simbqp(n):
    # (x1 - 1)^2 + x1 x2 + x2^2 + x2 on [-10, 10] x [0, 10]; solution (1, 0)
    def fun(x):
        return (x[0] - 1) ** 2 + x[0] * x[1] + x[1] ** 2 + x[1]

    def grad(x):
        return np.array([2 * (x[0] - 1) + x[1], x[0] + 2 * x[1] + 1])

    def hess(x):
        return np.array([[2.0, 1.0], [1.0, 2.0]])

    return (Objective(fun, grad, hess), Bounds([-10.0, 0.0], [10.0, 10.0]), np.array([5.0, 5.0]),
            (np.array([1.0, 0.0]), 0.0))


_QP1_C = np.array([0.3, -0.7, 2.0])


def _synthetic_qp1(n):
    c = _QP1_C

    def fun(x):
        return 0.5 * float((x - c) @ (x - c))

    return (Objective(fun, lambda x: x - c, lambda x: np.eye(3)),
            Bounds([0.0, -INF, -INF], [1.0, 0.0, INF]), np.array([0.9, -0.1, 5.0]), (c.copy(), 0.0))


def _synthetic_linear(n):
    w = np.array([1.0, 2.0])
    return (Objective(lambda x: float(w @ x), lambda x: w.copy(), lambda x: np.zeros((2, 2))),
            Bounds(np.zeros(2), np.ones(2)), np.full(2, 0.5), (np.zeros(2), 0.0))


def _synthetic_saddle(n):
    # x1^2 + x2^4/4 - x2^2/2 started on the saddle line x2 = 0
    def fun(x):
        return x[0] ** 2 + x[1] ** 4 / 4 - x[1] ** 2 / 2

    def grad(x):
        return np.array([2 * x[0], x[1] ** 3 - x[1]])

    def hess(x):
        return np.array([[2.0, 0.0], [0.0, 3 * x[1] ** 2 - 1]])

    return (Objective(fun, grad, hess), Bounds(np.full(2, -2.0), np.full(2, 2.0)), np.array([0.7, 0.0]),
            (np.array([0.0, 1.0]), -0.25))


_REGISTRY = {
    spec.name: spec
    for spec in [
        ProblemSpec("bdexp", "cute_misc", _bdexp, 100, scalable=True, min_n=3,
                    note="iterates creep along the flat exponential tail where f and the scaled "
                    "gradient decay sublinearly; iteration count differs from the reference run"),
        ProblemSpec("camel6", "cute_misc", _camel6, 2),
        ProblemSpec("hatflda", "cute_misc", _hatflda, 4, scalable=True, min_n=2),
        ProblemSpec("hatfldc", "cute_misc", _hatfldc, 25, scalable=True, min_n=3),
        ProblemSpec("hs3mod", "hock_schittkowski", _hs3mod, 2),
        ProblemSpec("hs05", "hock_schittkowski", _hs05, 2),
        ProblemSpec("hs25", "hock_schittkowski", _hs25, 3, note="start x1=100 lies on its upper bound; the repaired start is already an approximate "
                    "second-order point of the flat plateau, so the run stops at once"),
        ProblemSpec("hs38", "hock_schittkowski", _hs38, 4),
        ProblemSpec("mccormck", "cute_misc", _mccormck, 10, scalable=True, min_n=2),
        ProblemSpec("nonscomp", "cute_misc", _nonscomp, 25, scalable=True, min_n=2),
        ProblemSpec("simbqp", "cute_misc", _simbqp, 2, note="re-encoded simple bounded QP"),
        ProblemSpec("synthetic_qp1", "synthetic", _synthetic_qp1, 3),
        ProblemSpec("synthetic_linear", "synthetic", _synthetic_linear, 2),
        ProblemSpec("synthetic_saddle", "synthetic", _synthetic_saddle, 2),
    ]
}

CORE_SET = tuple(_REGISTRY)


def list_problems():
    """Registered problem names in a fixed order."""
    return list(_REGISTRY)


def spec(name) -> ProblemSpec:
    try:
        return _REGISTRY[name.lower()]
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; known: {', '.join(_REGISTRY)}") from None


def get(name, n=None) -> BoxProblem:
    """Build a registered problem, optionally at dimension ``n``."""
    ps = spec(name)
    if n is None:
        n = ps.default_n
    n = int(n)
    if n != ps.default_n and (not ps.scalable or n < ps.min_n):
        raise ValueError(f"problem {ps.name!r} does not accept n={n}")
    obj, bounds, x0, ref = ps.build(n)
    meta = {"family": ps.family, "note": ps.note, "raw_start": np.asarray(x0, dtype=float)}
    if not is_strictly_interior(x0, bounds):
        x0 = repair_start(x0, bounds)
    return BoxProblem(name=ps.name, bounds=bounds, start=x0, fun=obj.fun, grad=obj.grad, hess=obj.hess,
                      reference=ref, meta=meta)


def _parse_values(tokens, n):
    vals = [float(t) for t in tokens]
    if len(vals) == 1:
        vals = vals * n
    if len(vals) != n:
        raise ValueError(f"expected {n} values, got {len(vals)}")
    return np.array(vals)


def load_problem_file(path) -> BoxProblem:
    """Read a plain-text problem definition.

    Format, one ``key value...`` pair per line (``#`` starts a comment)::

        name      my_box
        objective camel6        # builtin registry objective
        n         2
        l         -3 -1.5       # 'inf' / '-inf' accepted; one value broadcasts
        u         3 1.5
        x0        0.5 0.5

    Omitted ``l``/``u``/``x0`` fall back to the builtin problem's values.
    """
    entries = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *rest = line.split()
        entries[key.lower()] = rest
    if "objective" not in entries:
        raise ValueError("problem file needs an 'objective' line")
    key = entries["objective"][0]
    n = int(entries["n"][0]) if "n" in entries else None
    base = get(key, n)
    n = base.dim
    lower = _parse_values(entries["l"], n) if "l" in entries else base.bounds.lower
    upper = _parse_values(entries["u"], n) if "u" in entries else base.bounds.upper
    bounds = Bounds(lower, upper)
    x0 = _parse_values(entries["x0"], n) if "x0" in entries else base.meta["raw_start"]
    if not is_strictly_interior(x0, bounds):
        x0 = repair_start(x0, bounds)
    name = entries.get("name", [base.name])[0]
    return BoxProblem(name=name, bounds=bounds, start=x0, fun=base.fun, grad=base.grad, hess=base.hess,
                      reference=None, meta={"family": "file", "objective": key})
