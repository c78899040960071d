"""Bound-constrained problem abstraction and evaluation bookkeeping."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class OracleError(ValueError):
    """Raised when an objective oracle returns a non-finite quantity."""

    def __init__(self, what, index, x):
        self.what = what
        self.index = index
        self.x = np.array(x, copy=True)
        super().__init__(f"non-finite {what} at coordinate {index} (x={self.x.tolist()})")


@dataclass(frozen=True)
class Bounds:
    """Lower and upper bounds, entries may be -inf / +inf.

    Attributes
    ----------
    lower : numpy.ndarray, shape (n,)
    upper : numpy.ndarray, shape (n,)
    """

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float).ravel()
        upper = np.asarray(self.upper, dtype=float).ravel()
        if lower.shape != upper.shape:
            raise ValueError("lower and upper bounds must have the same length")
        if np.isnan(lower).any() or np.isnan(upper).any():
            raise ValueError("bounds must not contain NaN")
        if not np.all(lower < upper):
            bad = int(np.flatnonzero(~(lower < upper))[0])
            raise ValueError(f"lower[{bad}]={lower[bad]} is not below upper[{bad}]={upper[bad]}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def n(self):
        return self.lower.size

    @classmethod
    def unbounded(cls, n):
        return cls(np.full(n, -np.inf), np.full(n, np.inf))


def _check_dim(x, bounds):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size != bounds.n:
        raise ValueError(f"expected a vector of length {bounds.n}, got shape {x.shape}")
    return x


def is_strictly_interior(x, bounds: Bounds) -> bool:
    """Return True iff ``lower < x < upper`` holds in every coordinate."""
    x = _check_dim(x, bounds)
    return bool(np.all(bounds.lower < x) and np.all(x < bounds.upper))


def repair_start(x0, bounds: Bounds, margin=1e-2):
    """Move coordinates lying on (or outside) a bound strictly inside.

    A coordinate at or below ``lower`` goes to ``lower + margin*min(1, u-l)``;
    one at or above ``upper`` goes to ``upper - margin*min(1, u-l)``.
    """
    x = _check_dim(x0, bounds).copy()
    width = np.minimum(1.0, bounds.upper - bounds.lower)
    low = x <= bounds.lower
    high = x >= bounds.upper
    x[low] = bounds.lower[low] + margin * width[low]
    x[high] = bounds.upper[high] - margin * width[high]
    return x


@dataclass
class EvalCounters:
    n_f: int = 0
    n_g: int = 0
    n_h: int = 0

    def copy(self):
        return EvalCounters(self.n_f, self.n_g, self.n_h)


@dataclass
class BoxProblem:
    """Minimize ``f(x)`` subject to ``lower <= x <= upper``.

    ``fun``, ``grad`` and ``hess`` must be pure functions of ``x``: the same
    problem object may back several concurrent solves, each with its own
    :class:`EvalCounters`.
    """

    name: str
    bounds: Bounds
    start: np.ndarray
    fun: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    hess: Callable[[np.ndarray], np.ndarray]
    reference: tuple | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.start = _check_dim(self.start, self.bounds).copy()
        if not is_strictly_interior(self.start, self.bounds):
            raise ValueError(f"start point of {self.name!r} is not strictly interior")

    @property
    def dim(self):
        return self.bounds.n


def evaluate(problem: BoxProblem, x, what: str, counters: EvalCounters | None = None):
    """Dispatch one oracle call and count it.

    Parameters
    ----------
    what : {"value", "gradient", "hessian"}
    counters : EvalCounters, optional
        Incremented by exactly one in the matching field.

    Returns
    -------
    float or numpy.ndarray
        Hessians are returned symmetrized as ``(H + H.T) / 2``.
    """
    x = _check_dim(x, problem.bounds)
    if not np.all(np.isfinite(x)):
        raise ValueError("evaluation point must be finite")
    if what == "value":
        out = float(problem.fun(x))
        if counters is not None:
            counters.n_f += 1
        if not np.isfinite(out):
            raise OracleError("value", 0, x)
        return out
    if what == "gradient":
        out = np.asarray(problem.grad(x), dtype=float).reshape(problem.dim)
        if counters is not None:
            counters.n_g += 1
    elif what == "hessian":
        out = np.asarray(problem.hess(x), dtype=float).reshape(problem.dim, problem.dim)
        out = 0.5 * (out + out.T)
        if counters is not None:
            counters.n_h += 1
    else:
        raise ValueError(f"unknown evaluation kind {what!r}")
    bad = np.flatnonzero(~np.isfinite(out.ravel()))
    if bad.size:
        raise OracleError(what, int(bad[0]), x)
    return out
