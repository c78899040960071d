"""Affine-scaling quantities at an interior iterate.

For each coordinate the scaling vector ``v`` picks the bound that the
negative gradient points toward::

    g < 0, u finite   ->  x - u
    g >= 0, l finite  ->  x - l
    g < 0, u = +inf   ->  -1
    g >= 0, l = -inf  ->  +1

``D = diag(|v|^{-1/2})``; the scaled gradient is ``D^{-1} g`` and the scaled
Hessian ``D^{-1} H D^{-1} + diag(g * jv)`` where ``jv`` is the derivative of
``|v|``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Bounds, _check_dim

# floor on |v| before the square root (diagnostics only, never alters v)
V_FLOOR = 1e-16


@dataclass(frozen=True)
class ScaledModel:
    v: np.ndarray
    d_inv: np.ndarray
    d_minus2: np.ndarray
    jv: np.ndarray
    g_bar: np.ndarray
    c_bar: np.ndarray
    b_bar: np.ndarray

    @property
    def gbar_norm(self):
        return float(np.linalg.norm(self.g_bar))


def compute_v(x, g, bounds: Bounds):
    x = _check_dim(x, bounds)
    g = _check_dim(g, bounds)
    lo, up = bounds.lower, bounds.upper
    if not (np.all(lo < x) and np.all(x < up)):
        bad = int(np.flatnonzero(~((lo < x) & (x < up)))[0])
        raise ValueError(f"x[{bad}]={x[bad]} is not strictly inside [{lo[bad]}, {up[bad]}]")
    neg = g < 0
    v = np.where(neg, np.where(np.isfinite(up), x - up, -1.0), np.where(np.isfinite(lo), x - lo, 1.0))
    return v


def compute_jv(g, bounds: Bounds):
    g = _check_dim(g, bounds)
    neg = g < 0
    jv = np.zeros(bounds.n, dtype=int)
    jv[~neg & np.isfinite(bounds.lower)] = 1
    jv[neg & np.isfinite(bounds.upper)] = -1
    return jv


def build_scaled_model(x, g, H, bounds: Bounds) -> ScaledModel:
    g = _check_dim(g, bounds)
    v = compute_v(x, g, bounds)
    d_minus2 = np.abs(v)
    d_inv = np.sqrt(np.maximum(d_minus2, V_FLOOR))
    jv = compute_jv(g, bounds)
    c_bar = jv * g
    H = np.asarray(H, dtype=float)
    b_bar = d_inv[:, None] * H * d_inv[None, :]
    b_bar = 0.5 * (b_bar + b_bar.T)
    b_bar[np.diag_indices_from(b_bar)] += c_bar
    return ScaledModel(v=v, d_inv=d_inv, d_minus2=d_minus2, jv=jv, g_bar=d_inv * g, c_bar=c_bar, b_bar=b_bar)


def kkt_residual(x, g, bounds: Bounds) -> float:
    """Norm of the scaled first-order system ``diag(|v|) g``."""
    v = compute_v(x, g, bounds)
    return float(np.linalg.norm(np.abs(v) * np.asarray(g, dtype=float)))
