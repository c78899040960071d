"""Homogenized model: bordered matrix assembly and its leftmost eigenpair.

The bordered matrix is ``F = [[B, g], [g^T, -delta]]``.  Minimizing
``[s; t]^T F [s; t]`` over the unit ball is solved by the eigenvector of the
smallest eigenvalue ``-theta`` of ``F``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

DENSE_LIMIT = 512
TOL_EIG = 1e-10


class EigenSolverError(RuntimeError):
    """The iterative eigensolver did not converge; carries the best residual."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class HomogenizedMatrix:
    b_bar: np.ndarray
    g_bar: np.ndarray
    delta: float

    @property
    def n(self):
        return self.g_bar.size

    def dense(self):
        n = self.n
        F = np.empty((n + 1, n + 1))
        F[:n, :n] = self.b_bar
        F[:n, n] = self.g_bar
        F[n, :n] = self.g_bar
        F[n, n] = -self.delta
        return F

    def matvec(self, y):
        s, t = y[:-1], y[-1]
        out = np.empty_like(y)
        out[:-1] = self.b_bar @ s + t * self.g_bar
        out[-1] = self.g_bar @ s - self.delta * t
        return out

    def norm_inf(self):
        rows = np.abs(self.b_bar).sum(axis=1) + np.abs(self.g_bar)
        last = np.abs(self.g_bar).sum() + abs(self.delta)
        return float(max(rows.max(initial=0.0), last))


@dataclass(frozen=True)
class OhmSolution:
    s: np.ndarray
    t: float
    theta: float
    delta: float
    residual_stationarity: float
    residual_coupling: float
    norm_err: float
    method: str = "dense"

    @property
    def vector(self):
        return np.append(self.s, self.t)


def assemble_f(b_bar, g_bar, delta) -> HomogenizedMatrix:
    b_bar = np.asarray(b_bar, dtype=float)
    g_bar = np.asarray(g_bar, dtype=float).ravel()
    if b_bar.shape != (g_bar.size, g_bar.size):
        raise ValueError(f"b_bar has shape {b_bar.shape}, expected ({g_bar.size}, {g_bar.size})")
    if not delta >= 0:
        raise ValueError(f"delta must be nonnegative, got {delta}")
    return HomogenizedMatrix(b_bar, g_bar, float(delta))


def _residuals(F: HomogenizedMatrix, s, t, theta):
    stat = np.linalg.norm(F.b_bar @ s + theta * s + t * F.g_bar)
    coup = abs(F.g_bar @ s - t * (F.delta - theta))
    norm_err = abs(np.sqrt(s @ s + t * t) - 1.0)
    return float(stat), float(coup), float(norm_err)


def _finish(F, y, lam, method, tol_eig):
    y = y / np.linalg.norm(y)
    s, t = y[:-1].copy(), float(y[-1])
    if abs(t) > tol_eig and t < 0:
        s, t = -s, -t
    theta = -float(lam)
    stat, coup, norm_err = _residuals(F, s, t, theta)
    return OhmSolution(s, t, theta, F.delta, stat, coup, norm_err, method)


def smallest_eigenpair_dense(M):
    """Smallest eigenvalue and unit eigenvector of a dense symmetric matrix."""
    w, V = scipy.linalg.eigh(M, subset_by_index=[0, 0])
    return float(w[0]), V[:, 0]


def smallest_eigenvalue(M):
    M = np.asarray(M, dtype=float)
    if M.shape[0] <= DENSE_LIMIT:
        return float(scipy.linalg.eigh(M, eigvals_only=True, subset_by_index=[0, 0])[0])
    lam, _ = lanczos_smallest(lambda y: M @ y, M.shape[0], norm=float(np.abs(M).sum(axis=1).max()))
    return lam


def lanczos_smallest(matvec, n, tol=TOL_EIG, max_iter=None, norm=None, seed=0):
    """Leftmost eigenpair of a symmetric operator by implicitly restarted Lanczos (ARPACK).

    Convergence is accepted when ``||A y - lam y|| <= tol*(1+norm)``.

    Raises
    ------
    EigenSolverError
        If ARPACK stops within ``max_iter`` restarts without reaching the
        tolerance; carries the best residual seen.
    """
    if max_iter is None:
        max_iter = 10 * n
    if norm is None:
        norm = 1.0
    threshold = tol * (1.0 + norm)
    if n < 3:
        # ARPACK needs k < n - 1 room; tiny operators are assembled densely
        M = np.column_stack([matvec(e) for e in np.eye(n)])
        lam, y = smallest_eigenpair_dense(0.5 * (M + M.T))
        return lam, y
    op = scipy.sparse.linalg.LinearOperator((n, n), matvec=matvec, dtype=float)
    v0 = np.random.default_rng(seed).standard_normal(n)
    try:
        w, V = scipy.sparse.linalg.eigsh(op, k=1, which="SA", v0=v0, maxiter=max_iter,
                                         tol=tol)
    except scipy.sparse.linalg.ArpackNoConvergence as exc:
        best = np.inf
        for lam, y in zip(exc.eigenvalues, exc.eigenvectors.T):
            best = min(best, float(np.linalg.norm(matvec(y) - lam * y)))
        raise EigenSolverError(f"Lanczos did not converge in {max_iter} restarts (residual {best:.3e})", best) from None
    lam, y = float(w[0]), V[:, 0] / np.linalg.norm(V[:, 0])
    res = float(np.linalg.norm(matvec(y) - lam * y))
    if res > threshold:
        raise EigenSolverError(f"Lanczos residual {res:.3e} above {threshold:.3e}", res)
    return lam, y


def _trivial_case(F: HomogenizedMatrix, tol_eig):
    n = F.n
    lam_b, vec_b = smallest_eigenpair_dense(F.b_bar)
    if lam_b > -F.delta or lam_b == -F.delta:
        y = np.zeros(n + 1)
        y[-1] = 1.0
        return _finish(F, y, -F.delta, "trivial", tol_eig)
    return _finish(F, np.append(vec_b, 0.0), lam_b, "trivial", tol_eig)


def leftmost_eigenpair(F: HomogenizedMatrix, tol_eig=TOL_EIG, method="auto") -> OhmSolution:
    """Solve the homogenized model.

    Parameters
    ----------
    method : {"auto", "dense", "lanczos"}
        ``auto`` uses the dense LAPACK path up to ``DENSE_LIMIT`` rows and
        Lanczos above, falling back to dense if Lanczos fails.

    Notes
    -----
    With an exactly zero scaled gradient the bordered solve is skipped:
    ``t = 1`` when the smallest eigenvalue of ``B`` exceeds ``-delta``,
    otherwise ``t = 0`` and ``s`` is the leftmost eigenvector of ``B``.
    """
    if not np.any(F.g_bar):
        return _trivial_case(F, tol_eig)
    if method == "auto":
        method = "dense" if F.n + 1 <= DENSE_LIMIT else "lanczos"
    if method == "lanczos":
        try:
            lam, y = lanczos_smallest(F.matvec, F.n + 1, tol=tol_eig, norm=F.norm_inf())
            return _finish(F, y, lam, "lanczos", tol_eig)
        except EigenSolverError:
            if F.n + 1 > 4 * DENSE_LIMIT:
                raise
    elif method != "dense":
        raise ValueError(f"unknown eigen method {method!r}")
    lam, y = smallest_eigenpair_dense(F.dense())
    return _finish(F, y, lam, "dense", tol_eig)


@dataclass(frozen=True)
class OptimalityResiduals:
    psd_margin: float
    stationarity: float
    coupling: float
    norm_err: float

    def ok(self, tol):
        return (self.psd_margin >= -tol and self.stationarity <= tol and self.coupling <= tol
                and self.norm_err <= tol)


def verify_optimality(F: HomogenizedMatrix, sol: OhmSolution, tol=1e-8) -> OptimalityResiduals:
    """Recompute the optimality conditions of the homogenized model.

    ``psd_margin`` is the smallest eigenvalue of ``F + theta*I`` (must be
    ``>= -tol``).  The stationarity and coupling residuals are
    ``||(B + theta I)s + t g||`` and ``|g^T s - t(delta - theta)|``.
    """
    M = F.dense()
    M[np.diag_indices_from(M)] += sol.theta
    margin = float(scipy.linalg.eigh(M, eigvals_only=True, subset_by_index=[0, 0])[0])
    stat, coup, norm_err = _residuals(F, sol.s, sol.t, sol.theta)
    return OptimalityResiduals(margin, stat, coup, norm_err)
