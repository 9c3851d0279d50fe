"""Weight-vector solvers for the linear frame-size predictor.

All solvers take a feature matrix without the constant column and return
``theta = [intercept, w_1, ..., w_N]``.
"""
from __future__ import annotations

import math
import warnings

import numpy as np

from ..errors import ConvergenceError, InsufficientDataError, RangeError, SingularDesignError


class RankDeficiencyWarning(UserWarning):
    pass


def design_matrix(features) -> np.ndarray:
    F = np.asarray(features, dtype=float)
    if F.ndim == 1:
        F = F[:, None]
    return np.hstack([np.ones((F.shape[0], 1)), F])


def _prepare(features, targets):
    X = design_matrix(features)
    y = np.asarray(targets, dtype=float).ravel()
    if X.shape[0] != y.size:
        raise ValueError(f"{X.shape[0]} feature rows but {y.size} targets")
    if y.size < X.shape[1]:
        raise InsufficientDataError(f"need at least {X.shape[1]} rows to fit {X.shape[1]} weights, got {y.size}")
    return X, y


def _column_scale(X):
    s = np.max(np.abs(X), axis=0)
    s[s == 0] = 1.0
    return s


def _lstsq(A, b):
    sol, _, rank, _ = np.linalg.lstsq(A, b, rcond=None)
    return sol, rank


def pinball_loss(residuals, p: float) -> float:
    """Sum of ``r * (p - 1{r < 0})``."""
    r = np.asarray(residuals, dtype=float)
    return float(np.sum(np.where(r >= 0, p * r, (p - 1.0) * r)))


def huber_loss(residuals, delta: float) -> float:
    a = np.abs(np.asarray(residuals, dtype=float))
    return float(np.sum(np.where(a <= delta, 0.5 * a * a, delta * (a - 0.5 * delta))))


def fit_ols(features, targets, ridge_fallback: bool = True) -> np.ndarray:
    """Least-squares weights.

    A rank-deficient design (e.g. a perfectly constant trace, whose history
    columns coincide with the intercept) raises :class:`SingularDesignError`
    unless ``ridge_fallback`` is set, in which case a ridge term
    ``1e-10 * scale**2`` is added and a :class:`RankDeficiencyWarning` issued.
    """
    X, y = _prepare(features, targets)
    cs = _column_scale(X)
    sol, rank = _lstsq(X / cs, y)
    if rank < X.shape[1]:
        if not ridge_fallback:
            raise SingularDesignError(f"design matrix has rank {rank} < {X.shape[1]}")
        warnings.warn(f"design matrix has rank {rank} < {X.shape[1]}; using ridge fallback",
                      RankDeficiencyWarning, stacklevel=2)
        scale = float(np.mean(np.abs(y))) or 1.0
        lam = 1e-10 * scale ** 2
        G = X.T @ X + lam * np.eye(X.shape[1])
        return np.linalg.solve(G, X.T @ y)
    return sol / cs


def lower_quantile(values, p: float) -> float:
    """Order statistic of rank ``ceil(p*n)``: the smallest minimizer of the pinball loss."""
    x = np.sort(np.asarray(values, dtype=float))
    k = math.ceil(round(p * x.size, 9))
    return float(x[max(k, 1) - 1])


def _vertex_descent(X, y, theta, p, max_pivots=50):
    """Move to the optimal vertex of the pinball loss starting near ``theta``.

    The ``k`` points closest to the current fit form the basis and are
    interpolated. At a vertex, zero is a subgradient iff the basis multipliers
    ``u`` solving ``X_B^T u = -sum_{i not in B} psi_i x_i`` (``psi_i`` is ``p``
    or ``p-1`` by residual sign) all lie in ``[p-1, p]``. A multiplier outside
    that range gives a descent edge that frees its point; the step length is
    the breakpoint where the directional slope turns non-negative, and the
    point sitting there enters the basis.

    Returns ``(theta_vertex, certified)``, or ``None`` if the starting basis is singular.
    """
    n, k = X.shape
    r = y - X @ theta
    basis = np.argpartition(np.abs(r), k - 1)[:k]
    tol = 1e-9
    tb = None
    for _ in range(max_pivots + 1):
        XB = X[basis]
        try:
            if np.linalg.cond(XB) > 1e12:
                return None if tb is None else (tb, False)
            XBinv = np.linalg.inv(XB)
        except np.linalg.LinAlgError:
            return None if tb is None else (tb, False)
        tb = XBinv @ y[basis]
        mask = np.ones(n, dtype=bool)
        mask[basis] = False
        Xn = X[mask]
        rn = y[mask] - Xn @ tb
        psi = np.where(rn >= 0, p, p - 1.0)
        u = -(psi @ Xn) @ XBinv
        excess = np.maximum(u - p, (p - 1.0) - u)
        j = int(np.argmax(excess))
        if excess[j] <= tol:
            return tb, True
        s = 1.0 if u[j] > p else -1.0
        d = -s * XBinv[:, j]
        slope = -s * u[j] + (p if s > 0 else 1.0 - p)
        xd = Xn @ d
        with np.errstate(divide="ignore", invalid="ignore"):
            alpha = rn / xd
        ok = np.flatnonzero((xd != 0) & (alpha > 0))
        if ok.size == 0:
            return tb, False
        order = ok[np.argsort(alpha[ok], kind="stable")]
        crossing = np.flatnonzero(slope + np.cumsum(np.abs(xd[order])) >= 0)
        if crossing.size == 0:
            return tb, False
        entering = np.flatnonzero(mask)[order[crossing[0]]]
        basis = basis.copy()
        basis[j] = entering
    return tb, False


def fit_quantile(features, targets, p_s: float, max_iter: int = 500, tol: float = 1e-9,
                 decay: float = 0.5, polish_every: int = 4) -> np.ndarray:
    """Pinball-loss (quantile) regression weights.

    Iteratively reweighted least squares on a smoothed absolute value,
    ``|r| ~ r^2 / max(|r|, eps)``, with ``eps`` shrinking geometrically. The
    exact optimum of the piecewise-linear loss sits on a vertex where
    ``N + 1`` points are interpolated, so every ``polish_every`` sweeps the
    IRLS iterate seeds :func:`_vertex_descent`; a certified optimal vertex ends
    the iteration. Otherwise the fit stops once ``eps`` reached its floor and
    theta moves less than ``tol`` relative.

    With no history columns the result is the order statistic of rank
    ``ceil(p_s * n)``, i.e. the lower end of the optimal interval on ties.
    """
    if not 0 < p_s < 1:
        raise RangeError(f"p_s must be in (0, 1), got {p_s}")
    X, y = _prepare(features, targets)
    if X.shape[1] == 1:
        return np.array([lower_quantile(y, p_s)])

    cs = _column_scale(X)
    ys_scale = float(np.mean(np.abs(y))) or 1.0
    Xs, ys = X / cs, y / ys_scale

    theta, _ = _lstsq(Xs, ys)
    eps = max(float(np.std(ys - Xs @ theta)), 1e-6)
    eps_min = 1e-10
    best_theta, best_loss = theta, pinball_loss(ys - Xs @ theta, p_s)
    for it in range(max_iter):
        r = ys - Xs @ theta
        wts = np.where(r >= 0, p_s, 1.0 - p_s) / np.maximum(np.abs(r), eps)
        sw = np.sqrt(wts)
        new, _ = _lstsq(Xs * sw[:, None], ys * sw)
        step = float(np.linalg.norm(new - theta))
        theta = new
        eps = max(eps * decay, eps_min)

        loss = pinball_loss(ys - Xs @ theta, p_s)
        if loss < best_loss:
            best_theta, best_loss = theta, loss
        cand = _vertex_descent(Xs, ys, theta, p_s) if it % polish_every == 0 else None
        if cand is not None:
            tv, certified = cand
            vloss = pinball_loss(ys - Xs @ tv, p_s)
            if vloss <= best_loss:
                best_theta, best_loss = tv, vloss
            if certified:
                return best_theta * ys_scale / cs
        if eps == eps_min and step <= tol * max(float(np.linalg.norm(theta)), 1.0):
            return best_theta * ys_scale / cs
    raise ConvergenceError(f"quantile regression did not converge in {max_iter} iterations",
                           best_loss * ys_scale, best_theta * ys_scale / cs)


def fit_huber(features, targets, delta: float | None = None, max_iter: int = 500,
              tol: float = 1e-9) -> np.ndarray:
    """Huber-loss regression by iteratively reweighted least squares.

    Weights are ``min(1, delta / |r|)``. ``delta=None`` uses mean(|targets|)/4.
    Starts from the OLS solution, so a ``delta`` above every OLS residual
    returns OLS after one sweep.
    """
    X, y = _prepare(features, targets)
    if delta is None:
        delta = default_huber_delta(y)
    if not delta > 0:
        raise RangeError(f"huber delta must be > 0, got {delta}")
    cs = _column_scale(X)
    Xs = X / cs
    theta, _ = _lstsq(Xs, y)
    for _ in range(max_iter):
        r = y - Xs @ theta
        a = np.abs(r)
        w = np.where(a <= delta, 1.0, delta / np.maximum(a, 1e-300))
        sw = np.sqrt(w)
        new, _ = _lstsq(Xs * sw[:, None], y * sw)
        step = float(np.linalg.norm(new - theta))
        theta = new
        if step <= tol * max(float(np.linalg.norm(theta)), 1e-300):
            return theta / cs
    raise ConvergenceError(f"huber regression did not converge in {max_iter} iterations",
                           huber_loss(y - Xs @ theta, delta), theta / cs)


def default_huber_delta(targets) -> float:
    return float(np.mean(np.abs(targets))) / 4.0
