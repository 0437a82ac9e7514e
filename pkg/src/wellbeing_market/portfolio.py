"""Mean-variance and mean-CVaR efficient frontiers on scenario returns.

Every frontier point maximizes the scalarized objective

    gamma * E[r_p] - (1 - gamma) * Risk(r_p),    gamma in [0, 1)

over the budget simplex (long-only by default; a budget-only variant
allows shorting). gamma = 0 is the minimum-risk portfolio and the risk
of the optimum is non-decreasing in gamma.

The variance problem is solved by projected gradient with exact line
search on the quadratic, then polished to the exact KKT point of its
active set. The CVaR problem uses the scenario linear program with one
shortfall variable per scenario (threshold variable plus hinge terms),
solved by a dense LP routine; its risk functional is the tail average
implemented in :func:`wellbeing_market.risk.cvar_tail_average`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .errors import NumericalError, ValidationError
from .risk import cvar_tail_average

RISK_MEASURES = ("variance", "cvar95", "cvar99")
_CVAR_ALPHA = {"cvar95": 0.05, "cvar99": 0.01}


@dataclass(frozen=True)
class FrontierPoint:
    gamma: float
    weights: np.ndarray
    expected_return: float
    risk_value: float


@dataclass(frozen=True)
class FrontierTrace:
    risk_measure: str
    universe: tuple[str, ...]
    long_only: bool
    points: tuple[FrontierPoint, ...] = field(repr=False)

    def weight_table(self) -> np.ndarray:
        """Gamma-by-asset weight composition along the trace."""
        return np.vstack([p.weights for p in self.points])


def _check_returns(returns) -> np.ndarray:
    r = np.asarray(returns, dtype=float)
    if r.ndim != 2:
        raise ValidationError("returns must be a scenarios x assets matrix")
    if not np.all(np.isfinite(r)):
        raise ValidationError("returns contain non-finite values")
    return r


def _project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    cond = u - css / idx > 0
    rho = idx[cond][-1]
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def _kkt_polish(cov, lin, w, tol=1e-9):
    """Solve the equality-constrained QP on the active set of ``w``.

    Minimizes w' cov w - lin' w subject to the budget and to zero weight
    on the active set; returns None unless the solution satisfies the
    full KKT conditions (primal and dual feasibility).
    """
    n = w.size
    free = w > 1e-9
    if not free.any():
        return None
    idx = np.flatnonzero(free)
    k = idx.size
    kkt = np.zeros((k + 1, k + 1))
    kkt[:k, :k] = 2.0 * cov[np.ix_(idx, idx)]
    kkt[:k, k] = 1.0
    kkt[k, :k] = 1.0
    rhs = np.concatenate([lin[idx], [1.0]])
    try:
        sol = np.linalg.solve(kkt, rhs)
    except np.linalg.LinAlgError:
        return None
    w_free, lam = sol[:k], sol[k]
    if np.any(w_free < -tol):
        return None
    out = np.zeros(n)
    out[idx] = np.maximum(w_free, 0.0)
    out /= out.sum()
    grad = 2.0 * cov @ out - lin
    # Dual feasibility: active coordinates must not want to grow.
    if np.any(grad[~free] < lam - 1e-7 * (1 + abs(lam))):
        return None
    return out


def mean_variance_point(
    returns, gamma: float, long_only: bool = True
) -> FrontierPoint:
    """One scalarized mean-variance optimum.

    Long-only uses projected gradient with exact line search plus an
    active-set polish; the budget-only variant solves the KKT system
    directly (with a ridge fallback and warning if the covariance is
    singular).
    """
    r = _check_returns(returns)
    if not 0 <= gamma <= 1:
        raise ValidationError("gamma must lie in [0, 1]")
    n = r.shape[1]
    mu = r.mean(axis=0)
    if n == 1:
        w = np.ones(1)
        return FrontierPoint(gamma, w, float(mu[0]), float(r.var(ddof=1)))
    cov = np.cov(r, rowvar=False)

    if not long_only:
        if gamma >= 1:
            raise ValidationError(
                "gamma = 1 with shorting allowed is unbounded; use gamma < 1"
            )
        q = 2.0 * (1.0 - gamma) * cov
        if np.linalg.cond(q) > 1e12:
            warnings.warn(
                "singular covariance; adding 1e-8 ridge to the diagonal",
                stacklevel=2,
            )
            q = q + 1e-8 * np.eye(n)
        kkt = np.zeros((n + 1, n + 1))
        kkt[:n, :n] = q
        kkt[:n, n] = 1.0
        kkt[n, :n] = 1.0
        rhs = np.concatenate([gamma * mu, [1.0]])
        sol = np.linalg.solve(kkt, rhs)
        w = sol[:n]
    elif gamma >= 1:
        w = np.zeros(n)
        w[int(np.argmax(mu))] = 1.0
    else:
        # minimize (1-gamma) w'Cov w - gamma mu'w over the simplex
        scale = 1.0 - gamma
        lin = gamma * mu / scale  # work with w'Cov w - lin'w
        eigmax = float(np.linalg.eigvalsh(cov)[-1])
        step = 1.0 / max(2.0 * eigmax, 1e-12)
        w = np.full(n, 1.0 / n)
        for _ in range(20_000):
            grad = 2.0 * cov @ w - lin
            v = _project_simplex(w - step * grad)
            d = v - w
            if np.max(np.abs(d)) < 1e-14:
                break
            curv = float(d @ cov @ d)
            if curv <= 0:
                eta = 1.0
            else:
                eta = float(np.clip(-(grad @ d) / (2.0 * curv), 0.0, 1.0))
                if eta == 0.0:
                    break
            w = w + eta * d
        polished = _kkt_polish(cov, lin, w)
        if polished is not None:
            w = polished

    port = r @ w
    return FrontierPoint(
        gamma=float(gamma),
        weights=w,
        expected_return=float(mu @ w),
        risk_value=float(port.var(ddof=1)),
    )


def _solve_cvar_lp(r_rows, mu, gamma, alpha, s_total, long_only):
    """Rockafellar-Uryasev LP restricted to the given scenario rows.

    The hinge terms of scenarios outside ``r_rows`` are assumed zero;
    the caller must verify that assumption at the returned solution.
    """
    m, n = r_rows.shape
    c = np.concatenate(
        [-gamma * mu, [1.0 - gamma], np.full(m, (1.0 - gamma) / (alpha * s_total))]
    )
    a_ub = sparse.hstack(
        [
            sparse.csr_matrix(-r_rows),
            sparse.csr_matrix(-np.ones((m, 1))),
            -sparse.eye(m, format="csr"),
        ],
        format="csr",
    )
    a_eq = sparse.csr_matrix(
        np.concatenate([np.ones(n), [0.0], np.zeros(m)])[None, :]
    )
    w_bound = (0.0, None) if long_only else (None, None)
    bounds = [w_bound] * n + [(None, None)] + [(0.0, None)] * m
    res = linprog(
        c, A_ub=a_ub, b_ub=np.zeros(m), A_eq=a_eq, b_eq=[1.0], bounds=bounds,
        method="highs",
    )
    if not res.success:
        raise NumericalError(f"mean-CVaR LP failed: {res.message}")
    return res.x[:n], float(res.x[n])


def mean_cvar_point(
    returns,
    gamma: float,
    alpha: float,
    long_only: bool = True,
    warm_weights=None,
) -> FrontierPoint:
    """One scalarized mean-CVaR optimum via the scenario LP.

    The full program has one shortfall variable per scenario; since only
    the worst ``alpha`` fraction of scenarios bind at the optimum, it is
    solved by scenario activation: optimize over a candidate tail, then
    check every scenario's loss against the optimal threshold and grow
    the candidate set until no scenario outside it exceeds the
    threshold. At that point the restricted and full programs coincide,
    so the result is exact; a full-size solve is the fallback.

    ``warm_weights`` seeds the candidate tail with the worst scenarios
    of a previously optimal portfolio (used when sweeping gamma).
    """
    r = _check_returns(returns)
    if not 0 <= gamma <= 1:
        raise ValidationError("gamma must lie in [0, 1]")
    if not 0 < alpha < 0.5:
        raise ValidationError("alpha must lie in (0, 0.5)")
    s, n = r.shape
    if s < 1.0 / alpha:
        raise ValidationError(
            f"need at least 1/alpha = {1 / alpha:.0f} scenarios, got {s}"
        )
    mu = r.mean(axis=0)

    tail = max(int(np.ceil(alpha * s)), 1)
    seed_size = min(s, tail + max(tail // 2, 32))
    active = np.zeros(s, dtype=bool)
    ew_losses = -(r @ np.full(n, 1.0 / n))
    active[np.argpartition(ew_losses, -seed_size)[-seed_size:]] = True
    if warm_weights is not None:
        warm_losses = -(r @ np.asarray(warm_weights, dtype=float))
        active[np.argpartition(warm_losses, -seed_size)[-seed_size:]] = True

    w = zeta = None
    for _ in range(25):
        idx = np.flatnonzero(active)
        w, zeta = _solve_cvar_lp(r[idx], mu, gamma, alpha, s, long_only)
        losses = -(r @ w)
        viol = (losses > zeta + 1e-11 * max(1.0, abs(zeta))) & ~active
        if not viol.any():
            break
        active |= viol
    else:
        w, zeta = _solve_cvar_lp(r, mu, gamma, alpha, s, long_only)

    if long_only:
        w = np.maximum(w, 0.0)
    w = w / w.sum()
    port = r @ w
    return FrontierPoint(
        gamma=float(gamma),
        weights=w,
        expected_return=float(mu @ w),
        risk_value=cvar_tail_average(port, alpha),
    )


def default_gamma_grid() -> np.ndarray:
    """The 100 equally spaced risk-aversion values 0, 0.01, ..., 0.99."""
    return np.round(np.arange(100) / 100.0, 2)


def trace_frontier(
    returns,
    risk_measure: str,
    gamma_grid=None,
    labels: tuple[str, ...] | None = None,
    long_only: bool = True,
) -> FrontierTrace:
    """Solve one frontier point per gamma and assemble the trace."""
    if risk_measure not in RISK_MEASURES:
        raise ValidationError(
            f"unknown risk measure {risk_measure!r}; pick from {RISK_MEASURES}"
        )
    r = _check_returns(returns)
    if gamma_grid is None:
        gamma_grid = default_gamma_grid()
    if labels is None:
        labels = tuple(f"asset_{i}" for i in range(r.shape[1]))
    if len(labels) != r.shape[1]:
        raise ValidationError("labels do not match the number of columns")

    points = []
    warm = None
    for gamma in gamma_grid:
        if risk_measure == "variance":
            points.append(mean_variance_point(r, float(gamma), long_only))
        else:
            pt = mean_cvar_point(
                r, float(gamma), _CVAR_ALPHA[risk_measure], long_only,
                warm_weights=warm,
            )
            warm = pt.weights
            points.append(pt)
    return FrontierTrace(
        risk_measure=risk_measure,
        universe=tuple(labels),
        long_only=long_only,
        points=tuple(points),
    )
