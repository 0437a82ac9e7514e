"""Empirical left-tail risk measures on return samples.

All measures follow the loss convention: returns come in as signed
log returns, losses are reported positive. Quantiles use the
left-continuous empirical inverse with a strict inequality, i.e. the
level-alpha value-at-risk is minus the smallest order statistic whose
empirical CDF strictly exceeds alpha; ties are included in conditional
tails. Input samples are never mutated (all work happens on sorted
copies).

Small conditioning sets (below 10 points) produce a warning rather
than an error so that low alpha levels remain usable on short
historical samples.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ValidationError


class SmallTailWarning(UserWarning):
    """Raised when a tail or conditioning set has very few observations."""


def _as_sample(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float).ravel()
    if arr.size == 0:
        raise ValidationError("empty sample")
    if not np.isfinite(arr).all():
        raise DomainError("sample contains non-finite values")
    return arr


def _check_alpha(alpha: float):
    if not 0 < alpha < 0.5:
        raise ValidationError(f"alpha must be in (0, 0.5), got {alpha}")


def _tail_order_statistic(sorted_sample: np.ndarray, alpha: float) -> float:
    # Smallest x with empirical CDF strictly above alpha; the nudge keeps
    # exact-integer alpha*n cases on the strict-inequality side.
    n = sorted_sample.size
    k = int(math.floor(alpha * n + 1e-12)) + 1
    k = min(k, n)
    return float(sorted_sample[k - 1])


def var(sample, alpha: float) -> float:
    """Value-at-risk at level ``alpha`` (loss reported positive)."""
    _check_alpha(alpha)
    x = _as_sample(sample)
    if x.size < 1.0 / alpha:
        warnings.warn(
            f"sample size {x.size} below 1/alpha = {1.0 / alpha:.0f}; "
            "quantile is coarse",
            SmallTailWarning,
            stacklevel=2,
        )
    return -_tail_order_statistic(np.sort(x), alpha)


def cvar(sample, alpha: float) -> float:
    """Expected loss beyond the level-``alpha`` value-at-risk."""
    _check_alpha(alpha)
    x = _as_sample(sample)
    s = np.sort(x)
    cut = _tail_order_statistic(s, alpha)
    tail = s[s <= cut]
    if tail.size == 0:
        raise DomainError("empty tail")
    if tail.size < 2:
        warnings.warn(
            "tail has a single observation; expected shortfall equals VaR",
            SmallTailWarning,
            stacklevel=2,
        )
    return -float(tail.mean())


def cvar_tail_average(sample, alpha: float) -> float:
    """Average of the worst ``alpha`` fraction of outcomes (loss positive).

    This is the Rockafellar-Uryasev scenario form with fractional
    splitting of the boundary atom; it is the quantity the mean-CVaR
    portfolio program optimizes, and differs from :func:`cvar` by at
    most one order statistic's weight.
    """
    _check_alpha(alpha)
    x = _as_sample(sample)
    losses = np.sort(-x)[::-1]  # descending losses
    m = alpha * x.size
    whole = int(math.floor(m + 1e-12))
    frac = m - whole
    total = losses[:whole].sum()
    if frac > 1e-12 and whole < losses.size:
        total += frac * losses[whole]
    return float(total / m)


def covar(y_sample, x_sample, alpha: float) -> float:
    """Value-at-risk of ``y`` conditional on ``x`` being in its own tail."""
    _check_alpha(alpha)
    y = _as_sample(y_sample)
    x = _as_sample(x_sample)
    if y.size != x.size:
        raise ValidationError("paired samples must have equal length")
    cut_x = _tail_order_statistic(np.sort(x), alpha)
    cond = y[x <= cut_x]
    if cond.size < 10:
        warnings.warn(
            f"conditioning set has {cond.size} observations (< 10)",
            SmallTailWarning,
            stacklevel=2,
        )
    return -_tail_order_statistic(np.sort(cond), alpha)


def coes(y_sample, x_sample, alpha: float) -> float:
    """Expected shortfall of ``y`` beyond its conditional VaR, given ``x``
    in its own tail."""
    _check_alpha(alpha)
    y = _as_sample(y_sample)
    x = _as_sample(x_sample)
    if y.size != x.size:
        raise ValidationError("paired samples must have equal length")
    cut_x = _tail_order_statistic(np.sort(x), alpha)
    cond = y[x <= cut_x]
    if cond.size < 10:
        warnings.warn(
            f"conditioning set has {cond.size} observations (< 10)",
            SmallTailWarning,
            stacklevel=2,
        )
    xi = -_tail_order_statistic(np.sort(cond), alpha)
    tail = cond[cond <= -xi]
    if tail.size == 0:
        raise DomainError("empty conditional tail")
    return -float(tail.mean())


def coetl(y_sample, x_sample, alpha: float) -> float:
    """Mean loss of ``y`` when both ``y`` and ``x`` are in their own tails."""
    _check_alpha(alpha)
    y = _as_sample(y_sample)
    x = _as_sample(x_sample)
    if y.size != x.size:
        raise ValidationError("paired samples must have equal length")
    cut_y = _tail_order_statistic(np.sort(y), alpha)
    cut_x = _tail_order_statistic(np.sort(x), alpha)
    joint = (y <= cut_y) & (x <= cut_x)
    if not joint.any():
        raise DomainError(
            f"empty joint tail: no observations with y <= {cut_y:.6g} "
            f"and x <= {cut_x:.6g}"
        )
    if joint.sum() < 10:
        warnings.warn(
            f"joint tail has {int(joint.sum())} observations (< 10)",
            SmallTailWarning,
            stacklevel=2,
        )
    return -float(y[joint].mean())


def pearson(y_sample, x_sample) -> float:
    """Pearson correlation coefficient of two paired samples."""
    y = _as_sample(y_sample)
    x = _as_sample(x_sample)
    if y.size != x.size:
        raise ValidationError("paired samples must have equal length")
    if y.size < 2:
        raise ValidationError("need at least two observations")
    if np.std(y) == 0 or np.std(x) == 0:
        raise DomainError("constant sample has no defined correlation")
    return float(np.corrcoef(x, y)[0, 1])


@dataclass(frozen=True)
class RiskReport:
    """Per-country tail-risk battery against the global series.

    Conditional cells that are undefined on the sample (empty joint
    tail on a short panel) hold NaN; a warning is emitted when that
    happens.
    """

    sample_kind: str                     # "historical" or "dynamic"
    sample_size: int
    countries: tuple[str, ...]
    rows: dict[str, dict[str, float]] = field(repr=False)

    COLUMNS = (
        "pearson_r",
        "var95", "var99",
        "cvar95", "cvar99",
        "coes95", "coes99",
        "coetl95", "coetl99",
    )


def risk_report(
    returns: np.ndarray,
    labels: tuple[str, ...],
    global_label: str,
    sample_kind: str,
) -> RiskReport:
    """Compute the full measure battery for each country series.

    ``returns`` has one row per series label. VaR and expected shortfall
    are computed on the country's own returns; the conditional measures
    take the global series as the affected variable and the country as
    the conditioning one.
    """
    if returns.shape[0] != len(labels):
        raise ValidationError("returns row count does not match labels")
    if global_label not in labels:
        raise ValidationError(f"global series {global_label!r} not in labels")
    g = returns[labels.index(global_label)]

    def guarded(func, *args):
        # Short anticorrelated samples can have genuinely empty joint
        # tails; the report records the cell as undefined instead of dying.
        try:
            return func(*args)
        except DomainError as exc:
            warnings.warn(f"{func.__name__} undefined: {exc}", SmallTailWarning,
                          stacklevel=3)
            return float("nan")

    rows = {}
    for li, label in enumerate(labels):
        if label == global_label:
            continue
        x = returns[li]
        rows[label] = {
            "pearson_r": pearson(x, g),
            "var95": var(x, 0.05),
            "var99": var(x, 0.01),
            "cvar95": cvar(x, 0.05),
            "cvar99": cvar(x, 0.01),
            "coes95": guarded(coes, g, x, 0.05),
            "coes99": guarded(coes, g, x, 0.01),
            "coetl95": guarded(coetl, g, x, 0.05),
            "coetl99": guarded(coetl, g, x, 0.01),
        }
    countries = tuple(l for l in labels if l != global_label)
    return RiskReport(
        sample_kind=sample_kind,
        sample_size=returns.shape[1],
        countries=countries,
        rows=rows,
    )
