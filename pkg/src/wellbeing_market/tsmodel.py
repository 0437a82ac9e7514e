"""Mean + volatility models for the index log returns.

The mean equation is a constant plus a one-lag moving average of the
volatility-scaled shocks:

    R_t = phi0 + z_t + theta1 * z_{t-1},    z_t = sigma_t * eps_t

with conditional variance from one of three families:

    ARCH1     sigma_t^2 = alpha0 + alpha1 * z_{t-1}^2
    GARCH11   sigma_t^2 = alpha0 + alpha1 * z_{t-1}^2 + beta1 * sigma_{t-1}^2
    EGARCH11  ln sigma_t^2 = alpha0 + alpha1 (|eps_{t-1}| - E|eps|)
                             + leverage * eps_{t-1} + beta1 * ln sigma_{t-1}^2

Estimation is Gaussian maximum likelihood, quasi-Newton on transformed
(log / logistic) parameters so every iterate satisfies the stationarity
constraints, multi-started from five deterministic initial points.
Information criteria are reported per observation:
AIC = (-2 loglik + 2p) / n and BIC = (-2 loglik + p ln n) / n.

Filtering (series -> standardized residuals) and simulation (residuals
-> series) are exact inverses given the same initial state, which is
what lets scenario generation replay fitted dynamics forward.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize
from scipy.signal import lfilter

from .errors import DomainError, FitError, ValidationError

FAMILIES = ("ARCH1", "GARCH11", "EGARCH11")
_N_PARAMS = {"ARCH1": 4, "GARCH11": 5, "EGARCH11": 6}
_ABS_EPS_MEAN = np.sqrt(2.0 / np.pi)  # E|eps| for standard normal eps


@dataclass(frozen=True)
class FittedVolModel:
    family: str
    mean_params: tuple[float, float]          # (phi0, theta1)
    vol_params: dict[str, float]
    loglik: float
    aic: float
    bic: float
    residuals: np.ndarray = field(repr=False)       # standardized innovations
    cond_var_path: np.ndarray = field(repr=False)   # sigma_t^2 per observation
    z_last: float = 0.0
    sigma2_last: float = 1.0
    sigma2_init: float = 1.0
    n_obs: int = 0
    comparison: tuple = field(default=(), repr=False, compare=False)

    @property
    def phi0(self) -> float:
        return self.mean_params[0]

    @property
    def theta1(self) -> float:
        return self.mean_params[1]


def _next_variance(family: str, vol: dict, z: float, sigma2: float) -> float:
    if family == "ARCH1":
        return vol["alpha0"] + vol["alpha1"] * z * z
    if family == "GARCH11":
        return vol["alpha0"] + vol["alpha1"] * z * z + vol["beta1"] * sigma2
    if family == "EGARCH11":
        eps = z / np.sqrt(sigma2)
        log_s2 = (
            vol["alpha0"]
            + vol["alpha1"] * (abs(eps) - _ABS_EPS_MEAN)
            + vol["leverage"] * eps
            + vol["beta1"] * np.log(sigma2)
        )
        return float(np.exp(np.clip(log_s2, -100.0, 100.0)))
    raise ValidationError(f"unknown family {family!r}")


def _filter(series, family, phi0, theta1, vol, sigma2_init):
    """Run the filter; returns (z, sigma2, loglik)."""
    n = series.size
    # z_t = (R_t - phi0) - theta1 z_{t-1} is linear: one IIR pass.
    z = lfilter([1.0], [1.0, theta1], series - phi0)

    if family == "ARCH1":
        z_prev_sq = np.concatenate(([0.0], z[:-1] ** 2))
        sigma2 = vol["alpha0"] + vol["alpha1"] * z_prev_sq
    elif family == "GARCH11":
        z_prev_sq = np.concatenate(([0.0], z[:-1] ** 2))
        drive = vol["alpha0"] + vol["alpha1"] * z_prev_sq
        sigma2, _ = lfilter(
            [1.0], [1.0, -vol["beta1"]], drive, zi=[vol["beta1"] * sigma2_init]
        )
    else:  # EGARCH11
        sigma2 = np.empty(n)
        s2 = sigma2_init
        z_prev = 0.0
        for t in range(n):
            s2 = _next_variance(family, vol, z_prev, s2)
            sigma2[t] = s2
            z_prev = z[t]

    if np.any(sigma2 <= 0) or not np.all(np.isfinite(sigma2)):
        return z, sigma2, -np.inf
    loglik = -0.5 * np.sum(np.log(2 * np.pi) + np.log(sigma2) + z**2 / sigma2)
    return z, sigma2, float(loglik)


# --- parameter transforms: optimizer space <-> model space ---------------

def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _to_params(family: str, theta: np.ndarray) -> tuple[float, float, dict]:
    phi0 = theta[0]
    theta1 = float(np.tanh(theta[1]))
    if family == "ARCH1":
        vol = {
            "alpha0": float(np.exp(theta[2])),
            "alpha1": float(_sigmoid(theta[3]) * (1 - 1e-7)),
        }
    elif family == "GARCH11":
        persistence = _sigmoid(theta[3]) * (1 - 1e-7)
        share = _sigmoid(theta[4])
        vol = {
            "alpha0": float(np.exp(theta[2])),
            "alpha1": float(persistence * share),
            "beta1": float(persistence * (1 - share)),
        }
    else:
        # Shock coefficients bounded to a moderate box: unbounded MLE on
        # 30-point series contorts into explosive one-step forecasts.
        vol = {
            "alpha0": float(theta[2]),
            "alpha1": float(2.0 * np.tanh(theta[3])),
            "leverage": float(2.0 * np.tanh(theta[4])),
            "beta1": float(np.tanh(theta[5])),
        }
    return float(phi0), theta1, vol


def _atanh(x):
    return np.arctanh(np.clip(x, -1 + 1e-12, 1 - 1e-12))


def _logit(x):
    x = np.clip(x, 1e-12, 1 - 1e-12)
    return np.log(x / (1 - x))


def _start_vectors(family: str, series: np.ndarray) -> list[np.ndarray]:
    """Five deterministic starting points spanning low/high persistence."""
    m = float(np.mean(series))
    s2 = float(np.var(series))
    starts = []
    if family == "ARCH1":
        grid = [
            (m, 0.0, 0.8 * s2, 0.2),
            (m, 0.0, 0.5 * s2, 0.5),
            (m, -0.3, 0.9 * s2, 0.1),
            (0.0, 0.3, 0.6 * s2, 0.4),
            (m, 0.0, 0.99 * s2, 0.01),
        ]
        for phi0, th1, a0, a1 in grid:
            starts.append(
                np.array([phi0, _atanh(th1), np.log(a0), _logit(a1)])
            )
    elif family == "GARCH11":
        grid = [
            (m, 0.0, 0.10 * s2, 0.10, 0.80),
            (m, 0.0, 0.05 * s2, 0.05, 0.90),
            (m, -0.3, 0.30 * s2, 0.20, 0.50),
            (0.0, 0.3, 0.50 * s2, 0.30, 0.20),
            (m, 0.0, 0.95 * s2, 0.02, 0.02),
        ]
        for phi0, th1, a0, a1, b1 in grid:
            p = a1 + b1
            starts.append(
                np.array([phi0, _atanh(th1), np.log(a0), _logit(p), _logit(a1 / p)])
            )
    else:
        ls2 = np.log(s2)
        grid = [
            (m, 0.0, 0.1 * ls2, 0.10, 0.0, 0.90),
            (m, 0.0, 0.5 * ls2, 0.30, -0.10, 0.50),
            (m, -0.3, ls2, 0.05, 0.05, 0.00),
            (0.0, 0.3, 0.3 * ls2, 0.20, -0.30, 0.70),
            (m, 0.0, 0.05 * ls2, 0.50, 0.0, 0.95),
        ]
        for phi0, th1, a0, a1, g, b1 in grid:
            starts.append(
                np.array(
                    [phi0, _atanh(th1), a0, _atanh(a1 / 2), _atanh(g / 2), _atanh(b1)]
                )
            )
    return starts


def fit_mean_vol(series, family: str) -> FittedVolModel:
    """Joint Gaussian MLE of the mean and volatility equations."""
    if family not in FAMILIES:
        raise ValidationError(f"unknown family {family!r}; pick from {FAMILIES}")
    series = np.asarray(series, dtype=float).ravel()
    if series.size < 10:
        raise ValidationError(f"series too short ({series.size} < 10)")
    if not np.all(np.isfinite(series)):
        raise DomainError("series contains non-finite values")
    # Scale-aware degeneracy check: float accumulation makes the variance
    # of a literally constant series ~1e-34 rather than exactly zero.
    if np.var(series) <= (1e-12 * (abs(np.mean(series)) + 1.0)) ** 2:
        raise DomainError("zero-variance input")

    n = series.size
    sigma2_init = float(np.var(series))

    def nll(theta):
        try:
            phi0, theta1, vol = _to_params(family, theta)
        except FloatingPointError:
            return np.inf
        _, _, ll = _filter(series, family, phi0, theta1, vol, sigma2_init)
        return -ll if np.isfinite(ll) else 1e12

    best = None
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        for x0 in _start_vectors(family, series):
            res = minimize(nll, x0, method="L-BFGS-B")
            if best is None or res.fun < best.fun:
                best = res
    if best is None or not np.isfinite(best.fun) or best.fun >= 1e12:
        grad = np.linalg.norm(best.jac) if best is not None else np.nan
        raise FitError(
            f"{family} estimation did not converge",
            best_params=None if best is None else best.x,
            grad_norm=grad,
        )

    phi0, theta1, vol = _to_params(family, best.x)
    if family == "GARCH11" and vol["alpha1"] + vol["beta1"] > 1 - 1e-4:
        warnings.warn(
            "GARCH persistence at the stationarity boundary; "
            "parameters projected inside the constraint",
            stacklevel=2,
        )
    if family == "ARCH1" and vol["alpha1"] > 1 - 1e-4:
        warnings.warn("ARCH coefficient at the unit boundary", stacklevel=2)

    z, sigma2, ll = _filter(series, family, phi0, theta1, vol, sigma2_init)
    p = _N_PARAMS[family]
    return FittedVolModel(
        family=family,
        mean_params=(phi0, theta1),
        vol_params=vol,
        loglik=ll,
        aic=(-2 * ll + 2 * p) / n,
        bic=(-2 * ll + p * np.log(n)) / n,
        residuals=z / np.sqrt(sigma2),
        cond_var_path=sigma2,
        z_last=float(z[-1]),
        sigma2_last=float(sigma2[-1]),
        sigma2_init=sigma2_init,
        n_obs=n,
    )


def best_fit(fits: list[FittedVolModel]) -> FittedVolModel:
    """Lowest AIC; ties break on BIC, then on family order."""
    order = {f: i for i, f in enumerate(FAMILIES)}
    return min(fits, key=lambda m: (m.aic, m.bic, order[m.family]))


def select_model(series) -> FittedVolModel:
    """Fit all three families and keep the lowest-AIC one.

    Ties break on BIC and then on family order (ARCH1 before GARCH11
    before EGARCH11). The fitted candidates are attached to the winner
    as ``comparison`` for reporting.
    """
    fits: list[FittedVolModel] = []
    errors = []
    for family in FAMILIES:
        try:
            fits.append(fit_mean_vol(series, family))
        except (FitError, DomainError, ValidationError) as exc:
            errors.append(f"{family}: {exc}")
    if not fits:
        raise FitError("all volatility families failed: " + "; ".join(errors))
    return replace(best_fit(fits), comparison=tuple(fits))


def simulate_path(
    model: FittedVolModel,
    innovations,
    init_state: tuple[float, float] | None = None,
) -> np.ndarray:
    """Propagate the fitted recursion through given innovations.

    ``init_state`` is the (z, sigma^2) state preceding the first step;
    it defaults to the pre-sample state the filter used. The same
    innovations always reproduce the same path, and feeding back the
    fitted model's own residuals reproduces the observed series.
    """
    eps = np.asarray(innovations, dtype=float).ravel()
    if not np.all(np.isfinite(eps)):
        raise DomainError("innovations contain non-finite values")
    if init_state is None:
        z_prev, s2_prev = 0.0, model.sigma2_init
    else:
        z_prev, s2_prev = float(init_state[0]), float(init_state[1])
    if s2_prev <= 0:
        raise DomainError(f"initial variance must be positive, got {s2_prev}")

    phi0, theta1 = model.mean_params
    out = np.empty(eps.size)
    for t in range(eps.size):
        s2 = _next_variance(model.family, model.vol_params, z_prev, s2_prev)
        z = np.sqrt(s2) * eps[t]
        out[t] = phi0 + z + theta1 * z_prev
        z_prev, s2_prev = z, s2
    return out


def one_step_variance(model: FittedVolModel) -> float:
    """Conditional variance for the step after the last observation."""
    return _next_variance(
        model.family, model.vol_params, model.z_last, model.sigma2_last
    )
