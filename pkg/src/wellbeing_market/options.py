"""Risk-neutral option pricing on an index via NIG-GARCH Monte Carlo.

The pricing model treats the per-period log return as

    R_t = r' + m_t + sqrt(a_t) * X_t,      m_t = lambda0 sqrt(a_t) - a_t / 2
    a_{t+1} = alpha0 + alpha1 * eps_t^2 + beta1 * a_t,   eps_t = sqrt(a_t) X_t

with iid NIG innovations X_t. Exponential tilting (Esscher transform)
of the conditional return law produces the equivalent martingale
measure: the tilt parameter theta_t solves

    log MGF(1 + theta_t) - log MGF(theta_t) = r'

for the conditional MGF, which for the NIG family amounts to shifting
the innovation skew to beta + sqrt(a_t) * theta_t while every other
parameter stays put. Discounted index levels are then exact
martingales, so Monte Carlo averages of discounted payoffs price
European calls and puts; implied volatilities come from inverting the
constant-volatility lognormal formula by bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .errors import DomainError, NumericalError, ValidationError
from .nig import NigParams, nig_logpdf
from .seeding import generator
from .tsmodel import FittedVolModel, one_step_variance


@dataclass(frozen=True)
class OptionModelParams:
    """Everything the risk-neutral simulation needs.

    ``garch`` carries the variance recursion and its terminal state
    (``z_last`` holds the last shock, ``sigma2_last`` the last
    conditional variance); ``nig`` is the innovation law under the
    physical measure; ``spot`` is the current index level.
    """

    garch: FittedVolModel
    nig: NigParams
    risk_free: float = 0.02
    lambda0: float = 0.0
    spot: float = 1.0

    def __post_init__(self):
        if self.garch.family != "GARCH11":
            raise ValidationError("pricing recursion must be GARCH11")
        vol = self.garch.vol_params
        if not vol["alpha0"] > 0 or vol["alpha1"] < 0 or vol["beta1"] < 0:
            raise DomainError("variance parameters violate positivity")
        if vol["alpha1"] + vol["beta1"] >= 1:
            raise DomainError("variance recursion is not covariance stationary")
        if not self.spot > 0:
            raise DomainError("spot must be positive")


@dataclass(frozen=True)
class OptionQuote:
    kind: str                 # "call" or "put"
    strike: float
    maturity: int
    price: float
    mc_standard_error: float
    path_count: int


@dataclass(frozen=True)
class VolSurface:
    maturities: tuple[int, ...]
    moneyness: tuple[float, ...]
    prices: np.ndarray = field(repr=False)        # T x M
    implied_vols: np.ndarray = field(repr=False)  # T x M, NaN where invalid
    valid: np.ndarray = field(repr=False)         # T x M bool


def _stable_sqrt_diff(alpha_c, beta_c, theta):
    """s(theta) - s(1 + theta) for s(u) = sqrt(alpha_c^2 - (beta_c + u)^2),
    written to avoid cancellation when alpha_c is large."""
    s_lo = np.sqrt(alpha_c**2 - (beta_c + theta) ** 2)
    s_hi = np.sqrt(alpha_c**2 - (beta_c + theta + 1.0) ** 2)
    return (2.0 * (beta_c + theta) + 1.0) / (s_lo + s_hi)


def _martingale_gap(theta, p: NigParams, a_t, r_prime, lambda0):
    """log MGF(1 + theta) - log MGF(theta) - r' for the conditional law."""
    sqrt_a = np.sqrt(a_t)
    alpha_c = p.alpha / sqrt_a
    beta_c = p.beta / sqrt_a
    delta_c = p.delta * sqrt_a
    m_t = lambda0 * sqrt_a - 0.5 * a_t
    mu_c = r_prime + m_t + p.mu * sqrt_a
    return mu_c + delta_c * _stable_sqrt_diff(alpha_c, beta_c, theta) - r_prime


def esscher_theta(p: NigParams, a_t: float, r_prime: float, lambda0: float = 0.0) -> float:
    """Solve the martingale condition for the Esscher tilt parameter.

    The conditional MGF exists for arguments u with |beta/sqrt(a) + u| <
    alpha/sqrt(a); both theta and theta + 1 must stay inside, which
    brackets the root. The gap function is strictly increasing, so a
    sign check at the bracket ends decides existence.
    """
    theta = _esscher_theta_vec(p, np.atleast_1d(float(a_t)), r_prime, lambda0)
    return float(theta[0])


def _esscher_theta_vec(p, a_t, r_prime, lambda0):
    a_t = np.asarray(a_t, dtype=float)
    sqrt_a = np.sqrt(a_t)
    alpha_c = p.alpha / sqrt_a
    beta_c = p.beta / sqrt_a
    width = 2.0 * alpha_c - 1.0
    if np.any(width <= 0):
        raise NumericalError(
            "no valid Esscher bracket: conditional tail parameter "
            "alpha/sqrt(a) must exceed 1/2"
        )
    margin = 1e-9 * np.maximum(width, 1.0)
    lo = -(alpha_c + beta_c) + margin
    hi = alpha_c - beta_c - 1.0 - margin

    g_lo = _martingale_gap(lo, p, a_t, r_prime, lambda0)
    g_hi = _martingale_gap(hi, p, a_t, r_prime, lambda0)
    bad = (g_lo > 0) | (g_hi < 0)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise NumericalError(
            "martingale condition has no root in the scanned interval "
            f"({lo.flat[i]:.6g}, {hi.flat[i]:.6g}); no risk-neutral measure"
        )

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        g_mid = _martingale_gap(mid, p, a_t, r_prime, lambda0)
        below = g_mid < 0
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.max(np.abs(g_mid)) < 1e-13 or np.max(hi - lo) < 1e-15:
            break
    theta = 0.5 * (lo + hi)
    resid = _martingale_gap(theta, p, a_t, r_prime, lambda0)
    if np.max(np.abs(resid)) > 1e-10:
        raise NumericalError(
            f"Esscher root residual {np.max(np.abs(resid)):.3g} exceeds 1e-10"
        )
    return theta


def _draw_tilted(rng, p: NigParams, beta_q: np.ndarray) -> np.ndarray:
    """One innovation per path from NIG(alpha, beta_q, delta, mu)."""
    gamma_q = np.sqrt(p.alpha**2 - beta_q**2)
    v = rng.wald(p.delta / gamma_q, p.delta**2)
    z = rng.standard_normal(beta_q.shape[0])
    return p.mu + beta_q * v + np.sqrt(v) * z


def simulate_risk_neutral(
    params: OptionModelParams,
    maturity: int,
    n_paths: int,
    seed,
    horizons: tuple[int, ...] | None = None,
) -> np.ndarray:
    """Simulate index levels under the risk-neutral measure.

    Per step and path: solve the tilt parameter for the current
    conditional variance, draw the tilted NIG innovation, convert it to
    a return, update the variance recursion and compound the level.
    Returns the terminal levels, or an (len(horizons), n_paths) array of
    snapshots when ``horizons`` is given (horizons must be increasing
    and end at ``maturity``). Deterministic for a fixed seed.
    """
    if maturity < 1:
        raise ValidationError("maturity must be at least 1 period")
    if n_paths < 1:
        raise ValidationError("n_paths must be positive")
    if horizons is not None:
        horizons = tuple(horizons)
        if list(horizons) != sorted(set(horizons)) or horizons[-1] != maturity:
            raise ValidationError("horizons must be increasing and end at maturity")

    rng = generator(seed) if not isinstance(seed, np.random.Generator) else seed
    vol = params.garch.vol_params
    p = params.nig
    r_prime = params.risk_free

    level = np.full(n_paths, params.spot, dtype=float)
    a_t = np.full(n_paths, one_step_variance(params.garch), dtype=float)
    snaps = []
    for t in range(1, maturity + 1):
        try:
            theta = _esscher_theta_vec(p, a_t, r_prime, params.lambda0)
        except NumericalError as exc:
            raise NumericalError(f"step {t}: {exc}") from exc
        sqrt_a = np.sqrt(a_t)
        beta_q = p.beta + sqrt_a * theta
        x = _draw_tilted(rng, p, beta_q)
        m_t = params.lambda0 * sqrt_a - 0.5 * a_t
        returns = r_prime + m_t + sqrt_a * x
        level = level * np.exp(returns)
        eps = sqrt_a * x
        a_t = vol["alpha0"] + vol["alpha1"] * eps**2 + vol["beta1"] * a_t
        if horizons is not None and t in horizons:
            snaps.append(level.copy())
    if horizons is not None:
        return np.vstack(snaps)
    return level


def price_option(
    params: OptionModelParams,
    kind: str,
    strike: float,
    maturity: int,
    n_paths: int = 10_000,
    seed=0,
    terminal: np.ndarray | None = None,
) -> OptionQuote:
    """Monte Carlo price of a European option.

    ``terminal`` lets callers reuse one simulated terminal vector for
    many strikes (prices on shared paths are exactly comparable across
    strikes). Otherwise ``n_paths`` fresh paths are simulated.
    """
    kind = kind.lower()
    if kind not in ("call", "put"):
        raise ValidationError(f"kind must be 'call' or 'put', got {kind!r}")
    if strike < 0:
        raise ValidationError("strike must be non-negative")
    if maturity < 1:
        raise ValidationError("maturity must be at least 1 period")
    if terminal is None:
        if n_paths < 1000:
            raise ValidationError("need at least 1000 paths for a quote")
        terminal = simulate_risk_neutral(params, maturity, n_paths, seed)
    payoff = (
        np.maximum(terminal - strike, 0.0)
        if kind == "call"
        else np.maximum(strike - terminal, 0.0)
    )
    disc = math.exp(-params.risk_free * maturity)
    n = payoff.size
    return OptionQuote(
        kind=kind,
        strike=float(strike),
        maturity=int(maturity),
        price=float(disc * payoff.mean()),
        mc_standard_error=float(disc * payoff.std(ddof=1) / math.sqrt(n)),
        path_count=n,
    )


def lognormal_price(
    spot: float, strike: float, maturity: float, r_prime: float, sigma: float,
    kind: str = "call",
) -> float:
    """Constant-volatility lognormal (Black-Scholes) benchmark price."""
    if strike <= 0:
        return spot if kind == "call" else 0.0
    st = sigma * math.sqrt(maturity)
    d1 = (math.log(spot / strike) + (r_prime + 0.5 * sigma**2) * maturity) / st
    d2 = d1 - st
    disc = math.exp(-r_prime * maturity)
    if kind == "call":
        return spot * norm.cdf(d1) - strike * disc * norm.cdf(d2)
    return strike * disc * norm.cdf(-d2) - spot * norm.cdf(-d1)


def implied_vol(
    price: float, spot: float, strike: float, maturity: float, r_prime: float,
    kind: str = "call",
) -> float:
    """Invert the lognormal formula by bisection on sigma in [1e-6, 5].

    Returns NaN when the quote violates static no-arbitrage bounds.
    The call price is strictly increasing in sigma, so the root is
    unique whenever the bounds hold.
    """
    disc = math.exp(-r_prime * maturity)
    if kind == "call":
        lower, upper = max(spot - strike * disc, 0.0), spot
    else:
        lower, upper = max(strike * disc - spot, 0.0), strike * disc
    if not (lower - 1e-12 <= price <= upper + 1e-12):
        return float("nan")

    lo, hi = 1e-6, 5.0
    f_lo = lognormal_price(spot, strike, maturity, r_prime, lo, kind) - price
    f_hi = lognormal_price(spot, strike, maturity, r_prime, hi, kind) - price
    if f_lo > 0 or f_hi < 0:
        return float("nan")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = lognormal_price(spot, strike, maturity, r_prime, mid, kind) - price
        if abs(f_mid) < 1e-8 and hi - lo < 1e-9:
            return mid
        if f_mid < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def implied_vol_surface(
    quotes: list[OptionQuote], spot: float, r_prime: float
) -> VolSurface:
    """Arrange call quotes on a (maturity, moneyness) grid and invert.

    Quotes outside the static no-arbitrage bounds get ``valid=False``
    and a NaN implied volatility; the surface is still returned.
    """
    maturities = tuple(sorted({q.maturity for q in quotes}))
    mon_values = tuple(sorted({round(spot / q.strike, 10) for q in quotes}))
    t_pos = {t: i for i, t in enumerate(maturities)}
    m_pos = {m: j for j, m in enumerate(mon_values)}

    shape = (len(maturities), len(mon_values))
    prices = np.full(shape, np.nan)
    vols = np.full(shape, np.nan)
    valid = np.zeros(shape, dtype=bool)
    for q in quotes:
        i = t_pos[q.maturity]
        j = m_pos[round(spot / q.strike, 10)]
        prices[i, j] = q.price
        sigma = implied_vol(q.price, spot, q.strike, q.maturity, r_prime, q.kind)
        vols[i, j] = sigma
        valid[i, j] = not math.isnan(sigma)
    return VolSurface(
        maturities=maturities,
        moneyness=mon_values,
        prices=prices,
        implied_vols=vols,
        valid=valid,
    )


def build_call_surface(
    params: OptionModelParams,
    maturities: tuple[int, ...] = tuple(range(1, 17)),
    moneyness: tuple[float, ...] = (0.8, 0.9, 1.0, 1.1, 1.2),
    n_paths: int = 10_000,
    seed=0,
) -> tuple[list[OptionQuote], VolSurface]:
    """Price a call grid on one shared path set and invert the surface."""
    maturities = tuple(sorted(maturities))
    snaps = simulate_risk_neutral(
        params, maturities[-1], n_paths, seed, horizons=maturities
    )
    quotes = []
    for i, t in enumerate(maturities):
        for m in moneyness:
            strike = params.spot / m
            quotes.append(
                price_option(params, "call", strike, t, terminal=snaps[i])
            )
    return quotes, implied_vol_surface(quotes, params.spot, params.risk_free)


def fit_nig_garch(
    series,
    r_prime: float,
    lambda0: float = 0.0,
    gaussian_init: FittedVolModel | None = None,
) -> tuple[FittedVolModel, NigParams]:
    """Fit the pricing recursion by NIG maximum likelihood.

    Initializes the variance parameters from a Gaussian GARCH fit and
    the innovation law from a moment fit of its standardized residuals,
    then maximizes the exact NIG-GARCH likelihood jointly. Returns the
    variance model (carrying its terminal filter state) and the fitted
    innovation parameters.
    """
    from scipy.optimize import minimize

    from . import tsmodel
    from .nig import _moment_start, _pack, _unpack

    series = np.asarray(series, dtype=float).ravel()
    if series.size < 10:
        raise ValidationError("series too short to fit the pricing model")
    n = series.size
    a_init = float(np.var(series))

    def filter_likelihood(vol, p):
        a = a_init
        loglik = 0.0
        eps_prev = 0.0
        a_path = np.empty(n)
        x_path = np.empty(n)
        for t in range(n):
            a = vol["alpha0"] + vol["alpha1"] * eps_prev**2 + vol["beta1"] * a
            if not np.isfinite(a) or a <= 0:
                return None
            sqrt_a = math.sqrt(a)
            m_t = lambda0 * sqrt_a - 0.5 * a
            x = (series[t] - r_prime - m_t) / sqrt_a
            a_path[t] = a
            x_path[t] = x
            eps_prev = series[t] - r_prime - m_t
        loglik = float(np.sum(nig_logpdf(x_path, p)) - 0.5 * np.sum(np.log(a_path)))
        return loglik, a_path, x_path, eps_prev

    if gaussian_init is None:
        gaussian_init = tsmodel.fit_mean_vol(series, "GARCH11")
    p0 = _moment_start(gaussian_init.residuals)

    def unpack_all(theta):
        persistence = 1.0 / (1.0 + np.exp(-theta[1])) * (1 - 1e-7)
        share = 1.0 / (1.0 + np.exp(-theta[2]))
        vol = {
            "alpha0": float(np.exp(theta[0])),
            "alpha1": float(persistence * share),
            "beta1": float(persistence * (1 - share)),
        }
        return vol, _unpack(theta[3:])

    g_vol = gaussian_init.vol_params
    pers = min(g_vol["alpha1"] + g_vol["beta1"], 1 - 1e-6)
    share = g_vol["alpha1"] / pers if pers > 0 else 0.5
    x0 = np.concatenate(
        [
            [
                np.log(max(g_vol["alpha0"], 1e-12)),
                np.log(pers / (1 - pers)),
                np.log(np.clip(share, 1e-9, 1 - 1e-9) / (1 - np.clip(share, 1e-9, 1 - 1e-9))),
            ],
            _pack(p0),
        ]
    )

    def nll(theta):
        if np.max(np.abs(theta)) > 40:
            return 1e12
        try:
            vol, p = unpack_all(theta)
            out = filter_likelihood(vol, p)
        except (DomainError, FloatingPointError, OverflowError):
            return 1e12
        if out is None or not np.isfinite(out[0]):
            return 1e12
        return -out[0]

    with np.errstate(all="ignore"):
        res = minimize(nll, x0, method="L-BFGS-B")
        best = res.x if res.fun < nll(x0) else x0
    vol, p = unpack_all(best)
    out = filter_likelihood(vol, p)
    if out is None:
        raise NumericalError("NIG-GARCH likelihood is degenerate at the optimum")
    loglik, a_path, x_path, eps_last = out
    model = FittedVolModel(
        family="GARCH11",
        mean_params=(0.0, 0.0),
        vol_params=vol,
        loglik=loglik,
        aic=(-2 * loglik + 2 * 7) / n,
        bic=(-2 * loglik + 7 * np.log(n)) / n,
        residuals=x_path,
        cond_var_path=a_path,
        z_last=float(eps_last),
        sigma2_last=float(a_path[-1]),
        sigma2_init=a_init,
        n_obs=n,
    )
    return model, p
