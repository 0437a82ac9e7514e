"""Normal-inverse Gaussian distributions, univariate and multivariate.

The NIG law is the normal mean-variance mixture whose mixing variable is
inverse Gaussian: V ~ IG with E[V] = delta/gamma_bar and shape delta^2
(gamma_bar = sqrt(alpha^2 - beta^2)), and X | V ~ N(mu + beta V, V).
Density, moments and the exponential-form moment generating function are
closed form; sampling draws the subordinator first and the Gaussian
conditional second.

The multivariate variant shares one subordinator across coordinates
(X | V ~ N(mu + V * Delta beta, V * Delta) with Delta a unit-determinant
structure matrix), which is what couples the coordinates' tails.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import k1e

from .errors import DomainError, FitError, ValidationError


@dataclass(frozen=True)
class NigParams:
    """Univariate NIG parameters (shape index fixed at -1/2).

    ``alpha`` controls tail heaviness, ``beta`` asymmetry (|beta| < alpha),
    ``delta`` scale and ``mu`` location.
    """

    alpha: float
    beta: float
    delta: float
    mu: float

    def __post_init__(self):
        if not self.delta > 0:
            raise DomainError(f"delta must be positive, got {self.delta}")
        if not self.alpha > abs(self.beta):
            raise DomainError(
                f"need alpha > |beta|, got alpha={self.alpha}, beta={self.beta}"
            )

    @property
    def gamma_bar(self) -> float:
        return float(np.sqrt(self.alpha**2 - self.beta**2))

    @property
    def mean(self) -> float:
        return self.mu + self.delta * self.beta / self.gamma_bar

    @property
    def variance(self) -> float:
        return self.delta * self.alpha**2 / self.gamma_bar**3

    @property
    def skewness(self) -> float:
        return 3.0 * self.beta / (self.alpha * np.sqrt(self.delta * self.gamma_bar))

    @property
    def excess_kurtosis(self) -> float:
        return 3.0 * (1.0 + 4.0 * (self.beta / self.alpha) ** 2) / (
            self.delta * self.gamma_bar
        )


def nig_logpdf(x, p: NigParams) -> np.ndarray:
    """Log density, stable far into the tails via the scaled Bessel K1."""
    x = np.asarray(x, dtype=float)
    dx = x - p.mu
    g = np.sqrt(p.delta**2 + dx**2)
    ag = p.alpha * g
    # K1(z) = k1e(z) * exp(-z) keeps the tail factor explicit.
    return (
        np.log(p.alpha * p.delta / np.pi)
        - np.log(g)
        + np.log(k1e(ag))
        - ag
        + p.delta * p.gamma_bar
        + p.beta * dx
    )


def nig_pdf(x, p: NigParams) -> np.ndarray:
    """Density of the NIG law at ``x``."""
    return np.exp(nig_logpdf(x, p))


def nig_mgf(u, p: NigParams) -> float:
    """Moment generating function E[exp(uX)].

    Defined only while |beta + u| < alpha; outside that strip the
    exponential moment is infinite and a ``DomainError`` is raised (the
    same boundary brackets the Esscher-parameter search).
    """
    u = float(u)
    if abs(p.beta + u) >= p.alpha:
        raise DomainError(
            f"u={u} outside MGF domain |beta + u| < alpha "
            f"(beta={p.beta}, alpha={p.alpha})"
        )
    inner = np.sqrt(p.alpha**2 - (p.beta + u) ** 2)
    return float(np.exp(p.mu * u + p.delta * (p.gamma_bar - inner)))


def _resolve_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _ig_draws(rng, p: NigParams, n: int) -> np.ndarray:
    # Inverse Gaussian subordinator with mean delta/gamma_bar, shape delta^2.
    return rng.wald(p.delta / p.gamma_bar, p.delta**2, size=n)


def nig_sample(p: NigParams, n: int, seed) -> np.ndarray:
    """Draw ``n`` variates; identical seeds give identical output."""
    if n < 1:
        raise ValidationError("n must be at least 1")
    rng = _resolve_rng(seed)
    v = _ig_draws(rng, p, n)
    z = rng.standard_normal(n)
    return p.mu + p.beta * v + np.sqrt(v) * z


def _moment_start(data: np.ndarray) -> NigParams:
    """Method-of-moments parameters used to initialize the MLE."""
    m = float(np.mean(data))
    s2 = float(np.var(data))
    sd = np.sqrt(s2)
    centered = (data - m) / sd
    skew = float(np.mean(centered**3))
    exkurt = float(np.mean(centered**4)) - 3.0

    if exkurt <= 0:
        warnings.warn(
            "sample excess kurtosis is non-positive; starting from a "
            "near-Gaussian configuration",
            stacklevel=3,
        )
        prod = 30.0  # delta * gamma_bar; excess kurtosis 0.1
        gam = np.sqrt(prod / s2)
        return NigParams(alpha=gam, beta=0.0, delta=prod / gam, mu=m)

    # Feasibility of the moment map needs exkurt > (5/3) skew^2.
    min_kurt = 5.0 * skew**2 / 3.0
    if exkurt <= min_kurt:
        exkurt = 1.05 * min_kurt + 1e-6

    if abs(skew) < 1e-12:
        prod = 3.0 / exkurt
        r2 = 0.0
    else:
        r2 = skew**2 / (3.0 * exkurt - 4.0 * skew**2)
        prod = 9.0 * r2 / skew**2
    gam = np.sqrt(prod / (s2 * (1.0 - r2)))
    delta = prod / gam
    alpha = gam / np.sqrt(1.0 - r2)
    beta = np.sign(skew) * np.sqrt(r2) * alpha
    mu = m - delta * beta / gam
    return NigParams(alpha=alpha, beta=beta, delta=delta, mu=mu)


def _pack(p: NigParams) -> np.ndarray:
    # Unconstrained coordinates: (mu, log delta, beta, log gamma_bar).
    return np.array([p.mu, np.log(p.delta), p.beta, np.log(p.gamma_bar)])


def _unpack(theta) -> NigParams:
    mu, logdelta, beta, logg = theta
    gam = np.exp(logg)
    return NigParams(
        alpha=float(np.hypot(beta, gam)),
        beta=float(beta),
        delta=float(np.exp(logdelta)),
        mu=float(mu),
    )


def nig_fit(data) -> NigParams:
    """Fit by maximum likelihood from a method-of-moments start.

    The optimizer works in unconstrained coordinates (location, log
    scale, skew, log of sqrt(alpha^2 - beta^2)) so every iterate is a
    valid parameter set. The returned fit never has lower log-likelihood
    than the moment start.
    """
    data = np.asarray(data, dtype=float).ravel()
    if data.size < 20:
        raise ValidationError(f"need at least 20 observations, got {data.size}")
    if np.var(data) == 0:
        raise DomainError("zero-variance sample")

    start = _moment_start(data)

    def nll(theta):
        try:
            q = _unpack(theta)
        except (DomainError, FloatingPointError):
            return np.inf
        val = -float(np.sum(nig_logpdf(data, q)))
        return val if np.isfinite(val) else np.inf

    with np.errstate(all="ignore"):
        res = minimize(nll, _pack(start), method="L-BFGS-B")
        start_nll = nll(_pack(start))
    if res.fun <= start_nll and np.isfinite(res.fun):
        return _unpack(res.x)
    return start


@dataclass(frozen=True)
class MvNigParams:
    """Multivariate NIG with one shared subordinator.

    ``alpha`` and ``delta`` are common mixing parameters, ``beta`` and
    ``mu`` are length-``dimension`` vectors and ``structure`` is a
    symmetric positive-definite matrix with unit determinant.
    """

    dimension: int
    alpha: float
    delta: float
    beta: np.ndarray
    mu: np.ndarray
    structure: np.ndarray

    def __post_init__(self):
        d = self.dimension
        if d < 2:
            raise DomainError("multivariate NIG needs dimension >= 2")
        if self.beta.shape != (d,) or self.mu.shape != (d,):
            raise ValidationError("beta and mu must be length-d vectors")
        if self.structure.shape != (d, d):
            raise ValidationError("structure matrix must be d x d")
        if not np.allclose(self.structure, self.structure.T, atol=1e-10):
            raise DomainError("structure matrix must be symmetric")
        det = np.linalg.det(self.structure)
        if not np.isclose(det, 1.0, rtol=1e-6):
            raise DomainError(f"structure matrix determinant must be 1, got {det}")
        if not self.delta > 0:
            raise DomainError("delta must be positive")
        if self.alpha**2 <= float(self.beta @ self.structure @ self.beta):
            raise DomainError("need alpha^2 > beta' Delta beta")

    @property
    def gamma_bar(self) -> float:
        return float(
            np.sqrt(self.alpha**2 - self.beta @ self.structure @ self.beta)
        )

    def marginal(self, i: int) -> NigParams:
        """Exact univariate law of coordinate ``i``."""
        dii = float(self.structure[i, i])
        b_i = float((self.structure @ self.beta)[i])
        beta_m = b_i / dii
        gam_m = self.gamma_bar / np.sqrt(dii)
        return NigParams(
            alpha=float(np.hypot(gam_m, beta_m)),
            beta=beta_m,
            delta=self.delta * np.sqrt(dii),
            mu=float(self.mu[i]),
        )


def mvnig_sample(p: MvNigParams, n: int, seed) -> np.ndarray:
    """Draw an ``n x d`` matrix; one subordinator draw per row.

    The shared subordinator is what produces joint tail events across
    coordinates even when the Gaussian part is uncorrelated.
    """
    if n < 1:
        raise ValidationError("n must be at least 1")
    rng = _resolve_rng(seed)
    v = rng.wald(p.delta / p.gamma_bar, p.delta**2, size=n)
    z = rng.standard_normal((n, p.dimension))
    chol = np.linalg.cholesky(p.structure)
    drift = p.structure @ p.beta
    return p.mu + v[:, None] * drift + np.sqrt(v)[:, None] * (z @ chol.T)


def mvnig_fit(data) -> MvNigParams:
    """Two-stage fit: structure from the sample covariance, common mixing
    law reconciled from the univariate marginal fits.

    The sample covariance is rescaled to unit determinant to give the
    structure matrix. Each column is then fit as univariate NIG and the
    implied per-coordinate scale/tail parameters are averaged back into
    the shared (alpha, delta) pair; the skew vector is recovered by
    inverting the marginal-projection map.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise ValidationError("data must be an n x d matrix")
    n, d = data.shape
    if d < 2:
        raise ValidationError("need at least two coordinates")
    if n <= d:
        raise ValidationError(f"need more observations than dimensions ({n} <= {d})")

    cov = np.cov(data, rowvar=False)
    sign, logdet = np.linalg.slogdet(cov)
    if sign <= 0 or not np.isfinite(logdet):
        corr = np.corrcoef(data, rowvar=False)
        np.fill_diagonal(corr, 0.0)
        i, j = np.unravel_index(np.argmax(np.abs(corr)), corr.shape)
        raise DomainError(
            f"singular sample covariance; coordinates {i} and {j} are "
            f"collinear (|corr| = {abs(corr[i, j]):.6f})"
        )
    structure = cov / np.exp(logdet / d)

    marginals = [nig_fit(data[:, i]) for i in range(d)]
    dii = np.diag(structure)

    # Common mixing law: the scale-free tail product delta*gamma_bar is
    # invariant under the marginal projection, so take a robust median
    # across coordinates; the variance level delta/gamma_bar is then set
    # by matching the average structure-normalized sample variance.
    prod = float(np.median([m.delta * m.gamma_bar for m in marginals]))
    var_level = float(np.mean(np.var(data, axis=0, ddof=1) / dii))
    delta = float(np.sqrt(prod * var_level))
    gam = float(np.sqrt(prod / var_level))

    beta_marg = np.array([m.beta for m in marginals])
    beta = np.linalg.solve(structure, beta_marg * dii)
    quad = float(beta @ structure @ beta)
    if quad >= (0.9 * gam) ** 2:
        beta *= 0.9 * gam / np.sqrt(quad)
        quad = float(beta @ structure @ beta)
    mu = np.array([m.mu for m in marginals])

    alpha = float(np.sqrt(gam**2 + quad))
    return MvNigParams(
        dimension=d, alpha=alpha, delta=delta, beta=beta, mu=mu, structure=structure
    )
