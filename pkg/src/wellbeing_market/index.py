"""Construction of dollar wellbeing indices and their return series.

Per country and year, each indicator is normalized to its cross-country
share, the non-GDP shares are averaged into a unitless wellbeing index
in (0, 1), and that index is monetized by GDP per capita. The global
index is the cross-country mean. An exponential transform maps the
pooled dollar values onto (0, 1] so the series behave like asset prices
with well-defined log returns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError
from .ingest import IndicatorPanel

GLOBAL_LABEL = "global"


@dataclass(frozen=True)
class IndexSeries:
    """Dollar wellbeing indices, transformed asset values and log returns.

    ``asset_values`` and ``log_returns`` stack the country rows first and
    the global series last.
    """

    countries: tuple[str, ...]
    years: tuple[int, ...]
    per_country_dwi: np.ndarray          # L x T, US$ per capita
    global_dwi: np.ndarray               # T
    transform_a: float
    transform_b: float
    eps_low: float
    asset_values: np.ndarray             # (L+1) x T, in (0, 1]
    log_returns: np.ndarray              # (L+1) x (T-1)

    @property
    def series_labels(self) -> tuple[str, ...]:
        return self.countries + (GLOBAL_LABEL,)


def normalize_indicators(panel: IndicatorPanel) -> np.ndarray:
    """Cross-country share of each indicator, per year.

    Returns an array with the panel's shape where, for every indicator
    and year, the country values are divided by their sum over countries
    (so each cross-country slice sums to 1).
    """
    values = panel.values
    if np.isnan(values).any():
        raise DomainError("panel contains missing values; impute first")
    if not (values > 0).all():
        raise DomainError("panel values must be strictly positive; transform first")
    col_sum = values.sum(axis=1, keepdims=True)
    return values / col_sum


def wellbeing_index(
    fn: np.ndarray, indicators: tuple[str, ...], gdp: str = "gdp"
) -> np.ndarray:
    """Average the normalized non-GDP indicators into a (0, 1) index.

    ``fn`` is the normalized panel from :func:`normalize_indicators`;
    ``gdp`` names the indicator excluded from the average.
    """
    if len(indicators) < 2:
        raise ValidationError("need at least two indicators to build the index")
    if gdp not in indicators:
        raise ValidationError(f"GDP indicator {gdp!r} not in panel")
    keep = [k for k, name in enumerate(indicators) if name != gdp]
    wi = fn[keep].mean(axis=0)
    if not ((wi > 0) & (wi < 1)).all():
        raise DomainError("wellbeing index left (0, 1); check input positivity")
    return wi


def dollar_index(
    wi: np.ndarray, gdp_per_capita: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Monetize the wellbeing index by GDP per capita.

    Returns the L x T per-country dollar index and its cross-country
    mean (the global index).
    """
    if wi.shape != gdp_per_capita.shape:
        raise ValidationError("wellbeing index and GDP matrices differ in shape")
    if not (gdp_per_capita > 0).all():
        raise DomainError("GDP per capita must be strictly positive")
    per_country = gdp_per_capita * wi
    return per_country, per_country.mean(axis=0)


def fit_exponential_transform(
    all_dwi: np.ndarray, eps_low: float = 0.001
) -> tuple[float, float]:
    """Fit f(x) = a*exp(b*x) with f(min) = eps_low and f(max) = 1.

    The fit pools the minimum and maximum over every series and year in
    ``all_dwi``. A literal floor of zero would make log returns blow up,
    so the low end is pinned at a configurable ``eps_low`` in (0, 1).
    """
    if not 0 < eps_low < 1:
        raise ValidationError("eps_low must lie strictly between 0 and 1")
    lo = float(np.min(all_dwi))
    hi = float(np.max(all_dwi))
    if not hi > lo:
        raise DomainError("degenerate index range: min equals max")
    b = np.log(1.0 / eps_low) / (hi - lo)
    a = float(np.exp(-b * hi))
    return a, float(b)


def transformed_asset_values(all_dwi: np.ndarray, eps_low: float = 0.001) -> np.ndarray:
    """Map dollar indices onto (0, 1] with the fitted exponential transform.

    Evaluates eps_low ** ((max - x) / (max - min)), algebraically equal to
    a*exp(b*x) with the fitted (a, b) but exact at both endpoints: the
    pooled maximum maps to 1.0 and the pooled minimum to eps_low.
    """
    if not 0 < eps_low < 1:
        raise ValidationError("eps_low must lie strictly between 0 and 1")
    lo = float(np.min(all_dwi))
    hi = float(np.max(all_dwi))
    if not hi > lo:
        raise DomainError("degenerate index range: min equals max")
    return eps_low ** ((hi - all_dwi) / (hi - lo))


def log_returns(asset_values: np.ndarray) -> np.ndarray:
    """Log returns along the year axis; asset values must be positive."""
    if not (asset_values > 0).all():
        raise DomainError("asset values must be strictly positive")
    logs = np.log(asset_values)
    return np.diff(logs, axis=-1)


def build_index_series(
    panel: IndicatorPanel,
    eps_low: float = 0.001,
    gdp: str = "gdp",
    population: str = "population",
) -> IndexSeries:
    """Run the full index pipeline on a complete, positive panel."""
    fn = normalize_indicators(panel)
    wi = wellbeing_index(fn, panel.indicators, gdp=gdp)
    gdp_pc = panel.slice_2d(gdp) / panel.slice_2d(population)
    per_country, global_dwi = dollar_index(wi, gdp_pc)

    all_dwi = np.vstack([per_country, global_dwi])
    a, b = fit_exponential_transform(all_dwi, eps_low)
    assets = transformed_asset_values(all_dwi, eps_low)
    return IndexSeries(
        countries=panel.countries,
        years=panel.years,
        per_country_dwi=per_country,
        global_dwi=global_dwi,
        transform_a=a,
        transform_b=b,
        eps_low=eps_low,
        asset_values=assets,
        log_returns=log_returns(assets),
    )
