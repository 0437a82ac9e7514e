"""Socioeconomic wellbeing indices treated as a financial market.

Builds dollar-denominated wellbeing indices from national indicator
panels, models their returns with volatility-clustering time series and
heavy-tailed NIG innovations, and applies asset-pricing machinery on
top: systemic tail-risk measures, benchmark regressions, efficient
frontiers, and risk-neutral option pricing.
"""

from .analytics import AlphaReport, RegressionFit, jensen_alpha, ols, robust_regression
from .errors import (
    DomainError,
    FitError,
    NumericalError,
    ParseError,
    SchemaError,
    ValidationError,
    WellbeingError,
)
from .index import IndexSeries, build_index_series
from .ingest import IndicatorPanel, impute_missing, load_panel, transform_positive
from .nig import (
    MvNigParams,
    NigParams,
    mvnig_fit,
    mvnig_sample,
    nig_fit,
    nig_mgf,
    nig_pdf,
    nig_sample,
)
from .options import (
    OptionModelParams,
    OptionQuote,
    VolSurface,
    esscher_theta,
    implied_vol_surface,
    price_option,
    simulate_risk_neutral,
)
from .portfolio import FrontierTrace, mean_cvar_point, mean_variance_point, trace_frontier
from .risk import coes, coetl, covar, cvar, pearson, var
from .scenario import ScenarioMatrix, forecast_year
from .tsmodel import FittedVolModel, fit_mean_vol, select_model, simulate_path

__version__ = "0.1.0"

__all__ = [
    "AlphaReport", "RegressionFit", "jensen_alpha", "ols", "robust_regression",
    "DomainError", "FitError", "NumericalError", "ParseError", "SchemaError",
    "ValidationError", "WellbeingError",
    "IndexSeries", "build_index_series",
    "IndicatorPanel", "impute_missing", "load_panel", "transform_positive",
    "MvNigParams", "NigParams", "mvnig_fit", "mvnig_sample", "nig_fit",
    "nig_mgf", "nig_pdf", "nig_sample",
    "OptionModelParams", "OptionQuote", "VolSurface", "esscher_theta",
    "implied_vol_surface", "price_option", "simulate_risk_neutral",
    "FrontierTrace", "mean_cvar_point", "mean_variance_point", "trace_frontier",
    "coes", "coetl", "covar", "cvar", "pearson", "var",
    "ScenarioMatrix", "forecast_year",
    "FittedVolModel", "fit_mean_vol", "select_model", "simulate_path",
]
