import numpy as np
import pytest

from wellbeing_market import ingest
from wellbeing_market.cli import bundled_data_dir
from wellbeing_market.index import build_index_series
from wellbeing_market.nig import mvnig_fit
from wellbeing_market.scenario import forecast_year
from wellbeing_market.tsmodel import select_model


@pytest.fixture(scope="session")
def bundled_panel():
    data_dir = bundled_data_dir()
    schema = ingest.load_manifest(data_dir / "manifest.json")
    panel = ingest.load_panel(data_dir, schema)
    panel = ingest.impute_missing(panel, rank=2, tol=1e-8, max_iter=200)
    return ingest.transform_positive(panel)


@pytest.fixture(scope="session")
def bundled_index(bundled_panel):
    return build_index_series(bundled_panel)


@pytest.fixture(scope="session")
def bundled_models(bundled_index):
    with np.errstate(all="ignore"):
        return {
            label: select_model(bundled_index.log_returns[i])
            for i, label in enumerate(bundled_index.series_labels)
        }


@pytest.fixture(scope="session")
def bundled_innovations(bundled_index, bundled_models):
    resid = np.column_stack(
        [bundled_models[l].residuals for l in bundled_index.series_labels]
    )
    return mvnig_fit(resid)


@pytest.fixture(scope="session")
def bundled_scenarios(bundled_models, bundled_innovations):
    return forecast_year(bundled_models, bundled_innovations, 10_000, seed=42)


def simulate_garch_series(n, phi0, theta1, alpha0, alpha1, beta1, seed, burn=200):
    """Reference mean+GARCH simulator used as the refit oracle."""
    rng = np.random.default_rng(seed)
    eps = rng.standard_normal(n + burn)
    z_prev, s2_prev = 0.0, alpha0 / (1 - alpha1 - beta1)
    out = np.empty(n + burn)
    for t in range(n + burn):
        s2 = alpha0 + alpha1 * z_prev**2 + beta1 * s2_prev
        z = np.sqrt(s2) * eps[t]
        out[t] = phi0 + z + theta1 * z_prev
        z_prev, s2_prev = z, s2
    return out[burn:]
