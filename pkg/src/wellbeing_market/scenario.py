"""Joint one-year-ahead return scenarios for all index series.

Each series keeps its own fitted mean/volatility recursion; the joint
behavior comes entirely from the multivariate NIG innovation vector.
For scenario s and series l:

    sigma_{T+1}^2(l) from the terminal filter state of model l
    R(l; s) = phi0(l) + sigma_{T+1}(l) * eps(l; s) + theta1(l) * z_T(l)

so the one-step conditional variance is deterministic given the fit and
all randomness flows through the innovation draw, which is reproducible
from the seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ValidationError
from .nig import MvNigParams, mvnig_sample
from .tsmodel import FittedVolModel, one_step_variance

DEFAULT_SCENARIO_COUNT = 10_000


@dataclass(frozen=True)
class ScenarioMatrix:
    s_count: int
    series_labels: tuple[str, ...]
    returns: np.ndarray = field(repr=False)   # s_count x n_series
    seed: int = 0
    provenance: tuple[dict, ...] = field(default=(), repr=False)

    def column(self, label: str) -> np.ndarray:
        return self.returns[:, self.series_labels.index(label)]


def forecast_year(
    models: dict[str, FittedVolModel],
    innovations_dist: MvNigParams,
    s_count: int = DEFAULT_SCENARIO_COUNT,
    seed: int = 0,
) -> ScenarioMatrix:
    """Draw ``s_count`` joint next-step return scenarios.

    ``models`` maps series label to its fitted model, in column order of
    the innovation distribution. Identical seeds give identical output.
    """
    labels = tuple(models)
    if len(labels) != innovations_dist.dimension:
        raise ValidationError(
            f"{len(labels)} models but innovation dimension "
            f"{innovations_dist.dimension}"
        )
    if s_count < 1:
        raise ValidationError("s_count must be positive")

    eps = mvnig_sample(innovations_dist, s_count, seed)
    returns = np.empty((s_count, len(labels)))
    provenance = []
    for j, label in enumerate(labels):
        model = models[label]
        sigma2 = one_step_variance(model)
        phi0, theta1 = model.mean_params
        returns[:, j] = phi0 + np.sqrt(sigma2) * eps[:, j] + theta1 * model.z_last
        provenance.append(
            {
                "series": label,
                "family": model.family,
                "mean_params": model.mean_params,
                "vol_params": dict(model.vol_params),
                "one_step_variance": sigma2,
            }
        )

    if not np.all(np.isfinite(returns)):
        raise DomainError("scenario matrix contains non-finite entries")
    return ScenarioMatrix(
        s_count=s_count,
        series_labels=labels,
        returns=returns,
        seed=seed,
        provenance=tuple(provenance),
    )
