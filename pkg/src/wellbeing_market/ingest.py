"""Loading, validation, imputation and sign-fixing of indicator panels.

Input layout: one CSV per country in wide form (one row per indicator,
one column per year), plus a JSON manifest mapping country codes to file
names and declaring the indicator order. Two indicators arrive on an
inverted scale (income inequality and unemployment); ``transform_positive``
replaces them by their complements against 100 so that every indicator
contributes positively.

Missing cells are imputed by an iterative low-rank (EM-style truncated
SVD) reconstruction of the indicator-by-(country, year) unfolding.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import DomainError, ParseError, SchemaError

# Indicator pairs that toggle between raw and positive-contribution form.
COMPLEMENT_NAMES = {
    "gini": "neg_gini",
    "neg_gini": "gini",
    "unemployment": "employment",
    "employment": "unemployment",
}


@dataclass(frozen=True)
class IndicatorPanel:
    """Country x indicator x year panel of raw indicator values.

    ``values`` is indexed ``(indicator, country, year)``; ``missing_mask``
    has the same shape and is True where the source had no usable value.
    The mask is retained after imputation for provenance.
    """

    countries: tuple[str, ...]
    indicators: tuple[str, ...]
    years: tuple[int, ...]
    values: np.ndarray
    missing_mask: np.ndarray

    def __post_init__(self):
        k, l, t = len(self.indicators), len(self.countries), len(self.years)
        if self.values.shape != (k, l, t):
            raise ValueError(
                f"values shape {self.values.shape} != ({k}, {l}, {t})"
            )
        if self.missing_mask.shape != self.values.shape:
            raise ValueError("missing_mask shape differs from values shape")
        diffs = np.diff(self.years)
        if len(self.years) > 1 and not np.all(diffs == 1):
            raise ValueError("years must be strictly increasing and contiguous")

    def indicator_index(self, name: str) -> int:
        try:
            return self.indicators.index(name)
        except ValueError:
            raise SchemaError(f"panel has no indicator named {name!r}") from None

    def slice_2d(self, name: str) -> np.ndarray:
        """Country x year matrix for one indicator."""
        return self.values[self.indicator_index(name)]


def load_manifest(path: str | Path) -> dict:
    """Read the data-directory manifest (JSON)."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    for key in ("countries", "indicators", "years"):
        if key not in manifest:
            raise SchemaError(f"manifest {path} missing required key {key!r}")
    return manifest


def load_panel(data_dir: str | Path, schema: dict) -> IndicatorPanel:
    """Load all per-country CSVs named by ``schema`` into one panel.

    ``schema`` is the manifest dict: ``countries`` maps country code to
    file name (insertion order is the panel order), ``indicators`` is the
    ordered indicator list, ``years`` is an inclusive ``[first, last]``
    pair. Blank or non-numeric cells become missing; structural problems
    (unreadable year headers, unknown indicator rows) raise.
    """
    data_dir = Path(data_dir)
    countries = list(schema["countries"])
    indicators = list(schema["indicators"])
    y0, y1 = schema["years"]
    years = list(range(int(y0), int(y1) + 1))

    values = np.full((len(indicators), len(countries), len(years)), np.nan)
    missing = np.ones(values.shape, dtype=bool)

    for li, country in enumerate(countries):
        file_path = data_dir / schema["countries"][country]
        if not file_path.exists():
            raise ParseError(f"data file for {country} not found: {file_path}")
        _read_country_csv(file_path, country, indicators, years, values, missing, li)

    filled = ~missing
    values[missing] = np.nan
    return IndicatorPanel(
        countries=tuple(countries),
        indicators=tuple(indicators),
        years=tuple(years),
        values=values,
        missing_mask=~filled,
    )


def _read_country_csv(file_path, country, indicators, years, values, missing, li):
    year_pos = {y: t for t, y in enumerate(years)}
    with open(file_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{file_path}: file is empty") from None
        col_years = []
        for j, cell in enumerate(header[1:], start=2):
            try:
                col_years.append(int(cell.strip()))
            except ValueError:
                raise ParseError(
                    f"{file_path}: header column {j} is not a year: {cell!r}"
                ) from None
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            name = row[0].strip()
            if name not in indicators:
                raise SchemaError(
                    f"{file_path} row {row_no}: unknown indicator {name!r}"
                )
            ki = indicators.index(name)
            for year, cell in zip(col_years, row[1:]):
                t = year_pos.get(year)
                if t is None:
                    continue
                text = cell.strip()
                if text in ("", "..", "NA", "NaN", "nan"):
                    continue
                try:
                    values[ki, li, t] = float(text)
                    missing[ki, li, t] = False
                except ValueError:
                    # Unparseable cell: leave flagged as missing.
                    continue


def transform_positive(panel: IndicatorPanel) -> IndicatorPanel:
    """Complement the inverted-scale indicators and enforce positivity.

    Indicators named in ``COMPLEMENT_NAMES`` are replaced by 100 minus
    their value and renamed (gini -> neg_gini, unemployment -> employment);
    applying the transform twice restores the original panel. Raises
    ``DomainError`` if any resulting non-missing value is not strictly
    positive, naming the offending cell.
    """
    values = panel.values.copy()
    names = list(panel.indicators)
    for ki, name in enumerate(names):
        if name not in COMPLEMENT_NAMES:
            continue
        sl = values[ki]
        obs = ~panel.missing_mask[ki]
        if np.any((sl[obs] < 0) | (sl[obs] > 100)):
            bad = _first_bad_cell(panel, ki, (sl < 0) | (sl > 100))
            raise DomainError(f"indicator {name!r} outside [0, 100] at {bad}")
        values[ki] = np.where(obs, 100.0 - sl, sl)
        names[ki] = COMPLEMENT_NAMES[name]

    obs = ~panel.missing_mask
    nonpos = obs & ~(values > 0)
    if np.any(nonpos):
        ki, li, t = np.argwhere(nonpos)[0]
        raise DomainError(
            f"non-positive value for {names[ki]!r}, country "
            f"{panel.countries[li]!r}, year {panel.years[t]}: {values[ki, li, t]}"
        )
    return replace(panel, indicators=tuple(names), values=values)


def _first_bad_cell(panel, ki, bad2d):
    bad2d = bad2d & ~panel.missing_mask[ki]
    li, t = np.argwhere(bad2d)[0]
    return f"country {panel.countries[li]!r}, year {panel.years[t]}"


def impute_missing(
    panel: IndicatorPanel,
    rank: int = 2,
    tol: float = 1e-8,
    max_iter: int = 200,
) -> IndicatorPanel:
    """Fill missing cells by iterative rank-``rank`` SVD reconstruction.

    The panel is unfolded with indicators as rows and (country, year)
    pairs as columns. Missing cells start at their series mean; each
    iteration reconstructs the matrix from its leading ``rank`` singular
    triplets (rows scaled to unit RMS so indicators with large magnitudes
    do not dominate) and re-inserts the observed cells. Stops when the
    fills change by less than ``tol`` in relative Frobenius norm.

    Observed cells are never altered, and the missing mask is kept for
    provenance. A complete panel is returned unchanged.
    """
    if rank < 1:
        raise ValueError("rank must be a positive integer")
    if not panel.missing_mask.any():
        return panel

    k, l, t = panel.values.shape
    mask = panel.missing_mask.reshape(k, l * t).copy()
    mat = panel.values.reshape(k, l * t).copy()

    # Every (indicator, country) series needs at least two observations.
    obs_per_series = (~panel.missing_mask).sum(axis=2)
    for ki, li in np.argwhere(obs_per_series < 2):
        raise DomainError(
            f"series {panel.indicators[ki]!r} / {panel.countries[li]!r} has "
            f"{obs_per_series[ki, li]} observed values; need at least 2"
        )

    # Initialize each missing cell with its (indicator, country) series mean.
    series_mean = np.nanmean(panel.values, axis=2)
    init = np.repeat(series_mean[:, :, None], t, axis=2).reshape(k, l * t)
    mat[mask] = init[mask]

    row_scale = np.sqrt(np.mean(mat**2, axis=1))
    row_scale[row_scale == 0] = 1.0
    work = mat / row_scale[:, None]

    fills = work[mask]
    converged = False
    for _ in range(max_iter):
        u, s, vt = np.linalg.svd(work, full_matrices=False)
        approx = (u[:, :rank] * s[:rank]) @ vt[:rank]
        new_fills = approx[mask]
        denom = max(np.linalg.norm(fills), np.finfo(float).tiny)
        change = np.linalg.norm(new_fills - fills) / denom
        work[mask] = new_fills
        fills = new_fills
        if change < tol:
            converged = True
            break
    if not converged:
        warnings.warn(
            f"imputation did not converge in {max_iter} iterations; "
            "returning last iterate",
            stacklevel=2,
        )

    out = (work * row_scale[:, None]).reshape(k, l, t)
    out[~panel.missing_mask] = panel.values[~panel.missing_mask]
    return replace(panel, values=out)
