"""Batch CLI: from raw indicator CSVs to every report artifact.

Subcommands map one-to-one onto pipeline stages (``index build``,
``fit``, ``scenarios``, ``risk report``, ``regress``, ``frontier``,
``price``, ``surface``) plus ``run-all``, which executes the whole chain
and writes a manifest with the config hash, the seed and a checksum per
artifact. Configuration comes from an optional JSON file; command-line
flags win over file values. All randomness derives from the single root
seed, so rerunning with the same config and seed reproduces every
artifact byte for byte.

Exit codes: 0 success, 2 invalid input or configuration, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import warnings
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import pandas as pd

from . import analytics, ingest, options, portfolio, risk, scenario, tsmodel
from .errors import NumericalError, ValidationError, WellbeingError
from .index import GLOBAL_LABEL, IndexSeries, build_index_series
from .nig import MvNigParams, mvnig_fit

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


def bundled_data_dir() -> Path:
    """Directory with the packaged offline dataset."""
    return Path(resources.files("wellbeing_market") / "data")


@dataclass
class RunConfig:
    data_dir: str = field(default_factory=lambda: str(bundled_data_dir()))
    output_dir: str = "out"
    impute_rank: int = 2
    impute_tol: float = 1e-8
    impute_max_iter: int = 200
    eps_low: float = 0.001
    scenarios: int = 10_000
    seed: int | None = None
    risk_alphas: tuple[float, float] = (0.05, 0.01)
    frontier_measures: tuple[str, ...] = ("variance", "cvar95", "cvar99")
    gamma_points: int = 100
    allow_short: bool = False
    risk_free: float = 0.02
    option_series: str = GLOBAL_LABEL
    option_paths: int = 10_000
    maturities: tuple[int, ...] = tuple(range(1, 17))
    moneyness: tuple[float, ...] = (0.8, 0.9, 1.0, 1.1, 1.2)
    force: bool = False

    def validate(self, needs_seed: bool):
        if needs_seed and self.seed is None:
            raise ValidationError(
                "a seed is required when any stochastic stage runs "
                "(pass --seed or set it in the config file)"
            )
        for a in self.risk_alphas:
            if not 0 < a < 0.5:
                raise ValidationError(f"risk alpha {a} outside (0, 0.5)")
        for m in self.frontier_measures:
            if m not in portfolio.RISK_MEASURES:
                raise ValidationError(f"unknown frontier measure {m!r}")
        if self.scenarios < 1 or self.option_paths < 1:
            raise ValidationError("scenario and path counts must be positive")
        if not 0 < self.eps_low < 1:
            raise ValidationError("eps_low must lie in (0, 1)")


def load_config(path: str | None, overrides: dict) -> RunConfig:
    """Merge the optional config file with CLI overrides (flags win)."""
    values: dict = {}
    if path:
        with open(path, encoding="utf-8") as fh:
            values.update(json.load(fh))
    values.update({k: v for k, v in overrides.items() if v is not None})
    cfg = RunConfig()
    for key, value in values.items():
        if not hasattr(cfg, key):
            raise ValidationError(f"unknown config key {key!r}")
        current = getattr(cfg, key)
        if isinstance(current, tuple) and not isinstance(value, tuple):
            value = tuple(value)
        setattr(cfg, key, value)
    if not cfg.data_dir:
        cfg.data_dir = str(bundled_data_dir())
    return cfg


def config_hash(cfg: RunConfig) -> str:
    payload = asdict(cfg)
    # Where artifacts land does not change what they contain.
    payload.pop("output_dir", None)
    payload.pop("force", None)
    blob = json.dumps(payload, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class ArtifactWriter:
    """Write-once artifact store for one run directory."""

    def __init__(self, out_dir: Path, force: bool):
        self.out_dir = out_dir
        self.force = force
        self.written: list[Path] = []
        out_dir.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        p = self.out_dir / name
        if p.exists() and not self.force:
            raise ValidationError(
                f"artifact {p} already exists; use a fresh output directory "
                "or --force"
            )
        return p

    def frame(self, name: str, df: pd.DataFrame):
        p = self.path(name)
        df.to_csv(p, index=False)
        self.written.append(p)

    def json(self, name: str, payload: dict):
        p = self.path(name)
        p.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        self.written.append(p)

    def checksums(self) -> dict[str, str]:
        return {p.name: _sha256(p) for p in sorted(self.written)}


# --------------------------------------------------------------------------
# pipeline stages
# --------------------------------------------------------------------------

def stage_ingest(cfg: RunConfig) -> ingest.IndicatorPanel:
    data_dir = Path(cfg.data_dir)
    schema = ingest.load_manifest(data_dir / "manifest.json")
    panel = ingest.load_panel(data_dir, schema)
    panel = ingest.impute_missing(
        panel, rank=cfg.impute_rank, tol=cfg.impute_tol,
        max_iter=cfg.impute_max_iter,
    )
    return ingest.transform_positive(panel)


def stage_index(cfg: RunConfig, panel, writer: ArtifactWriter | None) -> IndexSeries:
    series = build_index_series(panel, eps_low=cfg.eps_low)
    if writer is not None:
        years = list(series.years)
        rows = []
        for i, country in enumerate(series.countries):
            for t, year in enumerate(years):
                rows.append((country, year, series.per_country_dwi[i, t]))
        for t, year in enumerate(years):
            rows.append((GLOBAL_LABEL, year, series.global_dwi[t]))
        writer.frame("dwi.csv", pd.DataFrame(rows, columns=["series", "year", "value"]))

        rows = []
        for i, label in enumerate(series.series_labels):
            for t, year in enumerate(years):
                rows.append((label, year, series.asset_values[i, t]))
        writer.frame("asset.csv", pd.DataFrame(rows, columns=["series", "year", "value"]))
        writer.json(
            "transform.json",
            {"a": series.transform_a, "b": series.transform_b, "eps_low": series.eps_low},
        )
    return series


def stage_fit(series: IndexSeries, writer: ArtifactWriter | None):
    models = {}
    rows = []
    for i, label in enumerate(series.series_labels):
        model = tsmodel.select_model(series.log_returns[i])
        models[label] = model
        for fit in model.comparison:
            rows.append(
                {
                    "series": label,
                    "family": fit.family,
                    "selected": fit.family == model.family,
                    "aic": fit.aic,
                    "bic": fit.bic,
                    "loglik": fit.loglik,
                    "phi0": fit.mean_params[0],
                    "theta1": fit.mean_params[1],
                    **{f"vol_{k}": v for k, v in fit.vol_params.items()},
                }
            )
    if writer is not None:
        writer.frame("models.csv", pd.DataFrame(rows))
    return models


def fit_innovations(series: IndexSeries, models) -> MvNigParams:
    resid = np.column_stack(
        [models[label].residuals for label in series.series_labels]
    )
    return mvnig_fit(resid)


def stage_scenarios(cfg: RunConfig, series, models, mv, writer: ArtifactWriter | None):
    scen = scenario.forecast_year(models, mv, cfg.scenarios, cfg.seed)
    if writer is not None:
        frame = pd.DataFrame(scen.returns, columns=list(scen.series_labels))
        frame.insert(0, "scenario_id", np.arange(scen.s_count))
        long = frame.melt(id_vars="scenario_id", var_name="series", value_name="value")
        writer.frame("scenarios.csv", long)
    return scen


def stage_risk(series: IndexSeries, scen, writer: ArtifactWriter | None):
    reports = [
        risk.risk_report(series.log_returns, series.series_labels, GLOBAL_LABEL,
                         "historical"),
        risk.risk_report(scen.returns.T, scen.series_labels, GLOBAL_LABEL,
                         "dynamic"),
    ]
    if writer is not None:
        rows = []
        for rep in reports:
            for country in rep.countries:
                rows.append(
                    {"sample": rep.sample_kind, "country": country,
                     "n": rep.sample_size, **rep.rows[country]}
                )
        writer.frame("risk_report.csv", pd.DataFrame(rows))
    return reports


def stage_regress(cfg: RunConfig, series: IndexSeries, scen, writer: ArtifactWriter | None):
    samples = {
        "historical": (series.log_returns, series.series_labels),
        "dynamic": (scen.returns.T, scen.series_labels),
    }
    reg_rows = []
    grad_rows = []
    alphas = {}
    for kind, (returns, labels) in samples.items():
        g = returns[labels.index(GLOBAL_LABEL)]
        for i, label in enumerate(labels):
            if label == GLOBAL_LABEL:
                continue
            for method, fun in (("ols", analytics.ols),
                                ("rr", analytics.robust_regression)):
                fit = fun(returns[i], g)
                reg_rows.append(
                    {
                        "sample": kind, "country": label, "method": method,
                        "intercept": fit.intercept, "gradient": fit.gradient,
                        "se_intercept": fit.se_intercept,
                        "se_gradient": fit.se_gradient,
                        "p_intercept": fit.p_intercept,
                        "p_gradient": fit.p_gradient,
                        "rmse": fit.rmse,
                    }
                )
                if kind == "dynamic" and method == "rr":
                    grad_rows.append(
                        {"country": label, "gradient": fit.gradient,
                         "se_gradient": fit.se_gradient}
                    )
        alphas[kind] = analytics.alpha_report(returns, labels, GLOBAL_LABEL,
                                              risk_free=0.0)
    if writer is not None:
        writer.frame("regressions.csv", pd.DataFrame(reg_rows))
        grad_rows.sort(key=lambda r: -r["gradient"])
        writer.frame("gradients.csv", pd.DataFrame(grad_rows))
        countries = [l for l in series.series_labels if l != GLOBAL_LABEL]
        writer.frame(
            "alphas.csv",
            pd.DataFrame(
                {
                    "country": countries,
                    "historical_alpha": [alphas["historical"].alphas[c] for c in countries],
                    "dynamic_alpha": [alphas["dynamic"].alphas[c] for c in countries],
                    "dynamic_beta": [alphas["dynamic"].betas[c] for c in countries],
                }
            ),
        )
    return reg_rows, alphas


def high_gdp_universe(panel: ingest.IndicatorPanel, count: int = 4) -> tuple[str, ...]:
    """Countries with the largest final-year GDP."""
    gdp = panel.slice_2d("gdp")[:, -1]
    order = np.argsort(gdp)[::-1][:count]
    return tuple(panel.countries[i] for i in sorted(order))


def stage_frontier(cfg: RunConfig, panel, series: IndexSeries, scen,
                   writer: ArtifactWriter | None,
                   measures=None, samples=("historical", "dynamic"),
                   universes=("all", "high-gdp")):
    measures = measures or cfg.frontier_measures
    countries = [l for l in series.series_labels if l != GLOBAL_LABEL]
    high = high_gdp_universe(panel)
    gamma_grid = np.round(np.arange(cfg.gamma_points) / cfg.gamma_points,
                          10)
    traces = {}
    frames = {m: [] for m in measures}
    for sample in samples:
        if sample == "historical":
            all_returns = series.log_returns[:-1].T
        else:
            all_returns = scen.returns[:, :-1]
        for universe in universes:
            labels = countries if universe == "all" else list(high)
            cols = [countries.index(c) for c in labels]
            returns = all_returns[:, cols]
            for measure in measures:
                alpha_needed = {"cvar95": 20, "cvar99": 100}.get(measure, 1)
                if returns.shape[0] < alpha_needed:
                    warnings.warn(
                        f"skipping {measure} frontier on {sample} sample: "
                        f"{returns.shape[0]} scenarios < {alpha_needed} required",
                        stacklevel=2,
                    )
                    continue
                trace = portfolio.trace_frontier(
                    returns, measure, gamma_grid=gamma_grid,
                    labels=tuple(labels), long_only=not cfg.allow_short,
                )
                traces[(measure, sample, universe)] = trace
                for pt in trace.points:
                    row = {
                        "gamma": pt.gamma, "sample": sample, "universe": universe,
                        "expected_return": pt.expected_return,
                        "risk": pt.risk_value,
                    }
                    row.update({f"w_{c}": w for c, w in zip(labels, pt.weights)})
                    frames[measure].append(row)
    if writer is not None:
        for measure in measures:
            writer.frame(f"frontier_{measure}.csv", pd.DataFrame(frames[measure]))
    return traces


def pricing_model(cfg: RunConfig, series: IndexSeries) -> options.OptionModelParams:
    idx = series.series_labels.index(cfg.option_series)
    garch, nig_params = options.fit_nig_garch(
        series.log_returns[idx], r_prime=cfg.risk_free
    )
    return options.OptionModelParams(
        garch=garch,
        nig=nig_params,
        risk_free=cfg.risk_free,
        spot=float(series.asset_values[idx, -1]),
    )


def stage_surface(cfg: RunConfig, series: IndexSeries, writer: ArtifactWriter | None):
    params = pricing_model(cfg, series)
    quotes, surface = options.build_call_surface(
        params,
        maturities=cfg.maturities,
        moneyness=cfg.moneyness,
        n_paths=cfg.option_paths,
        seed=cfg.seed,
    )
    if writer is not None:
        rows = []
        for i, t in enumerate(surface.maturities):
            for j, m in enumerate(surface.moneyness):
                rows.append(
                    {
                        "maturity": t, "moneyness": m,
                        "price": surface.prices[i, j],
                        "implied_vol": surface.implied_vols[i, j],
                        "valid": bool(surface.valid[i, j]),
                    }
                )
        writer.frame("surface.csv", pd.DataFrame(rows))
    return params, quotes, surface


def run_pipeline(cfg: RunConfig) -> dict:
    """Execute every stage and return the written run manifest."""
    cfg.validate(needs_seed=True)
    writer = ArtifactWriter(Path(cfg.output_dir), cfg.force)
    stages_done = []
    manifest: dict = {
        "config": asdict(cfg),
        "config_hash": config_hash(cfg),
        "seed": cfg.seed,
    }
    stage = "ingest"
    try:
        panel = stage_ingest(cfg)
        stages_done.append(stage)
        stage = "index"
        series = stage_index(cfg, panel, writer)
        stages_done.append(stage)
        stage = "fit"
        models = stage_fit(series, writer)
        stages_done.append(stage)
        stage = "innovations"
        mv = fit_innovations(series, models)
        manifest["innovation_model"] = {
            "alpha": mv.alpha, "delta": mv.delta,
            "beta": mv.beta.tolist(), "mu": mv.mu.tolist(),
            "structure": mv.structure.tolist(),
        }
        stages_done.append(stage)
        stage = "scenarios"
        scen = stage_scenarios(cfg, series, models, mv, writer)
        stages_done.append(stage)
        stage = "risk"
        stage_risk(series, scen, writer)
        stages_done.append(stage)
        stage = "regress"
        stage_regress(cfg, series, scen, writer)
        stages_done.append(stage)
        stage = "frontier"
        stage_frontier(cfg, panel, series, scen, writer)
        stages_done.append(stage)
        stage = "surface"
        stage_surface(cfg, series, writer)
        stages_done.append(stage)
    except WellbeingError as exc:
        manifest["failed_stage"] = stage
        manifest["error"] = str(exc)
        manifest["stages"] = stages_done
        manifest["artifacts"] = writer.checksums()
        failure_path = writer.out_dir / "manifest.json"
        if cfg.force or not failure_path.exists():
            failure_path.write_text(
                json.dumps(manifest, indent=2, sort_keys=True) + "\n"
            )
        raise type(exc)(f"stage {stage!r} failed: {exc}") from exc

    manifest["stages"] = stages_done
    manifest["artifacts"] = writer.checksums()
    path = writer.path("manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------

def _add_common(parser):
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--data-dir", dest="data_dir",
                        help="directory with manifest.json and country CSVs "
                             "(default: bundled dataset)")
    parser.add_argument("--out-dir", dest="output_dir", help="artifact directory")
    parser.add_argument("--seed", type=int, help="root seed for all randomness")
    parser.add_argument("--force", action="store_true", default=None,
                        help="overwrite existing artifacts")
    parser.add_argument("--impute-rank", dest="impute_rank", type=int)
    parser.add_argument("--impute-tol", dest="impute_tol", type=float)
    parser.add_argument("--eps-low", dest="eps_low", type=float)
    parser.add_argument("--risk-free", dest="risk_free", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wellbeing-market",
        description="Socioeconomic wellbeing indices as a financial market: "
                    "index construction, scenario risk, frontiers and options.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_index = sub.add_parser("index", help="index construction")
    index_sub = p_index.add_subparsers(dest="subcommand", required=True)
    p_build = index_sub.add_parser("build", help="build DWI and asset series")
    _add_common(p_build)

    p_fit = sub.add_parser("fit", help="fit volatility models per series")
    _add_common(p_fit)

    p_scen = sub.add_parser("scenarios", help="simulate joint return scenarios")
    _add_common(p_scen)
    p_scen.add_argument("--scenarios", type=int, help="scenario count")

    p_risk = sub.add_parser("risk", help="risk measures")
    risk_sub = p_risk.add_subparsers(dest="subcommand", required=True)
    p_report = risk_sub.add_parser("report", help="tail-risk report table")
    _add_common(p_report)
    p_report.add_argument("--scenarios", type=int)

    p_reg = sub.add_parser("regress", help="per-country regressions and alphas")
    _add_common(p_reg)
    p_reg.add_argument("--scenarios", type=int)

    p_fr = sub.add_parser("frontier", help="efficient frontier traces")
    _add_common(p_fr)
    p_fr.add_argument("--scenarios", type=int)
    p_fr.add_argument("--measure", choices=portfolio.RISK_MEASURES)
    p_fr.add_argument("--sample", choices=("historical", "dynamic", "both"),
                      default="both")
    p_fr.add_argument("--universe", choices=("all", "high-gdp", "both"),
                      default="both")
    p_fr.add_argument("--allow-short", dest="allow_short", action="store_true",
                      default=None)

    p_price = sub.add_parser("price", help="price one option")
    _add_common(p_price)
    p_price.add_argument("--series", dest="option_series")
    p_price.add_argument("--kind", choices=("call", "put"), default="call")
    p_price.add_argument("--strike", type=float)
    p_price.add_argument("--maturity", type=int, default=1)
    p_price.add_argument("--paths", dest="option_paths", type=int)

    p_surf = sub.add_parser("surface", help="implied-volatility surface")
    _add_common(p_surf)
    p_surf.add_argument("--series", dest="option_series")
    p_surf.add_argument("--paths", dest="option_paths", type=int)

    p_all = sub.add_parser("run-all", help="full pipeline with manifest")
    _add_common(p_all)
    p_all.add_argument("--scenarios", type=int)
    p_all.add_argument("--paths", dest="option_paths", type=int)

    return parser


_CONFIG_KEYS = (
    "data_dir", "output_dir", "seed", "force", "impute_rank", "impute_tol",
    "eps_low", "risk_free", "scenarios", "option_series", "option_paths",
    "allow_short",
)


def _config_from_args(args) -> RunConfig:
    overrides = {k: getattr(args, k, None) for k in _CONFIG_KEYS}
    return load_config(getattr(args, "config", None), overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
        command = args.command
        if command == "index":
            cfg.validate(needs_seed=False)
            writer = ArtifactWriter(Path(cfg.output_dir), cfg.force)
            stage_index(cfg, stage_ingest(cfg), writer)
        elif command == "fit":
            cfg.validate(needs_seed=False)
            writer = ArtifactWriter(Path(cfg.output_dir), cfg.force)
            stage_fit(stage_index(cfg, stage_ingest(cfg), None), writer)
        elif command in ("scenarios", "risk", "regress", "frontier"):
            cfg.validate(needs_seed=True)
            writer = ArtifactWriter(Path(cfg.output_dir), cfg.force)
            panel = stage_ingest(cfg)
            series = stage_index(cfg, panel, None)
            models = stage_fit(series, None)
            mv = fit_innovations(series, models)
            scen = stage_scenarios(
                cfg, series, models, mv, writer if command == "scenarios" else None
            )
            if command == "risk":
                stage_risk(series, scen, writer)
            elif command == "regress":
                stage_regress(cfg, series, scen, writer)
            elif command == "frontier":
                measures = (
                    (args.measure,) if args.measure else cfg.frontier_measures
                )
                samples = (
                    ("historical", "dynamic") if args.sample == "both"
                    else (args.sample,)
                )
                universes = (
                    ("all", "high-gdp") if args.universe == "both"
                    else (args.universe,)
                )
                stage_frontier(cfg, panel, series, scen, writer,
                               measures=measures, samples=samples,
                               universes=universes)
        elif command == "price":
            cfg.validate(needs_seed=True)
            series = stage_index(cfg, stage_ingest(cfg), None)
            params = pricing_model(cfg, series)
            strike = args.strike if args.strike is not None else params.spot
            quote = options.price_option(
                params, args.kind, strike, args.maturity,
                n_paths=cfg.option_paths, seed=cfg.seed,
            )
            print(json.dumps(asdict(quote), indent=2))
        elif command == "surface":
            cfg.validate(needs_seed=True)
            writer = ArtifactWriter(Path(cfg.output_dir), cfg.force)
            series = stage_index(cfg, stage_ingest(cfg), None)
            stage_surface(cfg, series, writer)
        elif command == "run-all":
            manifest = run_pipeline(cfg)
            print(json.dumps({"output_dir": cfg.output_dir,
                              "config_hash": manifest["config_hash"],
                              "artifacts": sorted(manifest["artifacts"])},
                             indent=2))
        return EXIT_OK
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except WellbeingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
