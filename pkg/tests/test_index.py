import numpy as np
import pytest

from wellbeing_market.errors import DomainError, ValidationError
from wellbeing_market.index import (
    build_index_series,
    dollar_index,
    fit_exponential_transform,
    log_returns,
    normalize_indicators,
    transformed_asset_values,
    wellbeing_index,
)
from wellbeing_market.ingest import IndicatorPanel


def panel_from(values, indicators=None):
    values = np.asarray(values, dtype=float)
    k, l, t = values.shape
    return IndicatorPanel(
        countries=tuple(f"C{i}" for i in range(l)),
        indicators=tuple(indicators or [f"ind{i}" for i in range(k)]),
        years=tuple(range(2000, 2000 + t)),
        values=values,
        missing_mask=np.zeros(values.shape, dtype=bool),
    )


class TestNormalize:
    def test_single_country_degenerate(self):
        fn = normalize_indicators(panel_from(np.full((3, 1, 2), 7.0)))
        np.testing.assert_allclose(fn, 1.0)

    def test_two_country_shares(self):
        values = np.zeros((1, 2, 1))
        values[0, 0, 0], values[0, 1, 0] = 1.0, 3.0
        fn = normalize_indicators(panel_from(values))
        np.testing.assert_allclose(fn[0, :, 0], [0.25, 0.75])

    def test_shares_sum_to_one(self):
        rng = np.random.default_rng(0)
        fn = normalize_indicators(panel_from(rng.uniform(0.5, 9.0, (4, 5, 6))))
        np.testing.assert_allclose(fn.sum(axis=1), 1.0, atol=1e-12)

    def test_scaling_invariance(self):
        rng = np.random.default_rng(1)
        values = rng.uniform(0.5, 9.0, (4, 5, 6))
        scaled = values.copy()
        scaled[2] *= 37.5  # common positive factor on one indicator
        fn_a = normalize_indicators(panel_from(values))
        fn_b = normalize_indicators(panel_from(scaled))
        np.testing.assert_allclose(fn_a, fn_b, atol=1e-12)

    def test_rejects_nonpositive(self):
        values = np.full((2, 2, 2), 1.0)
        values[0, 0, 0] = 0.0
        with pytest.raises(DomainError):
            normalize_indicators(panel_from(values))


class TestWellbeingIndex:
    def test_uniform_shares(self):
        fn = np.full((8, 9, 3), 1.0 / 9.0)
        wi = wellbeing_index(fn, tuple(f"i{k}" for k in range(7)) + ("gdp",))
        np.testing.assert_allclose(wi, 1.0 / 9.0)

    def test_hand_sum_over_seven(self):
        shares = [0.1, 0.2, 0.1, 0.2, 0.1, 0.2, 0.1]
        fn = np.zeros((8, 2, 1))
        for k, s in enumerate(shares):
            fn[k, 0, 0] = s
            fn[k, 1, 0] = 1 - s
        fn[7] = 0.5
        wi = wellbeing_index(fn, tuple(f"i{k}" for k in range(7)) + ("gdp",))
        assert wi[0, 0] == pytest.approx(1.0 / 7.0, abs=1e-12)

    def test_strictly_inside_unit_interval(self):
        rng = np.random.default_rng(2)
        panel = panel_from(
            rng.uniform(0.5, 9.0, (5, 4, 6)),
            indicators=("a", "b", "c", "d", "gdp"),
        )
        wi = wellbeing_index(normalize_indicators(panel), panel.indicators)
        assert ((wi > 0) & (wi < 1)).all()

    def test_too_few_indicators(self):
        with pytest.raises(ValidationError):
            wellbeing_index(np.full((1, 2, 2), 0.5), ("gdp",))


class TestDollarIndex:
    def test_direct_product(self):
        per, glob = dollar_index(np.array([[0.1]]), np.array([[50_000.0]]))
        assert per[0, 0] == pytest.approx(5000.0)
        assert glob[0] == pytest.approx(5000.0)

    def test_identical_countries_symmetry(self):
        wi = np.full((4, 3), 0.2)
        gdp = np.full((4, 3), 1000.0)
        per, glob = dollar_index(wi, gdp)
        np.testing.assert_allclose(glob, per[0])

    def test_global_between_min_and_max(self):
        rng = np.random.default_rng(3)
        wi = rng.uniform(0.05, 0.3, (5, 7))
        gdp = rng.uniform(500, 60_000, (5, 7))
        per, glob = dollar_index(wi, gdp)
        assert (glob >= per.min(axis=0)).all() and (glob <= per.max(axis=0)).all()

    def test_negative_gdp_rejected(self):
        with pytest.raises(DomainError):
            dollar_index(np.array([[0.1]]), np.array([[-5.0]]))


class TestExponentialTransform:
    def test_closed_form_halving_case(self):
        # b = 1 and a = 1/2 when the range is [0, ln 2] at floor 0.5
        dwi = np.array([[0.0, np.log(2.0)]])
        a, b = fit_exponential_transform(dwi, eps_low=0.5)
        assert b == pytest.approx(1.0, rel=1e-12)
        assert a == pytest.approx(0.5, rel=1e-12)
        vals = transformed_asset_values(dwi, eps_low=0.5)
        assert vals[0, 0] == 0.5 and vals[0, 1] == 1.0

    def test_agrees_with_a_exp_bx(self):
        rng = np.random.default_rng(4)
        dwi = rng.uniform(30, 9000, (3, 8))
        a, b = fit_exponential_transform(dwi, eps_low=0.001)
        np.testing.assert_allclose(
            transformed_asset_values(dwi, 0.001), a * np.exp(b * dwi), rtol=1e-10
        )

    def test_strictly_increasing(self):
        a, b = fit_exponential_transform(np.array([[1.0, 100.0]]), 0.01)
        assert b > 0
        xs = np.linspace(0, 200, 50)
        f = a * np.exp(b * xs)
        assert (np.diff(f) > 0).all()

    def test_exact_endpoints(self):
        dwi = np.array([[36.0, 250.0, 9500.0]])
        vals = transformed_asset_values(dwi, eps_low=0.001)
        assert vals.max() == 1.0
        assert vals.min() == 0.001

    def test_degenerate_range(self):
        with pytest.raises(DomainError):
            fit_exponential_transform(np.full((2, 2), 5.0))

    def test_argmax_preserved(self):
        rng = np.random.default_rng(5)
        dwi = rng.uniform(10, 5000, (6, 9))
        vals = transformed_asset_values(dwi, 0.001)
        np.testing.assert_array_equal(
            np.argmax(dwi, axis=0), np.argmax(vals, axis=0)
        )


class TestLogReturns:
    def test_constant_series(self):
        np.testing.assert_allclose(log_returns(np.full((2, 5), 0.7)), 0.0)

    def test_doubling_gives_ln2(self):
        r = log_returns(np.array([[0.5, 1.0]]))
        assert r[0, 0] == pytest.approx(np.log(2.0), abs=1e-12)

    def test_telescoping(self):
        rng = np.random.default_rng(6)
        assets = rng.uniform(0.01, 1.0, (4, 12))
        r = log_returns(assets)
        np.testing.assert_allclose(
            r.sum(axis=1), np.log(assets[:, -1] / assets[:, 0]), atol=1e-12
        )

    def test_round_trip_reconstruction(self):
        rng = np.random.default_rng(7)
        assets = rng.uniform(0.01, 1.0, (3, 10))
        r = log_returns(assets)
        rebuilt = assets[:, [0]] * np.exp(np.cumsum(r, axis=1))
        np.testing.assert_allclose(rebuilt, assets[:, 1:], atol=1e-10)

    def test_rejects_nonpositive(self):
        with pytest.raises(DomainError):
            log_returns(np.array([[1.0, 0.0]]))


class TestBundledIndex:
    def test_wellbeing_in_unit_interval(self, bundled_panel):
        fn = normalize_indicators(bundled_panel)
        wi = wellbeing_index(fn, bundled_panel.indicators)
        assert ((wi > 0) & (wi < 1)).all()

    def test_transform_endpoints_exact(self, bundled_index):
        assert bundled_index.asset_values.max() == 1.0
        assert bundled_index.asset_values.min() == bundled_index.eps_low

    def test_series_shapes(self, bundled_index):
        l = len(bundled_index.countries)
        t = len(bundled_index.years)
        assert bundled_index.per_country_dwi.shape == (l, t)
        assert bundled_index.asset_values.shape == (l + 1, t)
        assert bundled_index.log_returns.shape == (l + 1, t - 1)
        assert bundled_index.series_labels[-1] == "global"

    def test_build_runs_on_bundled_data(self, bundled_panel):
        series = build_index_series(bundled_panel, eps_low=0.002)
        assert series.eps_low == 0.002
        assert series.asset_values.min() == 0.002
