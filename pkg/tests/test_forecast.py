from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wcoda.clr import clr_forward
from wcoda.errors import DomainError
from wcoda.fixtures import age_basis, load_fixture
from wcoda.forecast import combine, forecast_death_counts, forecast_scores, rwd_forecast
from wcoda.lifetable import LifeTableSeries
from wcoda.weighting import make_weights
from wcoda.wfpca import FpcaModel, fit_wfpca

GOLDEN = Path(__file__).parent / "golden" / "stationary_k0_forecast.csv"


class TestRwd:
    def test_linear_series(self):
        f = rwd_forecast([1.0, 2.0, 3.0, 4.0], 1)
        assert f.point == 5.0 and f.drift == 1.0 and f.sigma2 == 0.0

    def test_constant_series(self):
        assert rwd_forecast([2.0, 2.0, 2.0], 7).point == 2.0

    def test_two_points(self):
        f = rwd_forecast([0.0, 3.0], 2)
        assert f.point == 9.0 and f.sigma2 == 0.0

    def test_drift_is_mean_difference(self, rng):
        g = rng.normal(size=25).cumsum()
        f = rwd_forecast(g, 3)
        assert f.drift == pytest.approx(np.mean(np.diff(g)), rel=1e-12)
        assert f.point == pytest.approx(g[-1] + 3 * np.mean(np.diff(g)), rel=1e-12)
        assert f.sigma2 == pytest.approx(np.var(np.diff(g), ddof=1), rel=1e-10)

    def test_matrix_input(self, rng):
        g = rng.normal(size=(10, 3))
        f = rwd_forecast(g, 4)
        for k in range(3):
            assert f.point[k] == rwd_forecast(g[:, k], 4).point

    @given(st.floats(-5, 5), st.floats(-2, 2), st.integers(2, 40), st.integers(1, 20))
    def test_exact_on_lines(self, a, c, n, h):
        t = np.arange(1, n + 1)
        g = a + c * t
        assert rwd_forecast(g, h).point == pytest.approx(a + c * (n + h), abs=1e-9)

    @pytest.mark.parametrize("bad", [0, -1, 1.5])
    def test_bad_horizon(self, bad):
        with pytest.raises(DomainError):
            rwd_forecast([1.0, 2.0], bad)

    def test_single_observation(self):
        with pytest.raises(DomainError):
            rwd_forecast([1.0], 1)


def test_forecast_scores_zero_components():
    assert forecast_scores(np.zeros((5, 0)), 3).shape == (3, 0)


def test_combine_accumulates_in_order(rng):
    scores, phi = rng.normal(size=(4, 3)), rng.normal(size=(3, 6))
    np.testing.assert_allclose(combine(scores, phi), scores @ phi, rtol=1e-13)


def test_horizon_prefix_is_bit_identical():
    data = load_fixture("stationary")
    dec = clr_forward(data, make_weights(0.02, data.n_years))
    model = fit_wfpca(dec, 6)
    short = forecast_death_counts(model, dec, 3).curves
    long = forecast_death_counts(model, dec, 12).curves
    np.testing.assert_array_equal(short, long[:3])


def test_zero_components_return_alpha(rng):
    from conftest import random_series

    s = random_series(rng, 10, 20)
    dec = clr_forward(s, make_weights(0.1, 10))
    model = FpcaModel(np.zeros((0, 20)), np.zeros((10, 0)), np.array([]), dec.beta.copy())
    curves = forecast_death_counts(model, dec, 4).curves
    closed = s.radix * dec.alpha / dec.alpha.sum()
    for row in curves:
        np.testing.assert_allclose(row, closed, rtol=1e-12)


def test_linear_score_extrapolation():
    # Row closure adds a per-year constant to beta, so the surface spans phi and
    # the constant vector; both directions extrapolate linearly and the constant
    # one vanishes under closure.
    A, n = 111, 30
    phi = age_basis(1, A)[0]
    gamma = 0.3 + 0.05 * np.arange(n)
    base = -0.01 * np.arange(A)
    d = np.exp(base + np.outer(gamma, phi))
    d = 1000.0 * d / d.sum(axis=1, keepdims=True)
    series = LifeTableSeries(np.arange(1990, 1990 + n), np.arange(A), d, 1000.0)
    dec = clr_forward(series, make_weights(0, n))
    fc = forecast_death_counts(fit_wfpca(dec, 2), dec, 5)
    for h in range(1, 6):
        expected = np.exp(base + (gamma[-1] + 0.05 * h) * phi)
        expected = 1000.0 * expected / expected.sum()
        np.testing.assert_allclose(fc.curves[h - 1], expected, rtol=1e-9)


def test_rows_closed_and_positive():
    data = load_fixture("regime")
    dec = clr_forward(data, make_weights(0.05, data.n_years))
    fc = forecast_death_counts(fit_wfpca(dec, 6), dec, 10)
    assert fc.curves.shape == (10, 111)
    assert np.all(fc.curves > 0)
    np.testing.assert_allclose(fc.curves.sum(axis=1), data.radix, rtol=1e-12)
    assert fc.base_year == 2020


def test_golden_unweighted_forecast():
    data = load_fixture("stationary")
    dec = clr_forward(data, make_weights(0.0, data.n_years))
    fc = forecast_death_counts(fit_wfpca(dec, 6), dec, 10)
    golden = np.loadtxt(GOLDEN, delimiter=",", skiprows=1)
    assert golden.shape == (10 * 111, 3)
    np.testing.assert_allclose(fc.curves.ravel(), golden[:, 2], rtol=1e-9)


def test_bad_h():
    data = load_fixture("stationary")
    dec = clr_forward(data, make_weights(0.0, data.n_years))
    with pytest.raises(DomainError):
        forecast_death_counts(fit_wfpca(dec, 2), dec, 0)
