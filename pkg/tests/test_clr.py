import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_series
from wcoda.clr import clr_forward, clr_inverse
from wcoda.errors import DomainError
from wcoda.lifetable import LifeTableSeries
from wcoda.weighting import make_weights


def test_constant_surface():
    s = LifeTableSeries([1, 2, 3], [0, 1, 2, 3], np.full((3, 4), 25.0), radix=100)
    dec = clr_forward(s, make_weights(0.3, 3))
    np.testing.assert_allclose(dec.alpha, 25.0, rtol=1e-14)
    np.testing.assert_allclose(dec.beta, 0.0, atol=1e-14)


def test_hand_log_arithmetic():
    e = math.e
    # single age: rows sum to their own value, so use radix per row via raw decomposition
    s = LifeTableSeries([1, 2], [0, 1], [[e, 30 - e], [e**3, 30 - e**3]], radix=30)
    dec = clr_forward(s, make_weights(0.0, 2))
    assert dec.alpha[0] == pytest.approx(e**2, rel=1e-14)
    np.testing.assert_allclose(dec.beta[:, 0], [-1.0, 1.0], atol=1e-14)


def test_kappa_one_centers_on_last_year(rng):
    s = random_series(rng, 5, 12)
    dec = clr_forward(s, make_weights(1.0, 5))
    np.testing.assert_allclose(dec.alpha, s.counts[-1], rtol=1e-13)
    np.testing.assert_allclose(dec.beta[-1], 0.0, atol=1e-13)


def test_weight_length_mismatch(rng):
    with pytest.raises(DomainError):
        clr_forward(random_series(rng, 5, 12), make_weights(0.1, 4))


def test_inverse_of_zero_is_closed_mean():
    alpha = np.array([1.0, 2.0, 5.0])
    np.testing.assert_allclose(clr_inverse(np.zeros(3), alpha, 80), [10, 20, 50])


def test_inverse_closure_random(rng):
    beta = rng.normal(0, 3, (7, 111))
    alpha = rng.uniform(0.1, 10, 111)
    out = clr_inverse(beta, alpha, 100_000)
    assert np.all(out > 0)
    for row in out:
        assert math.fsum(row) == pytest.approx(100_000, rel=1e-13)


def test_inverse_extreme_values_stay_finite():
    beta = np.array([800.0, 0.0, -800.0])
    out = clr_inverse(beta, np.ones(3), 1.0)
    assert np.all(np.isfinite(out))
    assert out[0] == pytest.approx(1.0)


def test_inverse_rejects_non_finite():
    with pytest.raises(DomainError, match="age index 1"):
        clr_inverse(np.array([0.0, np.inf]), np.ones(2), 1.0)


@given(st.integers(2, 30), st.floats(0, 0.99), st.integers(0, 2**31))
def test_round_trip_and_centering(n, kappa, seed):
    s = random_series(np.random.default_rng(seed), n, 111)
    dec = clr_forward(s, make_weights(kappa, n))
    back = clr_inverse(dec.beta, dec.alpha, s.radix)
    np.testing.assert_allclose(back, s.counts, rtol=1e-9)
    assert np.max(np.abs(dec.scheme.weights @ dec.beta)) < 1e-8
    assert np.all(dec.alpha > 0)


@given(st.floats(1e-3, 1e3), st.integers(0, 2**31))
def test_scale_equivariance(c, seed):
    s = random_series(np.random.default_rng(seed), 6, 20)
    scaled = LifeTableSeries(s.years, s.ages, s.counts * c, s.radix * c)
    w = make_weights(0.2, 6)
    a, b = clr_forward(s, w), clr_forward(scaled, w)
    np.testing.assert_allclose(b.beta, a.beta, atol=1e-10)
    np.testing.assert_allclose(b.alpha, a.alpha * c, rtol=1e-10)


def test_unclosed_inverse_is_raw_product():
    beta = np.array([[0.1, -0.2, 0.3]])
    alpha = np.array([2.0, 3.0, 4.0])
    np.testing.assert_allclose(clr_inverse(beta, alpha, 1.0, close=False), np.exp(beta) * alpha)
    with pytest.raises(DomainError, match="age index 1"):
        clr_inverse(np.array([0.0, 800.0, 0.0]), alpha, 1.0, close=False)
