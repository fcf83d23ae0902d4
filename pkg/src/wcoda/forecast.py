"""Random-walk-with-drift score forecasts and death-count point forecasts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clr import ClrDecomposition, clr_inverse
from .errors import DomainError
from .wfpca import FpcaModel


@dataclass(frozen=True)
class ScoreForecast:
    horizon: int
    point: np.ndarray
    drift: np.ndarray
    sigma2: np.ndarray


@dataclass(frozen=True)
class ForecastSet:
    """Point forecasts ``curves[h - 1]`` for horizons 1..H."""

    horizons: np.ndarray
    curves: np.ndarray
    radix: float
    ages: np.ndarray
    base_year: int | None = None

    @property
    def H(self) -> int:
        return len(self.horizons)


def rwd_forecast(series, h: int) -> ScoreForecast:
    """h-step random walk with drift forecast of one or several score series.

    ``series`` is (n,) or (n, K). The drift is the mean first difference,
    ``(g_n - g_1) / (n - 1)``.
    """
    g = np.asarray(series, dtype=float)
    one_d = g.ndim == 1
    g = g.reshape(len(g), -1)
    n = g.shape[0]
    if n < 2:
        raise DomainError("random walk with drift needs at least two observations")
    if int(h) != h or h < 1:
        raise DomainError(f"horizon must be a positive integer, got {h}")
    drift = (g[-1] - g[0]) / (n - 1)
    point = g[-1] + h * drift
    if n > 2:
        sigma2 = np.var(np.diff(g, axis=0) - drift, axis=0, ddof=1)
    else:
        sigma2 = np.zeros(g.shape[1])
    if one_d:
        point, drift, sigma2 = point[0], drift[0], sigma2[0]
    return ScoreForecast(int(h), point, drift, sigma2)


def forecast_scores(scores, H: int) -> np.ndarray:
    """(H, K) matrix of RWD point forecasts for horizons 1..H."""
    scores = np.asarray(scores, dtype=float)
    if H < 1:
        raise DomainError("H must be at least 1")
    if scores.shape[1] == 0:
        return np.zeros((H, 0))
    return np.array([rwd_forecast(scores, h).point for h in range(1, H + 1)]).reshape(H, -1)


def combine(scores, phi) -> np.ndarray:
    """``sum_k scores[..., k] * phi[k]`` accumulated in component order."""
    scores = np.asarray(scores, dtype=float)
    out = np.zeros(scores.shape[:-1] + (phi.shape[1],))
    for k in range(phi.shape[0]):
        out += scores[..., k, None] * phi[k]
    return out


def forecast_death_counts(
    model: FpcaModel, decomp: ClrDecomposition, H: int, close: bool = True
) -> ForecastSet:
    """Point forecasts of death counts for horizons 1..H.

    ``close=False`` skips rescaling each curve to the radix.
    """
    if int(H) != H or H < 1:
        raise DomainError(f"H must be a positive integer, got {H}")
    H = int(H)
    gamma = forecast_scores(model.scores, H)
    beta_hat = combine(gamma, model.phi)
    curves = clr_inverse(beta_hat, decomp.alpha, decomp.radix, close)
    curves.setflags(write=False)
    return ForecastSet(
        np.arange(1, H + 1), curves, decomp.radix, decomp.ages, int(decomp.years[-1])
    )
