"""Weighted centered log-ratio transform over time and its inverse."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DomainError
from .lifetable import LifeTableSeries
from .weighting import WeightScheme


@dataclass(frozen=True)
class ClrDecomposition:
    """Weighted geometric mean ``alpha`` and the centered series ``beta``.

    ``beta[t, u] = ln d_t(u) - sum_s w_s ln d_s(u)`` so the weighted time
    average of every column of ``beta`` is zero.
    """

    alpha: np.ndarray
    beta: np.ndarray
    scheme: WeightScheme
    radix: float
    years: np.ndarray
    ages: np.ndarray

    @property
    def log_alpha(self) -> np.ndarray:
        return np.log(self.alpha)


def clr_forward(series: LifeTableSeries, scheme: WeightScheme) -> ClrDecomposition:
    counts = np.asarray(series.counts, dtype=float)
    if scheme.n != counts.shape[0]:
        raise DomainError(
            f"weight scheme has {scheme.n} entries but series has {counts.shape[0]} years"
        )
    if np.any(counts <= 0):
        r, c = np.argwhere(counts <= 0)[0]
        raise DomainError(
            f"non-positive count at year {series.years[r]}, age {series.ages[c]}"
        )
    logd = np.log(counts)
    log_alpha = scheme.weights @ logd
    beta = logd - log_alpha
    alpha = np.exp(log_alpha)
    for a in (alpha, beta):
        a.setflags(write=False)
    return ClrDecomposition(
        alpha, beta, scheme, float(series.radix), series.years, series.ages
    )


def clr_inverse(beta_hat, alpha, radix, close: bool = True) -> np.ndarray:
    """Map clr-scale curves back to death counts closed to ``radix``.

    ``d(u) = exp(beta_hat(u)) * alpha(u)`` rescaled so each curve sums to the
    radix. The exponent is shifted by its row maximum first, which leaves the
    closed result unchanged and keeps ``exp`` from overflowing.

    With ``close=False`` the raw product is returned unscaled; an exponent
    that overflows is then a :class:`DomainError` naming the age index.
    """
    beta_hat = np.asarray(beta_hat, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha <= 0) or not np.all(np.isfinite(alpha)):
        raise DomainError("alpha must be finite and positive")
    if not np.all(np.isfinite(beta_hat)):
        bad = np.argwhere(~np.isfinite(np.atleast_2d(beta_hat)))[0]
        raise DomainError(f"non-finite clr value at age index {bad[-1]}")
    if beta_hat.shape[-1] != alpha.shape[-1]:
        raise DomainError("beta_hat and alpha have different age grids")
    squeeze = beta_hat.ndim == 1
    logd = np.atleast_2d(beta_hat) + np.log(alpha)
    if not close:
        too_big = np.argwhere(logd > np.log(np.finfo(float).max))
        if too_big.size:
            raise DomainError(f"exp overflow at age index {too_big[0][-1]}")
        out = np.exp(logd)
        return out[0] if squeeze else out
    out = _kernels.close_log_rows(np.ascontiguousarray(logd), float(radix))
    return out[0] if squeeze else out
