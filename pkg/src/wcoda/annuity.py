"""Cohort survival probabilities and temporary immediate annuity prices.

A person aged x at the forecast origin is followed along the cohort diagonal:
in forecast year n+1+j they are aged x+j, and their one-year death
probability is read from that year's table as ``d(x+j) / l(x+j)`` with
``l(u)`` the tail sum of the table's death counts. Benefits of 1 are paid at
the end of years 1..T and discounted with ``exp(-zeta * tau)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DomainError


@dataclass(frozen=True)
class AnnuityQuote:
    age: int
    maturity: int
    rate: float
    price: float
    lower: float | None = None
    upper: float | None = None


def _curves(forecasts) -> np.ndarray:
    curves = getattr(forecasts, "curves", forecasts)
    curves = np.asarray(curves, dtype=float)
    if curves.ndim != 2:
        raise DomainError("forecast tables must be a horizon x age matrix")
    if np.any(curves < 0) or not np.all(np.isfinite(curves)):
        raise DomainError("forecast death counts must be finite and nonnegative")
    return curves


def _check_cell(x, T, n_ages, n_horizons):
    terminal = n_ages - 1
    if int(x) != x or int(T) != T or x < 0 or T < 1:
        raise DomainError(f"age and maturity must be integers, got x={x}, T={T}")
    if x + T > terminal:
        raise DomainError(f"age {x} + maturity {T} exceeds terminal age {terminal}")
    if T > n_horizons:
        raise DomainError(f"maturity {T} needs {T} forecast years, only {n_horizons} given")


def survival_probabilities(forecasts, x: int, T: int) -> np.ndarray:
    """``tau p_x`` for tau = 1..T along the cohort diagonal."""
    curves = _curves(forecasts)
    H, A = curves.shape
    _check_cell(x, T, A, H)
    surv = np.empty(T)
    p = 1.0
    for j in range(T):
        table = curves[j]
        l = table[x + j :].sum()
        if l <= 0:
            if p == 0.0:
                surv[j:] = 0.0
                break
            raise DomainError(
                f"no survivors at age {x + j} in forecast year {j + 1}; q undefined"
            )
        q = table[x + j] / l
        p *= 1.0 - q
        surv[j] = p
    return surv


def bond_price(zeta: float, tau) -> np.ndarray | float:
    """Zero-coupon bond price ``exp(-zeta * tau)``."""
    if zeta < 0:
        warnings.warn(f"negative interest rate {zeta}", stacklevel=2)
    tau = np.asarray(tau)
    if np.any(tau < 1) or np.any(tau != np.floor(tau)):
        raise DomainError("tau must be a positive integer")
    out = np.exp(-zeta * tau.astype(float))
    return float(out) if out.ndim == 0 else out


def price_annuity(forecasts, x: int, T: int, zeta: float) -> AnnuityQuote:
    """Price of 1 per year for up to T years to a life aged x."""
    surv = survival_probabilities(forecasts, x, T)
    disc = bond_price(zeta, np.arange(1, T + 1))
    return AnnuityQuote(int(x), int(T), float(zeta), float(np.dot(disc, surv)))


def annuity_table(paths, ages, maturities, zeta: float) -> np.ndarray:
    """Prices for each age x maturity, NaN where age + maturity > terminal age.

    ``paths`` is (H, A) for one set of forecasts or (B, H, A) for an ensemble;
    the result is (len(ages), len(maturities)) or (B, len(ages), len(maturities)).
    """
    arr = np.asarray(getattr(paths, "paths", getattr(paths, "curves", paths)), dtype=float)
    single = arr.ndim == 2
    arr = np.ascontiguousarray(arr[None] if single else arr)
    ages = np.ascontiguousarray(ages, dtype=np.int64)
    mats = np.ascontiguousarray(maturities, dtype=np.int64)
    if np.any(ages < 0) or np.any(mats < 1):
        raise DomainError("ages must be >= 0 and maturities >= 1")
    if np.any(mats > arr.shape[1]):
        raise DomainError(
            f"maturity {int(mats.max())} exceeds the {arr.shape[1]} forecast horizons"
        )
    disc = np.ascontiguousarray(bond_price(zeta, np.arange(1, int(mats.max()) + 1)), dtype=float)
    disc = np.atleast_1d(disc)
    out = _kernels.annuity_prices(arr, ages, mats, disc)
    return out[0] if single else out


def price_annuity_interval(
    ensemble, x: int, T: int, zeta: float, nu: float = 0.05, point=None
) -> AnnuityQuote:
    """Price every replicate path and take the ``nu/2``, ``1 - nu/2`` quantiles.

    The quote's ``price`` is the price of ``point`` forecasts when given,
    otherwise the median replicate price.
    """
    if not 0 < nu < 1:
        raise DomainError("nu must lie in (0, 1)")
    paths = np.asarray(getattr(ensemble, "paths", ensemble), dtype=float)
    if paths.ndim != 3:
        raise DomainError("ensemble paths must be B x horizon x age")
    _check_cell(x, T, paths.shape[2], paths.shape[1])
    prices = annuity_table(paths, [x], [T], zeta)[:, 0, 0]
    lo, hi = np.quantile(prices, [nu / 2, 1 - nu / 2], method="linear")
    if point is not None:
        price = price_annuity(point, x, T, zeta).price
    else:
        price = float(np.median(prices))
    return AnnuityQuote(int(x), int(T), float(zeta), price, float(lo), float(hi))


def format_price_table(table, ages, maturities, lower=None, upper=None) -> str:
    """Aligned text shaped like an age x maturity price table; blanks where undefined."""
    width = 18 if lower is not None else 8
    out = [f"{'Age':>4}" + "".join(f"{'T=' + str(T):>{width}}" for T in maturities)]
    for i, x in enumerate(ages):
        cells = []
        for j, _ in enumerate(maturities):
            v = table[i][j]
            if v is None or (isinstance(v, float) and math.isnan(v)):
                cells.append(" " * width)
            elif lower is not None:
                cells.append(f"({lower[i][j]:.3f}, {upper[i][j]:.3f})".rjust(width))
            else:
                cells.append(f"{v:{width}.3f}")
        out.append(f"{x:>4}" + "".join(cells))
    return "\n".join(out)
