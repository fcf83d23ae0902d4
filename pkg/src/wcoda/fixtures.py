"""Synthetic life-table surfaces used as bundled fixtures and in tests.

Every generator builds ``log d_t(u) = log f(u) + beta_t(u)`` on the 111-age
grid, with ``f`` a plausible age-at-death shape (infant deaths plus a Gumbel
mode near age 78) and ``beta_t`` a combination of orthonormal cosine
functions over age. Rows are closed to the radix.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np

from .lifetable import DEFAULT_RADIX, LifeTableSeries, write_counts_csv

N_AGES = 111
BUNDLED = {
    "stationary": "stationary.csv",
    "regime": "regime_change.csv",
    "gaussian": "gaussian.csv",
}


def base_log_density(n_ages: int = N_AGES) -> np.ndarray:
    u = np.arange(n_ages, dtype=float)
    z = (u - 78.0) / 10.0
    old = np.exp(z - np.exp(z))
    infant = np.exp(-u / 1.5)
    f = 0.9 * old / old.sum() + 0.1 * infant / infant.sum()
    return np.log(f)


def age_basis(n_funcs: int, n_ages: int = N_AGES) -> np.ndarray:
    """(n_funcs, n_ages) orthonormal cosine functions, frequencies 1..n_funcs."""
    u = np.arange(n_ages) + 0.5
    psi = np.array([np.cos(np.pi * k * u / n_ages) for k in range(1, n_funcs + 1)])
    return psi / np.linalg.norm(psi, axis=1, keepdims=True)


def _series(years, beta, radix):
    logd = base_log_density(beta.shape[1]) + beta
    d = np.exp(logd - logd.max(axis=1, keepdims=True))
    d = radix * d / d.sum(axis=1, keepdims=True)
    return LifeTableSeries(np.asarray(years), np.arange(beta.shape[1]), d, radix)


def stationary_surface(start=1901, end=2020, seed=11, radix=DEFAULT_RADIX):
    """Scores along six age functions are i.i.d. Gaussian around zero."""
    rng = np.random.default_rng(seed)
    years = np.arange(start, end + 1)
    psi = age_basis(6)
    scale = 0.3 * 0.7 ** np.arange(6)
    z = rng.standard_normal((len(years), 6)) * scale
    beta = z @ psi + 0.01 * rng.standard_normal((len(years), N_AGES))
    return _series(years, beta, radix)


def regime_change_surface(start=1901, end=2020, change=1991, seed=12, radix=DEFAULT_RADIX):
    """Noisy stationary history, then a steady trend along a new age function.

    Before ``change`` the scores on six age functions are large i.i.d. noise.
    From ``change`` on that noise shrinks and a linear drift appears along a
    seventh function that the history never excited.
    """
    rng = np.random.default_rng(seed)
    years = np.arange(start, end + 1)
    psi = age_basis(7)
    recent = years >= change
    noise_sd = np.where(recent, 0.03, 0.5)[:, None]
    z = rng.standard_normal((len(years), 6)) * noise_sd
    trend = np.where(recent, 0.05 * (years - change + 1), 0.0)
    beta = z @ psi[:6] + trend[:, None] * psi[6]
    beta += 0.01 * rng.standard_normal((len(years), N_AGES))
    return _series(years, beta, radix)


def gaussian_surface(
    start=1951,
    end=2020,
    seed=13,
    radix=DEFAULT_RADIX,
    drift=(-0.04, 0.02),
    sd=(0.06, 0.04),
    noise=0.01,
):
    """Random-walk-with-drift scores with Gaussian innovations plus white noise."""
    rng = np.random.default_rng(seed)
    years = np.arange(start, end + 1)
    K = len(drift)
    psi = age_basis(K)
    steps = np.asarray(drift) + rng.standard_normal((len(years), K)) * np.asarray(sd)
    scores = np.cumsum(steps, axis=0)
    beta = scores @ psi + noise * rng.standard_normal((len(years), N_AGES))
    return _series(years, beta, radix)


GENERATORS = {
    "stationary": stationary_surface,
    "regime": regime_change_surface,
    "gaussian": gaussian_surface,
}


def bundled_path(name: str) -> Path:
    if name not in BUNDLED:
        raise KeyError(f"unknown fixture {name!r}; choose from {sorted(BUNDLED)}")
    return Path(str(resources.files("wcoda") / "data" / BUNDLED[name]))


def load_fixture(name: str) -> LifeTableSeries:
    from .lifetable import load_series

    with open(bundled_path(name), "rb") as fh:
        return load_series(fh, "csv")


def write_bundled(directory: Path) -> list[Path]:
    """Regenerate the bundled CSV fixtures into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, filename in BUNDLED.items():
        path = directory / filename
        with open(path, "w", newline="\n") as fh:
            write_counts_csv(GENERATORS[name](), fh)
        written.append(path)
    return written
