"""Geometrically decaying observation weights and the kappa search grid."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class WeightScheme:
    """Weight parameter ``kappa`` and the normalized weights over years 1..n.

    The last entry belongs to the most recent year.
    """

    kappa: float
    weights: np.ndarray

    @property
    def n(self) -> int:
        return len(self.weights)


def make_weights(kappa: float, n: int) -> WeightScheme:
    """Weights proportional to ``kappa * (1 - kappa) ** (n - t)``, t = 1..n.

    The raw geometric weights sum to ``1 - (1 - kappa) ** n``; they are divided
    by their actual sum so that they always sum to one. ``kappa = 0`` gives the
    uniform (unweighted) scheme and ``kappa = 1`` puts all mass on year n.
    """
    kappa = float(kappa)
    if not 0.0 <= kappa <= 1.0 or math.isnan(kappa):
        raise DomainError(f"kappa must lie in [0, 1], got {kappa}")
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    n = int(n)
    if kappa == 0.0:
        w = np.full(n, 1.0 / n)
    elif kappa == 1.0:
        w = np.zeros(n)
        w[-1] = 1.0
    else:
        # the common factor kappa cancels in the normalization
        lags = np.arange(n - 1, -1, -1, dtype=float)
        raw = np.exp(lags * math.log1p(-kappa))
        w = raw / math.fsum(raw)
    w.setflags(write=False)
    return WeightScheme(kappa, w)


def kappa_grid(lo: float = 0.0, hi: float = 0.3, step: float = 0.001) -> list[float]:
    """Inclusive arithmetic grid ``lo, lo + step, ..., hi``."""
    if not (0.0 <= lo < hi <= 1.0):
        raise DomainError(f"need 0 <= lo < hi <= 1, got lo={lo}, hi={hi}")
    if not step > 0:
        raise DomainError("step must be positive")
    count = int(round((hi - lo) / step)) + 1
    grid = [round(lo + i * step, 12) for i in range(count)]
    grid = [k for k in grid if k <= hi + 1e-12]
    if not grid:
        raise DomainError("empty kappa grid")
    return grid


def parse_grid(text: str) -> list[float]:
    """Parse ``lo:hi:step`` as used on the command line."""
    try:
        lo, hi, step = (float(p) for p in text.split(":"))
    except ValueError:
        raise DomainError(f"kappa grid must look like lo:hi:step, got {text!r}") from None
    return kappa_grid(lo, hi, step)
