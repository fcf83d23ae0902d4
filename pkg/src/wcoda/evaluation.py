"""Forecast error metrics, the expanding-window backtest and kappa selection."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping

import numpy as np

from .clr import clr_forward
from .errors import DomainError
from .forecast import forecast_death_counts
from .lifetable import LifeTableSeries
from .uncertainty import bootstrap_paths, prediction_band
from .weighting import make_weights
from .wfpca import fit_wfpca

CRITERIA = ("kld", "jsd_s", "jsd_g", "cpd")
SELECTION_B = 200


# --------------------------------------------------------------------------
# divergences


def _densities(p, q):
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise DomainError(f"shape mismatch {p.shape} vs {q.shape}")
    if np.any(p <= 0) or np.any(q <= 0):
        raise DomainError("divergences need strictly positive densities")
    return p / p.sum(axis=-1, keepdims=True), q / q.sum(axis=-1, keepdims=True)


def kld(actual, forecast) -> float | np.ndarray:
    """Symmetric discrete Kullback-Leibler divergence ``D(p||q) + D(q||p)``.

    Both inputs are normalized to unit total along the last axis first.
    """
    p, q = _densities(actual, forecast)
    return np.sum((p - q) * (np.log(p) - np.log(q)), axis=-1)


def jsd(actual, forecast, mean_rule: str = "simple") -> float | np.ndarray:
    """Jensen-Shannon divergence ``D(p||m)/2 + D(q||m)/2``.

    ``mean_rule`` picks ``m = (p + q)/2`` ("simple") or ``m = sqrt(p q)``
    ("geometric"); the geometric mean is used as is, without renormalizing.
    """
    p, q = _densities(actual, forecast)
    lp, lq = np.log(p), np.log(q)
    if mean_rule == "geometric":
        # reduces to a quarter of the symmetric KLD; every term is >= 0
        return 0.25 * np.sum((p - q) * (lp - lq), axis=-1)
    if mean_rule != "simple":
        raise DomainError(f"unknown mean rule {mean_rule!r}")
    lm = np.log(0.5 * (p + q))
    out = 0.5 * np.sum(p * (lp - lm), axis=-1) + 0.5 * np.sum(q * (lq - lm), axis=-1)
    return np.maximum(out, 0.0)


def ecp_cpd(actuals, band, nu=None):
    """Empirical coverage and its distance from nominal coverage.

    ``band`` is a :class:`PredictionBand` or a ``(lower, upper)`` pair. With
    2-D inputs (horizon x age) one value per row is returned, otherwise one
    value over all cells.
    """
    if hasattr(band, "lower"):
        lower, upper = band.lower, band.upper
        nu = band.nu if nu is None else nu
    else:
        lower, upper = band
    if nu is None or not 0 < nu < 1:
        raise DomainError("nu must lie in (0, 1)")
    actuals = np.asarray(actuals, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if not (actuals.shape == lower.shape == upper.shape):
        raise DomainError(
            f"misaligned shapes: actuals {actuals.shape}, band {lower.shape}/{upper.shape}"
        )
    outside = (actuals > upper) | (actuals < lower)
    if actuals.ndim == 2:
        ecp = 1.0 - outside.mean(axis=1)
    else:
        ecp = 1.0 - outside.mean()
    return ecp, np.abs(ecp - (1.0 - nu))


# --------------------------------------------------------------------------
# backtest


@dataclass(frozen=True)
class BacktestPlan:
    """Training / validation / test split by final year of each segment."""

    train_end: int = 2000
    validation_end: int = 2010
    test_end: int = 2020
    max_horizon: int = 10

    def __post_init__(self):
        if not self.train_end < self.validation_end < self.test_end:
            raise DomainError("need train_end < validation_end < test_end")
        if self.max_horizon < 1:
            raise DomainError("max_horizon must be positive")
        for span in (self.validation_end - self.train_end, self.test_end - self.validation_end):
            if span < self.max_horizon:
                raise DomainError(
                    f"segment of {span} years is shorter than max_horizon {self.max_horizon}"
                )

    @classmethod
    def parse(cls, text: str, max_horizon: int = 10) -> "BacktestPlan":
        try:
            a, b, c = (int(p) for p in text.split(":"))
        except ValueError:
            raise DomainError(f"plan must look like 2000:2010:2020, got {text!r}") from None
        return cls(a, b, c, max_horizon)

    def segment(self, name: str) -> tuple[int, int]:
        """(last training year of the first origin, last evaluated year)."""
        if name == "validation":
            return self.train_end, self.validation_end
        if name == "test":
            return self.validation_end, self.test_end
        raise DomainError(f"unknown segment {name!r}")

    def origins(self, name: str) -> list[tuple[int, int]]:
        """(origin year, number of horizons) for every expanding-window fit."""
        first, last = self.segment(name)
        return [(o, min(last - o, self.max_horizon)) for o in range(first, last)]


@dataclass(frozen=True)
class MethodConfig:
    """Settings of the weighted CoDa forecaster used inside a backtest.

    ``kappa`` is one value or a mapping horizon -> kappa. ``fit_start``
    truncates every training window from below (e.g. 1950).
    """

    kappa: float | Mapping[int, float] = 0.0
    k: int | str = 6
    max_k: int | None = None
    score_on: str = "unweighted"
    fit_start: int | None = None
    nus: tuple[float, ...] = ()
    B: int = 1000
    seed: int = 0
    threads: int = 1

    def kappa_for(self, h: int) -> float:
        if isinstance(self.kappa, Mapping):
            return float(self.kappa[h])
        return float(self.kappa)


def coda_forecaster(config: MethodConfig):
    """Forecaster closure ``(train, H, kappa) -> (curves, {nu: band})``."""

    def forecaster(train: LifeTableSeries, H: int, kappa: float):
        decomp = clr_forward(train, make_weights(kappa, train.n_years))
        model = fit_wfpca(decomp, config.k, config.max_k, config.score_on)
        curves = forecast_death_counts(model, decomp, H).curves
        bands = {}
        if config.nus:
            ens = bootstrap_paths(model, decomp, H, config.B, config.seed, config.threads)
            bands = {nu: prediction_band(ens, nu) for nu in config.nus}
        return curves, bands

    return forecaster


@dataclass
class ErrorReport:
    """Per-horizon pooled errors; point metrics are raw (not x100)."""

    horizons: np.ndarray
    counts: np.ndarray
    kld: np.ndarray
    jsd_s: np.ndarray
    jsd_g: np.ndarray
    ecp: dict = field(default_factory=dict)
    cpd: dict = field(default_factory=dict)
    per_origin: list = field(default_factory=list)
    segment: str = "validation"

    def metric(self, name: str, nu: float | None = None) -> np.ndarray:
        if name == "cpd":
            if nu is None or nu not in self.cpd:
                raise DomainError("CPD requested but no bands at that level")
            return self.cpd[nu]
        if name == "ecp":
            return self.ecp[nu]
        if name not in ("kld", "jsd_s", "jsd_g"):
            raise DomainError(f"unknown metric {name!r}")
        return getattr(self, name)

    def means(self) -> dict:
        out = {m: float(np.mean(getattr(self, m))) for m in ("kld", "jsd_s", "jsd_g")}
        for nu in self.cpd:
            out[f"ecp_{nu:g}"] = float(np.mean(self.ecp[nu]))
            out[f"cpd_{nu:g}"] = float(np.mean(self.cpd[nu]))
        return out


def expanding_window_backtest(
    data: LifeTableSeries,
    plan: BacktestPlan,
    config: MethodConfig = MethodConfig(),
    segment: str = "validation",
    forecaster: Callable | None = None,
) -> ErrorReport:
    """Refit on expanding training windows and pool errors per horizon.

    At origin ``o`` the model sees years up to ``o`` (from ``fit_start`` if
    set) and forecasts every remaining year of the segment. Horizon h pools
    the forecasts of all origins that reach it; divergences and coverage are
    averaged over ``ages x forecasts`` cells.
    """
    first, last = plan.segment(segment)
    if data.years[0] > first - 1 or data.years[-1] < last:
        raise DomainError(
            f"data span {data.years[0]}-{data.years[-1]} does not cover the "
            f"{segment} segment ending {last} with training up to {first}"
        )
    forecaster = forecaster or coda_forecaster(config)
    H = plan.max_horizon
    A = data.n_ages
    year_index = {int(y): i for i, y in enumerate(data.years)}
    sums = {m: np.zeros(H) for m in ("kld", "jsd_s", "jsd_g")}
    outside = {nu: np.zeros(H) for nu in config.nus}
    counts = np.zeros(H, dtype=int)
    per_origin = []

    for origin, n_h in plan.origins(segment):
        train = data.select_years(config.fit_start, origin)
        by_kappa: dict[float, list[int]] = {}
        for h in range(1, n_h + 1):
            by_kappa.setdefault(config.kappa_for(h), []).append(h)
        for kappa, hs in sorted(by_kappa.items()):
            curves, bands = forecaster(train, max(hs), kappa)
            for h in hs:
                actual = data.counts[year_index[origin + h]]
                fc = curves[h - 1]
                row = {
                    "origin": origin,
                    "h": h,
                    "kappa": kappa,
                    "kld": float(kld(actual, fc)),
                    "jsd_s": float(jsd(actual, fc, "simple")),
                    "jsd_g": float(jsd(actual, fc, "geometric")),
                }
                for m in sums:
                    sums[m][h - 1] += row[m]
                for nu in config.nus:
                    band = bands[nu]
                    lo, up = band.lower[h - 1], band.upper[h - 1]
                    n_out = int(np.sum((actual > up) | (actual < lo)))
                    outside[nu][h - 1] += n_out
                    row[f"outside_{nu:g}"] = n_out
                counts[h - 1] += 1
                per_origin.append(row)

    if np.any(counts == 0):
        raise DomainError("some horizons received no forecasts")
    cells = A * counts
    ecp = {nu: 1.0 - outside[nu] / cells for nu in config.nus}
    cpd = {nu: np.abs(ecp[nu] - (1.0 - nu)) for nu in config.nus}
    return ErrorReport(
        np.arange(1, H + 1),
        counts,
        sums["kld"] / cells,
        sums["jsd_s"] / cells,
        sums["jsd_g"] / cells,
        ecp,
        cpd,
        per_origin,
        segment,
    )


@dataclass(frozen=True)
class KappaSelection:
    """Chosen kappa per horizon with the full criterion surface."""

    criterion: str
    nu: float | None
    grid: tuple
    kappas: dict
    values: np.ndarray  # (len(grid), H)


def select_kappa(
    data: LifeTableSeries,
    plan: BacktestPlan,
    criterion: str = "kld",
    grid=None,
    config: MethodConfig = MethodConfig(),
    nu: float | None = None,
    threads: int = 1,
) -> KappaSelection:
    """Per-horizon kappa minimizing a validation criterion, smallest on ties.

    ``criterion`` is one of kld, jsd_s, jsd_g or cpd (which needs ``nu``).
    CPD is evaluated from ``SELECTION_B`` replicates unless ``config.B`` is
    already smaller.
    """
    from .weighting import kappa_grid

    if criterion not in CRITERIA:
        raise DomainError(f"unknown criterion {criterion!r}")
    grid = tuple(sorted(set(float(k) for k in (kappa_grid() if grid is None else grid))))
    if not grid:
        raise DomainError("empty kappa grid")
    if criterion == "cpd":
        if nu is None:
            raise DomainError("CPD selection needs a significance level nu")
        cfg = replace(config, nus=(nu,), B=min(config.B, SELECTION_B), threads=1)
    else:
        cfg = replace(config, nus=(), threads=1)

    def score(kappa):
        rep = expanding_window_backtest(data, plan, replace(cfg, kappa=kappa), "validation")
        return rep.metric(criterion, nu)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            values = np.array(list(pool.map(score, grid)))
    else:
        values = np.array([score(k) for k in grid])
    kappas = {}
    for j in range(values.shape[1]):
        col = values[:, j]
        best = 0
        for i in range(1, len(grid)):
            if col[i] < col[best]:
                best = i
        kappas[j + 1] = grid[best]
    return KappaSelection(criterion, nu, grid, kappas, values)


def format_report(report: ErrorReport, scale: float = 100.0, sqrt_jsd: bool = False) -> str:
    """Aligned text table: one row per horizon plus the mean, metrics x scale."""
    f = math.sqrt if sqrt_jsd else (lambda v: v)
    # fixed 3 decimals unless that would print small nonzero values as 0.000
    point = np.concatenate([report.kld, report.jsd_s, report.jsd_g]) * scale
    small = np.any((point > 0) & (point < 5e-3))
    fmt = "8.2e" if small else "8.3f"
    nus = sorted(report.cpd)
    head = f"{'h':>4} {'n':>3} {'KLD':>8} {'JSD^s':>8} {'JSD^g':>8}"
    head += "".join(f" {'ECP' + format(nu, 'g'):>9} {'CPD' + format(nu, 'g'):>9}" for nu in nus)
    lines = [head]

    def row(label, n, k, js, jg, extras):
        s = f"{label:>4} {n:>3} {k * scale:{fmt}} {f(js) * scale:{fmt}} {f(jg) * scale:{fmt}}"
        return s + "".join(f" {e:9.3f}" for e in extras)

    for i, h in enumerate(report.horizons):
        extras = [v for nu in nus for v in (report.ecp[nu][i], report.cpd[nu][i])]
        lines.append(
            row(int(h), int(report.counts[i]), report.kld[i], report.jsd_s[i], report.jsd_g[i], extras)
        )
    extras = [v for nu in nus for v in (np.mean(report.ecp[nu]), np.mean(report.cpd[nu]))]
    lines.append(
        row(
            "Mean", "", np.mean(report.kld), np.mean(report.jsd_s), np.mean(report.jsd_g), extras
        )
    )
    return "\n".join(lines)
