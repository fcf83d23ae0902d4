"""Bootstrap future sample paths and pointwise prediction bands.

Two error sources are resampled with replacement: in-sample h-step RWD
forecast errors of each score series, and whole residual functions of the
decomposition. Replicate ``b`` draws from its own Philox stream (key = seed,
counter offset = b), so an ensemble does not depend on how replicates are
scheduled across threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .clr import ClrDecomposition
from .errors import DomainError
from .forecast import forecast_scores
from .wfpca import FpcaModel

DEFAULT_B = 1000


@dataclass(frozen=True)
class BootstrapEnsemble:
    """``paths[b, h - 1, u]`` is replicate b's death count at age u, horizon h."""

    paths: np.ndarray
    seed: int
    radix: float
    ages: np.ndarray

    @property
    def B(self) -> int:
        return self.paths.shape[0]

    @property
    def H(self) -> int:
        return self.paths.shape[1]


@dataclass(frozen=True)
class PredictionBand:
    nu: float
    lower: np.ndarray
    upper: np.ndarray

    @property
    def level(self) -> float:
        return 1.0 - self.nu


def score_forecast_errors(scores, h: int) -> np.ndarray:
    """In-sample h-step RWD errors ``g_t - g_{t|t-h}`` for t = h+1..n.

    The forecast from origin ``m = t - h`` uses ``g_1..g_m``; with a single
    observation (m = 1) the drift is taken as zero. Returns (n - h,) for a
    1-D input and (n - h, K) for (n, K).
    """
    g = np.asarray(scores, dtype=float)
    one_d = g.ndim == 1
    g = g.reshape(len(g), -1)
    n = g.shape[0]
    if int(h) != h or h < 1:
        raise DomainError(f"horizon must be a positive integer, got {h}")
    if n <= h:
        raise DomainError(f"no {h}-step errors from {n} observations")
    m = np.arange(1, n - h + 1)  # origin lengths
    last = g[m - 1]
    drift = np.zeros_like(last)
    ok = m >= 2
    drift[ok] = (last[ok] - g[0]) / (m[ok, None] - 1)
    errors = g[m - 1 + h] - (last + h * drift)
    return errors[:, 0] if one_d else errors


def replicate_generator(seed: int, b: int) -> np.random.Generator:
    """Counter-based generator for replicate ``b`` under ``seed``."""
    return np.random.Generator(np.random.Philox(key=int(seed), counter=[0, 0, 0, int(b)]))


def _draw_indices(seed, B, H, K, n_errors, n_resid):
    err_idx = np.empty((B, H, K), dtype=np.int64)
    res_idx = np.empty((B, H), dtype=np.int64)
    sizes = np.asarray(n_errors)[:, None]
    for b in range(B):
        u = replicate_generator(seed, b).random((H, K + 1))
        err_idx[b] = np.minimum((u[:, :K] * sizes).astype(np.int64), sizes - 1)
        res_idx[b] = np.minimum((u[:, K] * n_resid).astype(np.int64), n_resid - 1)
    return err_idx, res_idx


def bootstrap_paths(
    model: FpcaModel,
    decomp: ClrDecomposition,
    H: int,
    B: int = DEFAULT_B,
    seed: int = 0,
    threads: int = 1,
) -> BootstrapEnsemble:
    """Resample B future paths for horizons 1..H."""
    if int(H) != H or H < 1:
        raise DomainError("H must be a positive integer")
    if int(B) != B or B < 1:
        raise DomainError("B must be a positive integer")
    H, B = int(H), int(B)
    scores = np.asarray(model.scores, dtype=float)
    n, K = scores.shape
    if n <= H:
        raise DomainError(
            f"horizon {H} leaves no score forecast errors from {n} years; "
            "use a shorter horizon or a longer series"
        )
    point = np.ascontiguousarray(forecast_scores(scores, H))
    n_errors = [n - h for h in range(1, H + 1)]
    errors = np.zeros((H, max(n_errors), K))
    for h in range(1, H + 1):
        if K:
            errors[h - 1, : n - h] = score_forecast_errors(scores, h)
    resid = np.ascontiguousarray(model.residuals, dtype=float)
    phi = np.ascontiguousarray(model.phi, dtype=float)
    log_alpha = np.ascontiguousarray(np.log(decomp.alpha))
    err_idx, res_idx = _draw_indices(seed, B, H, K, n_errors, n)

    def run(lo, hi):
        return _kernels.assemble_paths(
            point, errors, err_idx[lo:hi], resid, res_idx[lo:hi], phi,
            log_alpha, float(decomp.radix),
        )

    threads = max(1, int(threads))
    if threads == 1 or B < 2 * threads:
        paths = run(0, B)
    else:
        edges = np.linspace(0, B, threads + 1).astype(int)
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(run, edges[:-1], edges[1:]))
        paths = np.concatenate(parts, axis=0)
    paths.setflags(write=False)
    return BootstrapEnsemble(paths, int(seed), float(decomp.radix), decomp.ages)


def prediction_band(ensemble: BootstrapEnsemble, nu: float) -> PredictionBand:
    """Pointwise ``nu/2`` and ``1 - nu/2`` quantiles across replicates.

    Quantiles interpolate linearly between order statistics: with sorted
    values ``x_(1..B)`` the p-quantile is taken at position ``(B - 1) p``.
    """
    if not 0.0 < nu < 1.0:
        raise DomainError(f"nu must lie in (0, 1), got {nu}")
    paths = ensemble.paths if isinstance(ensemble, BootstrapEnsemble) else np.asarray(ensemble)
    if paths.shape[0] < 2:
        raise DomainError("need at least two replicates for a band")
    lower, upper = np.quantile(paths, [nu / 2.0, 1.0 - nu / 2.0], axis=0, method="linear")
    return PredictionBand(float(nu), lower, upper)
