"""Pure numpy implementations of the hot kernels.

Used when the compiled extension is unavailable or ``WCODA_PURE_PYTHON=1``.
Signatures and results match ``_ckernels`` to rounding.
"""

import numpy as np


def close_log_rows(logd, radix):
    """``radix * exp(logd) / sum(exp(logd))`` row by row, overflow-safe."""
    logd = np.asarray(logd, dtype=float)
    z = np.exp(logd - logd.max(axis=-1, keepdims=True))
    return radix * z / z.sum(axis=-1, keepdims=True)


def assemble_paths(point, errors, err_idx, resid, res_idx, phi, log_alpha, radix):
    """Bootstrap death-count paths.

    point : (H, K) point forecasts of the scores
    errors : (H, M, K) score forecast errors, padded along M
    err_idx : (B, H, K) draws into ``errors[h, :, k]``
    resid : (n, A) residual functions
    res_idx : (B, H) draws into ``resid``
    phi : (K, A) eigenfunctions
    """
    H, K = point.shape
    h = np.arange(H)[None, :, None]
    k = np.arange(K)[None, None, :]
    scores = point[None, :, :] + errors[h, err_idx, k]  # (B, H, K)
    logd = np.einsum("bhk,ka->bha", scores, phi) + resid[res_idx] + log_alpha
    return close_log_rows(logd, radix)


def annuity_prices(paths, ages, maturities, discounts):
    """Temporary immediate annuity prices for every replicate.

    paths : (B, H, A) death-count tables, horizon j + 1 in row j
    ages, maturities : int arrays
    discounts : (Tmax,) discount factors for tau = 1..Tmax

    Returns (B, len(ages), len(maturities)); cells with age + T beyond the
    terminal age are NaN.
    """
    paths = np.asarray(paths, dtype=float)
    B, H, A = paths.shape
    terminal = A - 1
    tail = np.cumsum(paths[:, :, ::-1], axis=2)[:, :, ::-1]  # l(u) per table
    out = np.full((B, len(ages), len(maturities)), np.nan)
    tmax = int(max(maturities))
    for i, x in enumerate(ages):
        steps = min(tmax, terminal - x, H)
        if steps <= 0:
            continue
        j = np.arange(steps)
        d = paths[:, j, x + j]
        l = tail[:, j, x + j]
        q = np.divide(d, l, out=np.ones_like(d), where=l > 0)
        surv = np.cumprod(1.0 - q, axis=1)
        value = np.cumsum(surv * discounts[:steps], axis=1)
        for m, T in enumerate(maturities):
            if x + T <= terminal and T <= H:
                out[:, i, m] = value[:, T - 1]
    return out
