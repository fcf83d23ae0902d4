"""Weighted functional principal component decomposition on the clr scale.

Eigenfunctions come from the SVD of the weighted matrix ``beta* = diag(w) beta``
(rows scaled by their year weights). Inner products over age are plain sums
over the unit-spaced age grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clr import ClrDecomposition
from .errors import DomainError

DEFAULT_K = 6
SCORE_ON = ("unweighted", "weighted")


@dataclass(frozen=True)
class FpcaModel:
    """Retained eigenfunctions, their scores and the residual functions.

    Attributes
    ----------
    phi : (K, A) orthonormal eigenfunctions
    scores : (n, K) scores of the scored series on ``phi``
    eigenvalues : all squared singular values of ``beta*``, nonincreasing
    residuals : (n, A) scored series minus its rank-K reconstruction
    score_on : "unweighted" scores ``beta``; "weighted" scores ``beta*``
    """

    phi: np.ndarray
    scores: np.ndarray
    eigenvalues: np.ndarray
    residuals: np.ndarray
    score_on: str = "unweighted"
    weighted: bool = True

    @property
    def K(self) -> int:
        return self.phi.shape[0]

    def reconstruct(self) -> np.ndarray:
        return self.scores @ self.phi + self.residuals


def _fix_signs(vt: np.ndarray) -> np.ndarray:
    """Flip rows so each has a nonnegative sum (largest entry decides a zero sum)."""
    vt = vt.copy()
    for k, row in enumerate(vt):
        s = row.sum()
        if abs(s) <= 1e-12 * max(np.abs(row).sum(), 1.0):
            s = row[np.argmax(np.abs(row))]
        if s < 0:
            vt[k] = -row
    return vt


def select_k_evr(eigenvalues, max_k=None) -> int:
    """Eigenvalue-ratio choice of the number of components.

    ``K = argmax_{1 <= k <= max_k} lambda_k / lambda_{k+1}`` over the positive
    eigenvalues, smallest k on ties.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.size < 2:
        raise DomainError("need at least two eigenvalues")
    if np.any(np.diff(lam) > 1e-12 * max(lam[0], 1.0)):
        raise DomainError("eigenvalues must be nonincreasing")
    tol = lam[0] * 1e-12
    positive = int(np.sum(lam > tol))
    if positive < 2:
        raise DomainError("need at least two positive eigenvalues")
    limit = positive - 1
    if max_k is not None:
        if max_k < 1:
            raise DomainError("max_k must be at least 1")
        limit = min(limit, int(max_k))
    ratios = lam[:limit] / lam[1 : limit + 1]
    return int(np.argmax(ratios)) + 1


def fit_wfpca(
    decomp: ClrDecomposition,
    k=DEFAULT_K,
    max_k=None,
    score_on: str = "unweighted",
) -> FpcaModel:
    """Fit the weighted decomposition.

    Parameters
    ----------
    k : int or "evr"
        Fixed number of components, or the eigenvalue-ratio rule with
        ``max_k`` (default ``min(n, A) // 2``).
    score_on : {"unweighted", "weighted"}
        Which series the scores and residuals refer to.
    """
    if score_on not in SCORE_ON:
        raise DomainError(f"score_on must be one of {SCORE_ON}")
    beta = np.asarray(decomp.beta, dtype=float)
    n, A = beta.shape
    if n < 2:
        raise DomainError("need at least two years to fit")
    w = np.asarray(decomp.scheme.weights, dtype=float)
    bstar = w[:, None] * beta

    _, s, vt = np.linalg.svd(bstar, full_matrices=False)
    eigenvalues = s**2
    total = eigenvalues[0] if eigenvalues.size else 0.0
    rank = int(np.sum(s > s[0] * max(n, A) * np.finfo(float).eps)) if total > 0 else 0

    if isinstance(k, str):
        if k != "evr":
            raise DomainError(f"unknown k rule {k!r}")
        if max_k is None:
            max_k = max(min(n, A) // 2, 1)
        K = select_k_evr(eigenvalues, max_k)
    else:
        K = int(k)
        if K < 0 or K > min(n, A):
            raise DomainError(f"K={K} outside 0..{min(n, A)}")
        if total > 0 and K > rank:
            raise DomainError(f"K={K} exceeds the numerical rank {rank} of the data")

    phi = _fix_signs(vt[:K])
    target = beta if score_on == "unweighted" else bstar
    if total > 0:
        scores = target @ phi.T
    else:
        scores = np.zeros((n, K))
    residuals = target - scores @ phi
    for a in (phi, scores, eigenvalues, residuals):
        a.setflags(write=False)
    return FpcaModel(phi, scores, eigenvalues, residuals, score_on)
