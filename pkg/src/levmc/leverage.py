"""Row and column leverage scores and the leverage-weighted norms."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import Array, SvdFactors, as_mask, as_matrix, reduced_svd


@dataclass(frozen=True)
class LeverageProfile:
    """Normalized row leverage scores mu (length n1, summing to n1) and
    column scores nu (length n2, summing to n2) of a rank-r matrix."""

    mu: Array
    nu: Array
    rank: int

    def __post_init__(self):
        if self.mu.ndim != 1 or self.nu.ndim != 1:
            raise ValueError("leverage scores must be 1-D arrays")
        if self.rank < 1:
            raise ValueError("rank must be at least 1")
        if np.any(self.mu < 0) or np.any(self.nu < 0):
            raise ValueError("leverage scores must be non-negative")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.mu.shape[0], self.nu.shape[0])


def leverage_scores(f: SvdFactors) -> LeverageProfile:
    """Leverage scores of the row and column spaces of an SVD factorization.

    mu_i = (n1 / r) * ||U^T e_i||^2 and nu_j = (n2 / r) * ||V^T e_j||^2.
    Each vector sums to its dimension; single scores are at most n/r.
    """
    n1, n2 = f.shape
    r = f.rank
    mu = (n1 / r) * np.sum(f.U**2, axis=1)
    nu = (n2 / r) * np.sum(f.V**2, axis=1)
    return LeverageProfile(mu=mu, nu=nu, rank=r)


def _weights(scores: Array, n: int, r: int) -> Array:
    # weight sqrt(n / (score * r)); zero scores map to +inf
    w = np.full(scores.shape, np.inf)
    pos = scores > 0
    w[pos] = np.sqrt(n / (scores[pos] * r))
    return w


def leverage_inf_norm(Z, prof: LeverageProfile) -> float:
    """Leverage-weighted entrywise max norm.

    max over (a, b) of |Z_ab| * sqrt(n1/(mu_a r)) * sqrt(n2/(nu_b r)).
    Entries with a zero leverage weight contribute +inf if nonzero and 0 if
    exactly zero.
    """
    Z = as_matrix(Z, name="Z")
    n1, n2 = prof.shape
    if Z.shape != (n1, n2):
        raise ValueError(f"Z has shape {Z.shape}, profile describes {(n1, n2)}")
    wr = _weights(prof.mu, n1, prof.rank)
    wc = _weights(prof.nu, n2, prof.rank)
    absZ = np.abs(Z)
    with np.errstate(invalid="ignore"):
        vals = absZ * wr[:, None] * wc[None, :]
    vals[absZ == 0] = 0.0
    return float(np.max(vals))


def leverage_inf2_norm(Z, prof: LeverageProfile) -> float:
    """Leverage-weighted max row/column 2-norm.

    max of sqrt(n1/(mu_a r)) * ||Z_{a,:}||_2 over rows a and
    sqrt(n2/(nu_b r)) * ||Z_{:,b}||_2 over columns b, with the same zero
    conventions as leverage_inf_norm.
    """
    Z = as_matrix(Z, name="Z")
    n1, n2 = prof.shape
    if Z.shape != (n1, n2):
        raise ValueError(f"Z has shape {Z.shape}, profile describes {(n1, n2)}")
    wr = _weights(prof.mu, n1, prof.rank)
    wc = _weights(prof.nu, n2, prof.rank)
    rows = np.linalg.norm(Z, axis=1)
    cols = np.linalg.norm(Z, axis=0)
    with np.errstate(invalid="ignore"):
        rv = rows * wr
        cv = cols * wc
    rv[rows == 0] = 0.0
    cv[cols == 0] = 0.0
    return float(max(np.max(rv), np.max(cv)))


def estimate_leverage(
    observed,
    O,
    r: int,
    p_hat: float,
    fallback_uniform: bool = False,
) -> LeverageProfile:
    """Estimate leverage scores from partially observed data.

    Zero-fills the unobserved entries, rescales by 1/p_hat, takes the best
    rank-r approximation, and returns its leverage scores. The estimate is
    approximate by design and inherits any corruption present in the data.

    Parameters
    ----------
    observed : array
        Observed data matrix (entries outside O are ignored).
    O : boolean array
        Observation mask.
    r : int
        Target rank of the approximation.
    p_hat : float in (0, 1]
        Assumed observation probability used for rescaling.
    fallback_uniform : bool
        If the masked data is identically zero, return the uniform profile
        (all scores 1) instead of raising.
    """
    observed = as_matrix(observed, name="observed")
    O = as_mask(O, shape=observed.shape)
    if not (0 < p_hat <= 1):
        raise ValueError(f"p_hat must lie in (0, 1], got {p_hat}")
    if r < 1:
        raise ValueError(f"rank must be at least 1, got {r}")
    n1, n2 = observed.shape
    X = np.where(O, observed, 0.0) / p_hat
    if not np.any(X):
        if fallback_uniform:
            return LeverageProfile(mu=np.ones(n1), nu=np.ones(n2), rank=r)
        raise ValueError("masked data is identically zero; no leverage structure to estimate")
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    achievable = int(np.sum(s > 1e-12 * s[0]))
    if achievable < r:
        raise ValueError(
            f"requested rank {r} exceeds achievable numerical rank {achievable}"
        )
    f = SvdFactors(U=np.ascontiguousarray(U[:, :r]), sigma=s[:r].copy(),
                   V=np.ascontiguousarray(Vt[:r].T))
    return leverage_scores(f)
