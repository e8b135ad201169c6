"""Inexact augmented Lagrangian solver for nuclear norm plus weighted l1
recovery from partial, possibly corrupted observations."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import Array, as_mask, as_matrix


def default_lambda(n: int) -> float:
    """Regularization weight 1 / (24 sqrt(n ln n)).

    This is the analysis value; it balances the dual-certificate conditions
    asymptotically. At small n it is far below the level at which the sparse
    term stops absorbing the low-rank component, so experiment drivers
    typically override it (see the experiments module).
    """
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    return 1.0 / (24.0 * math.sqrt(n * math.log(n)))


def soft_threshold(A: Array, tau: float) -> Array:
    """Entrywise shrinkage sign(A) * max(|A| - tau, 0)."""
    return np.sign(A) * np.maximum(np.abs(A) - tau, 0.0)


def singular_value_threshold(A: Array, tau: float) -> tuple[Array, Array]:
    """Shrink the singular values of A by tau; returns (matrix, new values)."""
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    s2 = np.maximum(s - tau, 0.0)
    return (U * s2) @ Vt, s2


@dataclass(frozen=True)
class SolverConfig:
    """Inexact ALM parameters.

    lam of None resolves to default_lambda(max(n1, n2)) at solve time.
    penalty_init of None resolves to 1.25 / sigma_max(P_O(M)); the penalty
    grows geometrically and is capped at penalty_cap_factor times its
    initial value.
    """

    lam: float | None = None
    tol: float = 1e-7
    max_iters: int = 500
    growth: float = 1.5
    penalty_init: float | None = None
    penalty_cap_factor: float = 1e7
    record_history: bool = False

    def __post_init__(self):
        if self.lam is not None and self.lam <= 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if self.tol < 0:
            raise ValueError("tolerance must be non-negative")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.growth <= 1:
            raise ValueError("penalty growth factor must exceed 1")


@dataclass(frozen=True)
class IterationStats:
    residual: float
    objective: float
    off_support_max: float


@dataclass(frozen=True)
class Solution:
    """Solver output: estimates, the lambda actually used, and diagnostics."""

    L: Array
    S: Array
    lam: float
    iterations: int
    feasibility_residual: float
    objective: float
    converged: bool
    history: tuple[IterationStats, ...] = field(default=())


def solve(M, O, config: SolverConfig = SolverConfig()) -> Solution:
    """Minimize ||L||_* + lam * ||S||_1 subject to P_O(M) = P_O(L) + S with S
    supported on O.

    Inexact ALM iteration: shrink the masked residual into S, pass the
    S-corrected data through singular value thresholding for L (unobserved
    entries keep their previous L values), then update the dual variable on
    the mask and grow the penalty. Stops when the feasibility residual
    ||P_O(M - L - S)||_F / max(1, ||P_O(M)||_F) falls below tol.
    """
    M = as_matrix(M, name="M")
    O = as_mask(O, shape=M.shape)
    if not O.any():
        raise ValueError("observation mask is empty")
    lam = config.lam if config.lam is not None else default_lambda(max(M.shape))

    PM = np.where(O, M, 0.0)
    norm_PM = float(np.linalg.norm(PM, "fro"))
    denom = max(1.0, norm_PM)
    sigma1 = float(np.linalg.norm(PM, 2)) if norm_PM > 0 else 0.0
    if sigma1 == 0.0:
        # observed data identically zero: the zero pair is already optimal
        Z = np.zeros_like(M)
        return Solution(L=Z, S=Z.copy(), lam=lam, iterations=0,
                        feasibility_residual=0.0, objective=0.0, converged=True)

    mu = config.penalty_init if config.penalty_init is not None else 1.25 / sigma1
    if mu <= 0:
        raise ValueError(f"penalty must be positive, got {mu}")
    cap = config.penalty_cap_factor * mu

    L = np.zeros_like(M)
    S = np.zeros_like(M)
    Y = np.zeros_like(M)
    history: list[IterationStats] = []
    residual = math.inf
    converged = False
    iterations = 0
    s_vals = np.zeros(min(M.shape))

    for it in range(1, config.max_iters + 1):
        iterations = it
        A = np.where(O, M - L + Y / mu, 0.0)
        S = soft_threshold(A, lam / mu)
        B = np.where(O, M - S + Y / mu, L)
        L, s_vals = singular_value_threshold(B, 1.0 / mu)
        R = np.where(O, M - L - S, 0.0)
        Y = Y + mu * R
        residual = float(np.linalg.norm(R, "fro")) / denom
        if config.record_history:
            off = 0.0 if O.all() else float(
                max(np.abs(S[~O]).max(initial=0.0), np.abs(Y[~O]).max(initial=0.0))
            )
            history.append(IterationStats(
                residual=residual,
                objective=float(s_vals.sum() + lam * np.abs(S).sum()),
                off_support_max=off,
            ))
        if residual <= config.tol:
            converged = True
            break
        mu = min(config.growth * mu, cap)

    objective = float(s_vals.sum() + lam * np.abs(S).sum())
    return Solution(L=L, S=S, lam=lam, iterations=iterations,
                    feasibility_residual=residual, objective=objective,
                    converged=converged, history=tuple(history))


def relative_error(estimate, truth) -> float:
    """Frobenius relative error ||estimate - truth||_F / ||truth||_F."""
    estimate = as_matrix(estimate, name="estimate")
    truth = as_matrix(truth, name="truth")
    if estimate.shape != truth.shape:
        raise ValueError(f"shape mismatch: {estimate.shape} vs {truth.shape}")
    nt = np.linalg.norm(truth, "fro")
    if nt == 0.0:
        raise ValueError("truth matrix is zero; relative error undefined")
    return float(np.linalg.norm(estimate - truth, "fro") / nt)
