"""Dense linear algebra kernels: reduced SVD factors, tangent-space and mask
projections, and a matrix-free operator norm estimate."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

Array = np.ndarray

DEFAULT_RANK_TOL = 1e-9


def as_matrix(M, name: str = "matrix") -> Array:
    """Validate and return a finite float64 2-D array."""
    A = np.asarray(M, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got ndim={A.ndim}")
    if A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError(f"{name} must have at least one row and column, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains non-finite entries")
    return A


def as_mask(O, shape=None, name: str = "mask") -> Array:
    """Validate a boolean index mask, optionally against an expected shape."""
    A = np.asarray(O)
    if A.dtype != np.bool_:
        raise TypeError(f"{name} must be a boolean array, got dtype {A.dtype}")
    if A.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got ndim={A.ndim}")
    if shape is not None and A.shape != tuple(shape):
        raise ValueError(f"{name} has shape {A.shape}, expected {tuple(shape)}")
    return A


def mask_from_pairs(n1: int, n2: int, pairs) -> Array:
    """Build a boolean mask from an iterable of (i, j) index pairs.

    Out-of-range indices raise; duplicates are allowed and collapse to a
    single membership.
    """
    if n1 < 1 or n2 < 1:
        raise ValueError(f"mask dimensions must be positive, got ({n1}, {n2})")
    O = np.zeros((n1, n2), dtype=bool)
    for i, j in pairs:
        i = int(i)
        j = int(j)
        if not (0 <= i < n1 and 0 <= j < n2):
            raise ValueError(f"index pair ({i}, {j}) out of range for ({n1}, {n2})")
        O[i, j] = True
    return O


def mask_to_pairs(O: Array) -> list[tuple[int, int]]:
    """Return the members of a mask as row-major sorted (i, j) pairs."""
    O = as_mask(O)
    ii, jj = np.nonzero(O)
    return [(int(i), int(j)) for i, j in zip(ii, jj)]


@dataclass(frozen=True)
class SvdFactors:
    """Reduced SVD factors U, sigma, V with M ~ U @ diag(sigma) @ V.T.

    U is n1 x r and V is n2 x r with orthonormal columns; sigma holds the r
    singular values in non-increasing order, all strictly positive.
    """

    U: Array
    sigma: Array
    V: Array

    def __post_init__(self):
        U, s, V = self.U, self.sigma, self.V
        if U.ndim != 2 or V.ndim != 2 or s.ndim != 1:
            raise ValueError("SvdFactors expects 2-D U, V and 1-D sigma")
        r = s.shape[0]
        if U.shape[1] != r or V.shape[1] != r:
            raise ValueError(
                f"factor widths disagree: U has {U.shape[1]} columns, "
                f"V has {V.shape[1]}, sigma has {r} values"
            )
        if r < 1:
            raise ValueError("rank must be at least 1")
        if np.any(s <= 0):
            raise ValueError("singular values must be strictly positive")
        if np.any(np.diff(s) > 0):
            raise ValueError("singular values must be non-increasing")

    @property
    def rank(self) -> int:
        return self.sigma.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return (self.U.shape[0], self.V.shape[0])

    def reconstruct(self) -> Array:
        return (self.U * self.sigma) @ self.V.T


def reduced_svd(M, rank_tol: float = DEFAULT_RANK_TOL) -> SvdFactors:
    """Compute reduced SVD factors of M, truncated at the numerical rank.

    Parameters
    ----------
    M : array, shape (n1, n2)
        Matrix with finite entries, not identically zero.
    rank_tol : float
        Relative cutoff: singular values > rank_tol * sigma_max are kept.

    Returns
    -------
    SvdFactors
        Orthonormal U, V (within 1e-10) and positive non-increasing sigma;
        the truncated reconstruction matches M within 1e-8 relative.
    """
    M = as_matrix(M)
    normM = np.linalg.norm(M, "fro")
    if normM == 0.0:
        raise ValueError("zero matrix has no reduced SVD")
    try:
        U, s, Vt = np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError as e:
        raise np.linalg.LinAlgError(f"SVD failed to converge: {e}") from e
    r = int(np.sum(s > rank_tol * s[0]))
    if r < 1:
        raise ValueError("no singular value above the rank tolerance")
    f = SvdFactors(U=np.ascontiguousarray(U[:, :r]), sigma=s[:r].copy(),
                   V=np.ascontiguousarray(Vt[:r].T))
    ortho = max(
        np.abs(f.U.T @ f.U - np.eye(r)).max(),
        np.abs(f.V.T @ f.V - np.eye(r)).max(),
    )
    if ortho > 1e-10:
        raise ValueError(f"factor columns deviate from orthonormality by {ortho:.3e}")
    resid = np.linalg.norm(M - f.reconstruct(), "fro") / normM
    if resid > 1e-8:
        raise ValueError(
            f"truncated reconstruction residual {resid:.3e} exceeds 1e-8; "
            f"kept {r} of {s.shape[0]} singular values"
        )
    return f


def project_tangent(f: SvdFactors, Z) -> Array:
    """Project Z onto the tangent space of rank-r matrices at U, V.

    Computes U U^T Z + Z V V^T - U U^T Z V V^T without forming n x n
    projector matrices.
    """
    Z = as_matrix(Z)
    if Z.shape != f.shape:
        raise ValueError(f"Z has shape {Z.shape}, factors describe {f.shape}")
    U, V = f.U, f.V
    UtZ = U.T @ Z
    ZV = Z @ V
    UtZV = UtZ @ V
    return U @ UtZ + ZV @ V.T - U @ (UtZV @ V.T)


def project_tangent_perp(f: SvdFactors, Z) -> Array:
    """Project Z onto the orthogonal complement of the tangent space.

    Equals (I - U U^T) Z (I - V V^T); computed as the exact complement of
    project_tangent so the two parts always sum to Z.
    """
    Z = as_matrix(Z)
    return Z - project_tangent(f, Z)


def project_mask(O, Z) -> Array:
    """Zero out the entries of Z outside the mask O."""
    Z = as_matrix(Z, name="Z")
    O = as_mask(O, shape=Z.shape)
    return np.where(O, Z, 0.0)


@dataclass(frozen=True)
class OperatorNormEstimate:
    value: float
    converged: bool
    iterations: int


def operator_norm(
    op: Callable[[Array], Array],
    shape: tuple[int, int],
    iters: int = 300,
    tol: float = 1e-9,
    rng: np.random.Generator | None = None,
) -> OperatorNormEstimate:
    """Estimate the operator norm of a self-adjoint map on matrices.

    Power iteration with a random start; never materializes the operator.
    For indefinite self-adjoint maps the estimate converges to the largest
    absolute eigenvalue. The Frobenius inner product is the ambient one.

    Returns the estimate together with a convergence flag; if the estimate
    has not stabilized within `iters` iterations the flag is False and the
    last estimate is returned.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    v = rng.standard_normal(shape)
    nv = np.linalg.norm(v, "fro")
    if nv == 0.0:
        raise ValueError("degenerate start vector")
    v = v / nv
    est = 0.0
    for it in range(1, iters + 1):
        w = op(v)
        nw = float(np.linalg.norm(w, "fro"))
        if nw == 0.0:
            # op annihilates the iterate: norm 0 in that invariant subspace
            return OperatorNormEstimate(value=0.0, converged=True, iterations=it)
        if abs(nw - est) <= tol * max(1.0, nw):
            return OperatorNormEstimate(value=nw, converged=True, iterations=it)
        est = nw
        v = w / nw
    return OperatorNormEstimate(value=est, converged=False, iterations=iters)
