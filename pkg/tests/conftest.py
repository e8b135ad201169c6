import numpy as np

from levmc import SvdFactors


def orthonormal_factors(n1: int, n2: int, r: int, seed: int) -> SvdFactors:
    """Random rank-r factors with orthonormal U, V and decreasing sigma."""
    rng = np.random.default_rng(seed)
    U = np.linalg.qr(rng.standard_normal((n1, r)))[0]
    V = np.linalg.qr(rng.standard_normal((n2, r)))[0]
    sigma = np.sort(rng.random(r) + 0.5)[::-1].copy()
    return SvdFactors(U=U, sigma=sigma, V=V)


def lowrank_matrix(n1: int, n2: int, r: int, seed: int) -> np.ndarray:
    f = orthonormal_factors(n1, n2, r, seed)
    return (f.U * f.sigma) @ f.V.T
