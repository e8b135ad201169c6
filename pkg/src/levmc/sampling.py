"""Observation samplers: sampling plans, the direct and decoupled corruption
processes, the golfing batch partition, and deterministic RNG streams."""
from __future__ import annotations

import math
import zlib
from dataclasses import dataclass

import numpy as np

from .leverage import LeverageProfile
from .linalg import Array, as_mask, as_matrix


def rng_stream(seed: int, *keys) -> np.random.Generator:
    """Derive an independent generator from a seed and a key path.

    String keys are hashed with crc32 (stable across runs and platforms);
    integer keys are used as-is. The same (seed, keys) always yields the
    same stream, and distinct key paths yield independent streams.
    """
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF]
    for k in keys:
        if isinstance(k, str):
            entropy.append(zlib.crc32(k.encode("utf-8")))
        else:
            entropy.append(int(k) & 0xFFFFFFFFFFFFFFFF)
    return np.random.default_rng(np.random.SeedSequence(entropy))


@dataclass(frozen=True)
class SamplingPlan:
    """Entrywise observation probabilities P plus the corruption rate q.

    clipped_mass records the total probability mass removed by clipping
    P to [0, 1] when the plan was built (0 for uniform plans).
    """

    P: Array
    q: float
    clipped_mass: float = 0.0

    def __post_init__(self):
        P = as_matrix(self.P, name="P")
        if np.any(P < 0) or np.any(P > 1):
            raise ValueError("observation probabilities must lie in [0, 1]")
        if not (0 <= self.q <= 0.5):
            raise ValueError(f"corruption rate q must lie in [0, 0.5], got {self.q}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.P.shape

    def mean_probability(self) -> float:
        return float(np.mean(self.P))


def plan_uniform(n1: int, n2: int, p: float, q: float) -> SamplingPlan:
    """Uniform plan: every entry observed with the same probability p."""
    if n1 < 1 or n2 < 1:
        raise ValueError(f"plan dimensions must be positive, got ({n1}, {n2})")
    if not (0 <= p <= 1):
        raise ValueError(f"observation probability p must lie in [0, 1], got {p}")
    return SamplingPlan(P=np.full((n1, n2), float(p)), q=float(q))


def plan_leveraged(prof: LeverageProfile, p: float, q: float) -> SamplingPlan:
    """Leveraged plan: p_ij proportional to sqrt(mu_i + nu_j).

    Normalized so the mean probability equals p before clipping to [0, 1];
    the clipped mass is reported on the plan.
    """
    if not (0 <= p <= 1):
        raise ValueError(f"observation probability p must lie in [0, 1], got {p}")
    n1, n2 = prof.shape
    S = np.sqrt(prof.mu[:, None] + prof.nu[None, :])
    total = float(S.sum())
    if total == 0.0:
        raise ValueError("degenerate profile: all leverage scores are zero")
    raw = p * n1 * n2 * S / total
    clipped = np.minimum(raw, 1.0)
    return SamplingPlan(P=clipped, q=float(q),
                        clipped_mass=float(np.sum(raw - clipped)))


def plan_certificate(prof: LeverageProfile, cp: float, q: float) -> SamplingPlan:
    """Plan in the regime where the dual-certificate analysis applies.

    Entrywise rate min(1, max(cp * (mu_i + nu_j) * r * ln(n)^2 / n, n^-5))
    with n the larger dimension. The n^-5 floor keeps every entry reachable
    so inverse-probability weights stay finite.
    """
    if cp <= 0:
        raise ValueError(f"rate multiplier cp must be positive, got {cp}")
    n1, n2 = prof.shape
    n = max(n1, n2)
    if n < 2:
        raise ValueError("plan needs dimensions of at least 2 for the log factor")
    raw = cp * (prof.mu[:, None] + prof.nu[None, :]) * prof.rank * math.log(n) ** 2 / n
    P = np.minimum(1.0, np.maximum(raw, n**-5.0))
    return SamplingPlan(P=P, q=float(q))


@dataclass(frozen=True)
class ObservationSet:
    """Masks and data produced by one observation draw.

    observed is O; corrupted is the corrupted subset; clean is their
    difference; data equals L on clean entries and L + corruption on
    corrupted ones; corruption is exactly zero off the corrupted set.
    """

    observed: Array
    corrupted: Array
    clean: Array
    data: Array
    corruption: Array
    aux: "DecoupledSample | None" = None


@dataclass(frozen=True)
class DecoupledSample:
    """Mask bundle from the decoupled observation process.

    clean_heavy and candidates are the two independent Bernoulli sets; signs
    is the full Rademacher matrix; matched is the candidate subset whose sign
    agrees with the requested corruption pattern; corrupted = matched minus
    clean_heavy; observed = clean_heavy union candidates; clean = observed
    minus corrupted.
    """

    clean_heavy: Array
    candidates: Array
    signs: Array
    matched: Array
    corrupted: Array
    clean: Array
    observed: Array


def _check_sign_pattern(K, shape) -> Array:
    K = as_matrix(K, name="sign pattern")
    if K.shape != shape:
        raise ValueError(f"sign pattern has shape {K.shape}, expected {shape}")
    if not np.all(np.abs(K) == 1):
        raise ValueError("sign pattern must have entries +1/-1")
    return K


def sample_direct(
    plan: SamplingPlan,
    L,
    K,
    rng: np.random.Generator,
    amplitude: float = 1.0,
) -> ObservationSet:
    """Draw observations directly: O ~ Ber(p_ij) entrywise, then corrupt each
    observed entry independently with probability q.

    The corruption added on the corrupted set is amplitude * K there. Draw
    order: observation uniforms, then corruption uniforms, so masks are
    reproducible from the generator state alone.
    """
    L = as_matrix(L, name="L")
    if L.shape != plan.shape:
        raise ValueError(f"L has shape {L.shape}, plan describes {plan.shape}")
    K = _check_sign_pattern(K, plan.shape)
    O = rng.random(plan.shape) < plan.P
    Omega = O & (rng.random(plan.shape) < plan.q)
    Gamma = O & ~Omega
    S = np.where(Omega, amplitude * K, 0.0)
    data = np.where(O, L, 0.0) + S
    return ObservationSet(observed=O, corrupted=Omega, clean=Gamma,
                          data=data, corruption=S)


def sample_decoupled(plan: SamplingPlan, K, rng: np.random.Generator) -> DecoupledSample:
    """Draw the decoupled two-set observation process.

    clean_heavy ~ Ber(p_ij (1 - 2q)) and candidates ~ Ber(2 p_ij q /
    (1 - p_ij + 2 q p_ij)) independently; a full Rademacher sign matrix
    thins the candidates to those matching the requested pattern, and
    membership in clean_heavy vetoes corruption. The joint law of
    (observed, corrupted) matches sample_direct with the same plan.

    Where 1 - p_ij + 2 q p_ij = 0 (p_ij = 1 with q = 0) the candidate
    probability is the algebraic limit 0. Draw order: clean_heavy,
    candidates, signs.
    """
    K = _check_sign_pattern(K, plan.shape)
    P, q = plan.P, plan.q
    p_clean = P * (1 - 2 * q)
    denom = 1 - P + 2 * q * P
    with np.errstate(divide="ignore", invalid="ignore"):
        p_cand = np.where(denom > 0, 2 * P * q / np.where(denom > 0, denom, 1.0), 0.0)
    clean_heavy = rng.random(plan.shape) < p_clean
    candidates = rng.random(plan.shape) < p_cand
    signs = np.where(rng.random(plan.shape) < 0.5, 1.0, -1.0)
    matched = candidates & (signs == K)
    corrupted = matched & ~clean_heavy
    observed = clean_heavy | candidates
    clean = observed & ~corrupted
    return DecoupledSample(clean_heavy=clean_heavy, candidates=candidates,
                           signs=signs, matched=matched, corrupted=corrupted,
                           clean=clean, observed=observed)


def observe_decoupled(
    plan: SamplingPlan,
    L,
    K,
    rng: np.random.Generator,
    amplitude: float = 1.0,
) -> ObservationSet:
    """Materialize data from the decoupled process; aux keeps the bundle."""
    L = as_matrix(L, name="L")
    if L.shape != plan.shape:
        raise ValueError(f"L has shape {L.shape}, plan describes {plan.shape}")
    d = sample_decoupled(plan, K, rng)
    S = np.where(d.corrupted, amplitude * np.asarray(K, dtype=np.float64), 0.0)
    data = np.where(d.observed, L, 0.0) + S
    return ObservationSet(observed=d.observed, corrupted=d.corrupted,
                          clean=d.clean, data=data, corruption=S, aux=d)


@dataclass(frozen=True)
class GolfingPartition:
    """Independent Bernoulli batches whose union is distributed like the
    clean-heavy set Ber(p_ij (1 - 2q)).

    Batches 1 and 2 use rate p'(ij)/6; batches 3..t use the tail rate that
    solves (1 - p') = (1 - p'/6)^2 (1 - rho)^(t-2) entrywise.
    """

    batches: tuple[Array, ...]
    rho_head: Array
    rho_tail: Array

    @property
    def t(self) -> int:
        return len(self.batches)

    def rho(self, k: int) -> Array:
        """Probability matrix of batch k (1-indexed)."""
        if not (1 <= k <= self.t):
            raise ValueError(f"batch index {k} outside 1..{self.t}")
        return self.rho_head if k <= 2 else self.rho_tail

    def union(self) -> Array:
        out = np.zeros(self.batches[0].shape, dtype=bool)
        for b in self.batches:
            out |= b
        return out


def golfing_batch_count(n: int) -> int:
    """Number of golfing batches, floor(5 ln n + 1)."""
    if n < 2:
        raise ValueError(f"need n >= 2 for a golfing partition, got {n}")
    return int(math.floor(5 * math.log(n) + 1))


def golfing_partition(
    plan: SamplingPlan,
    rng: np.random.Generator,
    t: int | None = None,
) -> GolfingPartition:
    """Draw the t independent Bernoulli batches of the golfing scheme.

    t defaults to floor(5 ln n + 1) with n = max matrix dimension; it must
    be at least 3 so the tail equation has a solution.
    """
    n1, n2 = plan.shape
    if t is None:
        t = golfing_batch_count(max(n1, n2))
    if t < 3:
        raise ValueError(f"golfing partition needs t >= 3 batches, got t={t}")
    p_clean = plan.P * (1 - 2 * plan.q)
    rho_head = p_clean / 6.0
    # tail rate from (1 - p') = (1 - p'/6)^2 (1 - rho)^(t - 2)
    base = (1 - p_clean) / (1 - rho_head) ** 2
    rho_tail = 1.0 - base ** (1.0 / (t - 2))
    batches = []
    for k in range(1, t + 1):
        rate = rho_head if k <= 2 else rho_tail
        batches.append(rng.random(plan.shape) < rate)
    return GolfingPartition(batches=tuple(batches), rho_head=rho_head,
                            rho_tail=rho_tail)
