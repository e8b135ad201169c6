"""Experiment harness: ground-truth generation, recovery sweeps over the
observation or corruption rate, single solves, and certificate studies.

Every trial owns an RNG stream derived from (master seed, grid index, trial
index), so results are reproducible and independent of worker count. Worker
processes pin their BLAS pools to one thread; combined with the canonical
record ordering this makes output files byte-identical across reruns.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .io import AggregateRecord, CertifyRecord, TrialRecord, write_aggregate, write_certify, write_trials
from .certificate import construct_certificate, evaluate_conditions
from .leverage import estimate_leverage, leverage_scores
from .linalg import Array, reduced_svd
from .sampling import (
    SamplingPlan,
    golfing_partition,
    plan_certificate,
    plan_leveraged,
    plan_uniform,
    rng_stream,
    sample_decoupled,
    sample_direct,
)
from .solver import SolverConfig, Solution, default_lambda, solve

MODELS = ("uu", "lu")


@dataclass(frozen=True)
class ExperimentConfig:
    """Configuration shared by the sweep, solve, and certify drivers.

    sweep picks which rate the grid varies ("p" or "q"); fixed_value holds
    the other one. lam=None selects 1/sqrt(n p) per instance for sweeps and
    the solver default for certificate studies. cp switches certify to the
    leverage-proportional plan with log-squared oversampling instead of the
    uu/lu plans.
    """

    n: int
    r: int
    model: str = "both"
    sweep: str = "p"
    grid: tuple[float, ...] = (0.5,)
    fixed_value: float = 0.1
    trials: int = 20
    seed: int = 0
    success_threshold: float = 0.05
    lam: float | None = None
    amplitude: float = 1.0
    workers: int = 1
    fixed_truth: bool = False
    estimated_leverage: bool = False
    uniform_fallback: bool = False
    timings: bool = False
    tol: float = 1e-7
    max_iters: int = 500
    cp: float | None = None
    out: str | None = None

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"n must be at least 2, got {self.n}")
        if not (1 <= self.r <= self.n):
            raise ValueError(f"rank must lie in [1, n], got {self.r}")
        if self.model not in ("uu", "lu", "both"):
            raise ValueError(f"model must be uu, lu, or both, got {self.model!r}")
        if self.sweep not in ("p", "q"):
            raise ValueError(f"sweep must be p or q, got {self.sweep!r}")
        if len(self.grid) == 0:
            raise ValueError("grid must not be empty")
        if any(not (0 <= g <= 1) for g in self.grid):
            raise ValueError("grid values must lie in [0, 1]")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ValueError("grid values must be strictly increasing")
        if not (0 <= self.fixed_value <= 1):
            raise ValueError(f"fixed_value must lie in [0, 1], got {self.fixed_value}")
        if self.trials < 1:
            raise ValueError(f"trials must be at least 1, got {self.trials}")
        if self.success_threshold <= 0:
            raise ValueError("success_threshold must be positive")
        if self.lam is not None and self.lam <= 0:
            raise ValueError("lambda override must be positive")
        if self.workers < 1:
            raise ValueError(f"workers must be at least 1, got {self.workers}")
        if self.cp is not None and self.cp <= 0:
            raise ValueError("cp must be positive")

    def models(self) -> tuple[str, ...]:
        return MODELS if self.model == "both" else (self.model,)

    def resolve_rates(self, grid_value: float) -> tuple[float, float]:
        """Return (p, q) for one grid point."""
        if self.sweep == "p":
            return grid_value, self.fixed_value
        return self.fixed_value, grid_value


def generate_ground_truth(
    n: int,
    r: int,
    rng: np.random.Generator,
    orthogonalize: bool = False,
) -> Array:
    """Rank-r ground truth L = X1 X2^T with factor entries N(0, 1/n^2).

    Entry variance of L is r/n^4. orthogonalize replaces each factor by the
    Q of its QR decomposition (orthonormal columns, unit singular values),
    a hook for rank checks. Draw order: X1 then X2.
    """
    if not (1 <= r <= n):
        raise ValueError(f"rank must lie in [1, n], got r={r}, n={n}")
    X1 = rng.standard_normal((n, r)) / n
    X2 = rng.standard_normal((n, r)) / n
    if orthogonalize:
        X1 = np.linalg.qr(X1)[0]
        X2 = np.linalg.qr(X2)[0]
    return X1 @ X2.T


def auto_lambda(n: int, p: float) -> float:
    """Practical regularization weight 1 / sqrt(n p).

    The solver-default 1/(24 sqrt(n ln n)) comes from the asymptotic
    analysis and is too small at small n: it makes (0, P_O(M)) the optimum
    of the convex program. Scaling by the expected column sample count n*p
    keeps the two objective terms comparable at any size.
    """
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    if not (0 < p <= 1):
        raise ValueError(f"observation rate p must lie in (0, 1], got {p}")
    return 1.0 / math.sqrt(n * p)


def trial_seed(master: int, grid_idx: int, trial_idx: int) -> int:
    """Derived 64-bit seed for one trial; stable across worker layouts."""
    ss = np.random.SeedSequence([master & (2**64 - 1), grid_idx, trial_idx])
    return int(ss.generate_state(1, np.uint64)[0])


def _truth(cfg: ExperimentConfig, ts: int) -> Array:
    if cfg.fixed_truth:
        return generate_ground_truth(cfg.n, cfg.r, rng_stream(cfg.seed, "truth"))
    return generate_ground_truth(cfg.n, cfg.r, rng_stream(ts, "truth"))


def _sign_field(cfg: ExperimentConfig, ts: int) -> Array:
    rng = rng_stream(ts, "signs")
    return np.where(rng.random((cfg.n, cfg.n)) < 0.5, 1.0, -1.0)


def _recovery_plan(
    cfg: ExperimentConfig,
    model: str,
    L: Array,
    p: float,
    q: float,
    ts: int,
    K: Array,
) -> SamplingPlan:
    if model == "uu":
        return plan_uniform(cfg.n, cfg.n, p, q)
    if not cfg.estimated_leverage:
        return plan_leveraged(leverage_scores(reduced_svd(L)), p, q)
    # two-phase: a uniform probe draw feeds the leverage estimate
    probe = sample_direct(
        plan_uniform(cfg.n, cfg.n, p, q), L, K,
        rng_stream(ts, "probe", model), amplitude=cfg.amplitude,
    )
    prof = estimate_leverage(
        probe.data, probe.observed, cfg.r, p_hat=p,
        fallback_uniform=cfg.uniform_fallback,
    )
    return plan_leveraged(prof, p, q)


def _run_recovery_trial(args) -> TrialRecord:
    cfg, model, grid_idx, grid_value, trial_idx = args
    p, q = cfg.resolve_rates(grid_value)
    ts = trial_seed(cfg.seed, grid_idx, trial_idx)
    with threadpool_limits(limits=1):
        start = time.perf_counter()
        L = _truth(cfg, ts)
        K = _sign_field(cfg, ts)
        truth_norm = float(np.linalg.norm(L, "fro"))
        if p == 0.0:
            # nothing observable: the zero estimate has relative error 1
            rel = 1.0 if truth_norm > 0 else 0.0
            iters = 0
        else:
            plan = _recovery_plan(cfg, model, L, p, q, ts, K)
            obs = sample_direct(plan, L, K, rng_stream(ts, "obs", model),
                                amplitude=cfg.amplitude)
            if not np.any(obs.observed):
                rel = 1.0 if truth_norm > 0 else 0.0
                iters = 0
            else:
                lam = cfg.lam if cfg.lam is not None else auto_lambda(cfg.n, p)
                sol = solve(obs.data, obs.observed,
                            SolverConfig(lam=lam, tol=cfg.tol, max_iters=cfg.max_iters))
                rel = float(np.linalg.norm(sol.L - L, "fro")) / truth_norm
                iters = sol.iterations
        elapsed = time.perf_counter() - start
    return TrialRecord(
        seed=ts, model=model, p=p, q=q, rel_error=rel,
        success=rel <= cfg.success_threshold, iters=iters,
        wall_s=elapsed if cfg.timings else 0.0,
    )


def _map_tasks(fn, payloads, workers: int):
    if workers == 1:
        return [fn(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, payloads))


def run_sweep(cfg: ExperimentConfig) -> tuple[list[TrialRecord], list[AggregateRecord]]:
    """Run the recovery sweep and return (trial records, aggregates).

    Record order is canonical: model-major, then grid point, then trial
    index. When cfg.out is set, trials go to that path and aggregates to a
    sibling file with an _aggregate suffix.
    """
    payloads = [
        (cfg, model, gi, gv, ti)
        for model in cfg.models()
        for gi, gv in enumerate(cfg.grid)
        for ti in range(cfg.trials)
    ]
    records = _map_tasks(_run_recovery_trial, payloads, cfg.workers)
    aggregates = []
    idx = 0
    for model in cfg.models():
        for gv in cfg.grid:
            chunk = records[idx:idx + cfg.trials]
            idx += cfg.trials
            aggregates.append(AggregateRecord(
                model=model, grid_value=gv, trials=cfg.trials,
                successes=sum(rec.success for rec in chunk),
            ))
    if cfg.out is not None:
        out = Path(cfg.out)
        write_trials(out, records)
        agg_path = out.with_name(out.stem + "_aggregate" + (out.suffix or ".csv"))
        write_aggregate(agg_path, aggregates)
    return records, aggregates


def _run_certify_trial(args) -> CertifyRecord:
    cfg, grid_idx, grid_value, trial_idx = args
    p, q = cfg.resolve_rates(grid_value)
    ts = trial_seed(cfg.seed, grid_idx, trial_idx)
    with threadpool_limits(limits=1):
        L = _truth(cfg, ts)
        K = _sign_field(cfg, ts)
        f = reduced_svd(L)
        if cfg.cp is not None:
            plan = plan_certificate(leverage_scores(f), cfg.cp, q)
        elif cfg.model == "lu":
            plan = plan_leveraged(leverage_scores(f), p, q)
        else:
            plan = plan_uniform(cfg.n, cfg.n, p, q)
        partition = golfing_partition(plan, rng_stream(ts, "partition"))
        heavy = partition.union()
        decoupled = sample_decoupled(plan, K, rng_stream(ts, "obs"))
        lam = cfg.lam if cfg.lam is not None else default_lambda(cfg.n)
        trace = construct_certificate(f, partition, decoupled.candidates,
                                      decoupled.signs, lam)
        report = evaluate_conditions(trace, f, decoupled.candidates,
                                     decoupled.signs, heavy, lam)
    return CertifyRecord(
        cond1_value=report.cond1_value, cond1_bound=report.cond1_bound,
        cond2_value=report.cond2_value, cond3_value=report.cond3_value,
        cond4_max_abs=report.cond4_max_abs, decay_ok=report.decay_ok,
        seed=ts, n=cfg.n, r=cfg.r, p_mean=plan.mean_probability(), q=q,
    )


def run_certify(cfg: ExperimentConfig) -> list[CertifyRecord]:
    """Build and evaluate one dual certificate per (grid point, trial)."""
    payloads = [
        (cfg, gi, gv, ti)
        for gi, gv in enumerate(cfg.grid)
        for ti in range(cfg.trials)
    ]
    records = _map_tasks(_run_certify_trial, payloads, cfg.workers)
    if cfg.out is not None:
        write_certify(cfg.out, records)
    return records


def run_single(cfg: ExperimentConfig, p: float, q: float) -> tuple[Solution, float]:
    """Generate one instance at rates (p, q), solve it, and return the
    solution plus the relative recovery error against the ground truth."""
    if not (0 < p <= 1):
        raise ValueError(f"observation rate p must lie in (0, 1], got {p}")
    model = "lu" if cfg.model == "lu" else "uu"
    ts = trial_seed(cfg.seed, 0, 0)
    with threadpool_limits(limits=1):
        L = _truth(cfg, ts)
        K = _sign_field(cfg, ts)
        plan = _recovery_plan(cfg, model, L, p, q, ts, K)
        obs = sample_direct(plan, L, K, rng_stream(ts, "obs", model),
                            amplitude=cfg.amplitude)
        if not np.any(obs.observed):
            raise ValueError("draw produced no observed entries; raise p")
        lam = cfg.lam if cfg.lam is not None else auto_lambda(cfg.n, p)
        sol = solve(obs.data, obs.observed,
                    SolverConfig(lam=lam, tol=cfg.tol, max_iters=cfg.max_iters))
        rel = float(np.linalg.norm(sol.L - L, "fro")) / float(np.linalg.norm(L, "fro"))
    return sol, rel
