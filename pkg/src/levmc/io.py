"""CSV serialization for matrices, masks, plans, profiles, and experiment
records.

Every file starts with a `# n1,n2` metadata line (plus extra `# key=value`
lines where noted). Floats are written with repr() so that reading a file
back reproduces the exact binary values and rewriting it reproduces the
exact bytes.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .leverage import LeverageProfile
from .linalg import Array, as_mask, as_matrix, mask_from_pairs, mask_to_pairs
from .sampling import SamplingPlan
from .solver import Solution

TRIALS_HEADER = "seed,model,p,q,rel_error,success,iters,wall_s"
AGGREGATE_HEADER = "model,grid_value,trials,successes,success_ratio"
CERTIFY_HEADER = (
    "cond1_value,cond1_bound,cond2_value,cond3_value,cond4_max_abs,"
    "decay_ok,seed,n,r,p_mean,q"
)
DIAGNOSTICS_HEADER = "iters,residual,objective,converged"
PROFILE_HEADER = "index,mu,nu"


@dataclass(frozen=True)
class TrialRecord:
    seed: int
    model: str
    p: float
    q: float
    rel_error: float
    success: bool
    iters: int
    wall_s: float


@dataclass(frozen=True)
class AggregateRecord:
    model: str
    grid_value: float
    trials: int
    successes: int

    @property
    def success_ratio(self) -> float:
        return self.successes / self.trials


@dataclass(frozen=True)
class CertifyRecord:
    cond1_value: float
    cond1_bound: float
    cond2_value: float
    cond3_value: float
    cond4_max_abs: float
    decay_ok: bool
    seed: int
    n: int
    r: int
    p_mean: float
    q: float


def _fmt(x: float) -> str:
    return repr(float(x))


def _meta_line(shape: tuple[int, int]) -> str:
    return f"# {shape[0]},{shape[1]}\n"


def _read_lines(path) -> list[str]:
    with open(path, "r", newline="") as fh:
        return [line.rstrip("\n") for line in fh]


def _parse_meta(lines: list[str], path) -> tuple[tuple[int, int], dict[str, str], list[str]]:
    """Split leading `#` lines into the shape plus key=value extras."""
    shape = None
    extras: dict[str, str] = {}
    body_start = 0
    for i, line in enumerate(lines):
        if not line.startswith("#"):
            body_start = i
            break
        body_start = i + 1
        text = line[1:].strip()
        if "=" in text:
            key, _, val = text.partition("=")
            extras[key.strip()] = val.strip()
        else:
            parts = text.split(",")
            if len(parts) != 2:
                raise ValueError(f"{path}: malformed metadata line {line!r}")
            shape = (int(parts[0]), int(parts[1]))
    if shape is None:
        raise ValueError(f"{path}: missing `# n1,n2` metadata line")
    return shape, extras, lines[body_start:]


def write_matrix(path, M) -> None:
    M = as_matrix(M, name="M")
    with open(path, "w", newline="") as fh:
        fh.write(_meta_line(M.shape))
        for row in M:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_matrix(path) -> Array:
    lines = _read_lines(path)
    shape, _, body = _parse_meta(lines, path)
    rows = [
        [float(v) for v in line.split(",")]
        for line in body
        if line.strip()
    ]
    M = np.asarray(rows, dtype=np.float64)
    if M.shape != shape:
        raise ValueError(f"{path}: data shape {M.shape} disagrees with metadata {shape}")
    return M


def write_mask(path, O) -> None:
    O = np.asarray(O)
    O = as_mask(O, shape=O.shape)
    pairs = mask_to_pairs(O)
    with open(path, "w", newline="") as fh:
        fh.write(_meta_line(O.shape))
        fh.write("i,j\n")
        for i, j in pairs:
            fh.write(f"{i},{j}\n")


def read_mask(path) -> Array:
    lines = _read_lines(path)
    shape, _, body = _parse_meta(lines, path)
    pairs = []
    for line in body:
        line = line.strip()
        if not line or line == "i,j":
            continue
        i_str, _, j_str = line.partition(",")
        pairs.append((int(i_str), int(j_str)))
    return mask_from_pairs(shape[0], shape[1], pairs)


def write_plan(path, plan: SamplingPlan) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(_meta_line(plan.shape))
        fh.write(f"# q={_fmt(plan.q)}\n")
        fh.write(f"# clipped_mass={_fmt(plan.clipped_mass)}\n")
        for row in plan.P:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_plan(path) -> SamplingPlan:
    lines = _read_lines(path)
    shape, extras, body = _parse_meta(lines, path)
    if "q" not in extras:
        raise ValueError(f"{path}: missing `# q=` metadata line")
    rows = [
        [float(v) for v in line.split(",")]
        for line in body
        if line.strip()
    ]
    P = np.asarray(rows, dtype=np.float64)
    if P.shape != shape:
        raise ValueError(f"{path}: data shape {P.shape} disagrees with metadata {shape}")
    return SamplingPlan(
        P=P,
        q=float(extras["q"]),
        clipped_mass=float(extras.get("clipped_mass", "0.0")),
    )


def write_profile(path, prof: LeverageProfile) -> None:
    """Rows are padded with empty fields when the two sides differ in length."""
    n1, n2 = prof.mu.size, prof.nu.size
    with open(path, "w", newline="") as fh:
        fh.write(_meta_line((n1, n2)))
        fh.write(f"# rank={prof.rank}\n")
        fh.write(PROFILE_HEADER + "\n")
        for i in range(max(n1, n2)):
            mu_s = _fmt(prof.mu[i]) if i < n1 else ""
            nu_s = _fmt(prof.nu[i]) if i < n2 else ""
            fh.write(f"{i},{mu_s},{nu_s}\n")


def read_profile(path) -> LeverageProfile:
    lines = _read_lines(path)
    shape, extras, body = _parse_meta(lines, path)
    if "rank" not in extras:
        raise ValueError(f"{path}: missing `# rank=` metadata line")
    mu = [None] * shape[0]
    nu = [None] * shape[1]
    for line in body:
        line = line.strip()
        if not line or line == PROFILE_HEADER:
            continue
        idx_s, mu_s, nu_s = line.split(",")
        idx = int(idx_s)
        if mu_s:
            mu[idx] = float(mu_s)
        if nu_s:
            nu[idx] = float(nu_s)
    if any(v is None for v in mu) or any(v is None for v in nu):
        raise ValueError(f"{path}: profile rows do not cover every index")
    return LeverageProfile(
        mu=np.asarray(mu, dtype=np.float64),
        nu=np.asarray(nu, dtype=np.float64),
        rank=int(extras["rank"]),
    )


def write_solution(out_dir, sol: Solution) -> tuple[str, str, str]:
    """Write Lhat.csv, Shat.csv, and diagnostics.csv under out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    l_path = out / "Lhat.csv"
    s_path = out / "Shat.csv"
    d_path = out / "diagnostics.csv"
    write_matrix(l_path, sol.L)
    write_matrix(s_path, sol.S)
    with open(d_path, "w", newline="") as fh:
        fh.write(DIAGNOSTICS_HEADER + "\n")
        fh.write(
            f"{sol.iterations},{_fmt(sol.feasibility_residual)},"
            f"{_fmt(sol.objective)},{int(sol.converged)}\n"
        )
    return str(l_path), str(s_path), str(d_path)


def write_trials(path, records: list[TrialRecord]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(TRIALS_HEADER + "\n")
        for rec in records:
            fh.write(
                f"{rec.seed},{rec.model},{_fmt(rec.p)},{_fmt(rec.q)},"
                f"{_fmt(rec.rel_error)},{int(rec.success)},{rec.iters},"
                f"{_fmt(rec.wall_s)}\n"
            )


def read_trials(path) -> list[TrialRecord]:
    lines = _read_lines(path)
    if not lines or lines[0] != TRIALS_HEADER:
        raise ValueError(f"{path}: expected header {TRIALS_HEADER!r}")
    out = []
    for line in lines[1:]:
        if not line.strip():
            continue
        seed, model, p, q, rel, suc, iters, wall = line.split(",")
        out.append(TrialRecord(
            seed=int(seed), model=model, p=float(p), q=float(q),
            rel_error=float(rel), success=bool(int(suc)),
            iters=int(iters), wall_s=float(wall),
        ))
    return out


def write_aggregate(path, records: list[AggregateRecord]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(AGGREGATE_HEADER + "\n")
        for rec in records:
            fh.write(
                f"{rec.model},{_fmt(rec.grid_value)},{rec.trials},"
                f"{rec.successes},{_fmt(rec.success_ratio)}\n"
            )


def read_aggregate(path) -> list[AggregateRecord]:
    lines = _read_lines(path)
    if not lines or lines[0] != AGGREGATE_HEADER:
        raise ValueError(f"{path}: expected header {AGGREGATE_HEADER!r}")
    out = []
    for line in lines[1:]:
        if not line.strip():
            continue
        model, gval, trials, succ, _ratio = line.split(",")
        out.append(AggregateRecord(
            model=model, grid_value=float(gval),
            trials=int(trials), successes=int(succ),
        ))
    return out


def write_certify(path, records: list[CertifyRecord]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(CERTIFY_HEADER + "\n")
        for rec in records:
            fh.write(
                f"{_fmt(rec.cond1_value)},{_fmt(rec.cond1_bound)},"
                f"{_fmt(rec.cond2_value)},{_fmt(rec.cond3_value)},"
                f"{_fmt(rec.cond4_max_abs)},{int(rec.decay_ok)},"
                f"{rec.seed},{rec.n},{rec.r},{_fmt(rec.p_mean)},{_fmt(rec.q)}\n"
            )


def read_certify(path) -> list[CertifyRecord]:
    lines = _read_lines(path)
    if not lines or lines[0] != CERTIFY_HEADER:
        raise ValueError(f"{path}: expected header {CERTIFY_HEADER!r}")
    out = []
    for line in lines[1:]:
        if not line.strip():
            continue
        c1, c1b, c2, c3, c4, dec, seed, n, r, pm, q = line.split(",")
        out.append(CertifyRecord(
            cond1_value=float(c1), cond1_bound=float(c1b),
            cond2_value=float(c2), cond3_value=float(c3),
            cond4_max_abs=float(c4), decay_ok=bool(int(dec)),
            seed=int(seed), n=int(n), r=int(r),
            p_mean=float(pm), q=float(q),
        ))
    return out
