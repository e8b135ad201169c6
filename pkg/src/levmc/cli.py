"""Command line entry point: ground-truth generation, single solves,
recovery sweeps, certificate studies, and leverage-score dumps.

Flag values resolve in three steps: command line beats the --config file,
which beats the built-in defaults. The config file is flat key=value text
whose keys are the long flag names (dashes or underscores both work).
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from .experiments import ExperimentConfig, generate_ground_truth, run_certify, run_single, run_sweep
from .io import read_matrix, write_matrix, write_profile, write_solution
from .leverage import leverage_scores
from .linalg import reduced_svd
from .sampling import rng_stream

DEFAULTS = {
    "n": 200,
    "rank": 5,
    "model": "both",
    "sweep": "p",
    "grid": "0.5",
    "fixed": 0.1,
    "trials": 20,
    "seed": 0,
    "lam": None,
    "threshold": 0.05,
    "out": None,
    "workers": 1,
    "fixed_truth": False,
    "estimated_leverage": False,
    "uniform_fallback": False,
    "amplitude": 1.0,
    "timings": False,
    "cp": None,
    "tol": 1e-7,
    "max_iters": 500,
    "p": 1.0,
    "q": 0.0,
    "truth": None,
}

_BOOL_KEYS = ("fixed_truth", "estimated_leverage", "uniform_fallback", "timings")
_INT_KEYS = ("n", "rank", "trials", "seed", "workers", "max_iters")
_FLOAT_KEYS = ("fixed", "lam", "threshold", "amplitude", "cp", "tol", "p", "q")


def parse_grid(text: str) -> tuple[float, ...]:
    """Grid syntax: 'a:b:step' (inclusive, step > 0) or a comma list.

    Values are rounded to 10 decimals so that e.g. 0.2:0.7:0.05 lands
    exactly on 0.7 despite accumulated float error.
    """
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid range must be a:b:step, got {text!r}")
        a, b, step = (float(v) for v in parts)
        if step <= 0:
            raise ValueError(f"grid step must be positive, got {step}")
        count = int(round((b - a) / step))
        vals = [round(a + i * step, 10) for i in range(count + 1)]
        vals = [v for v in vals if v <= b + 1e-12]
    else:
        vals = [round(float(v), 10) for v in text.split(",") if v.strip()]
    if not vals:
        raise ValueError(f"grid {text!r} parsed to no values")
    return tuple(vals)


def read_config_file(path: str) -> dict[str, str]:
    """Flat key=value lines; blank lines and # comments are skipped."""
    values: dict[str, str] = {}
    with open(path, "r") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, val = line.partition("=")
            key = key.strip().replace("-", "_")
            if key == "lambda":
                key = "lam"
            if key not in DEFAULTS:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = val.strip()
    return values


def _cast_config_value(key: str, text: str):
    if key in _BOOL_KEYS:
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"config key {key} expects a boolean, got {text!r}")
    if key in _INT_KEYS:
        return int(text)
    if key in _FLOAT_KEYS:
        return float(text)
    return text


def _resolve(args: argparse.Namespace) -> dict:
    """Merge command line, config file, and defaults (in that precedence)."""
    file_values = read_config_file(args.config) if getattr(args, "config", None) else {}
    resolved = {}
    for key, default in DEFAULTS.items():
        cli_val = getattr(args, key, None)
        if cli_val is not None:
            resolved[key] = cli_val
        elif key in file_values:
            resolved[key] = _cast_config_value(key, file_values[key])
        else:
            resolved[key] = default
    return resolved


def _add_common(sub: argparse.ArgumentParser, *, workers: bool = False) -> None:
    sub.add_argument("--n", type=int, default=None)
    sub.add_argument("--rank", type=int, default=None)
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--out", type=str, default=None)
    sub.add_argument("--config", type=str, default=None)
    if workers:
        sub.add_argument("--workers", type=int, default=None)


def _add_instance_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--lambda", dest="lam", type=float, default=None,
                     help="regularization weight; default auto 1/sqrt(n p)")
    sub.add_argument("--amplitude", type=float, default=None)
    sub.add_argument("--estimated-leverage", dest="estimated_leverage",
                     action="store_const", const=True, default=None)
    sub.add_argument("--uniform-fallback", dest="uniform_fallback",
                     action="store_const", const=True, default=None)
    sub.add_argument("--tol", type=float, default=None)
    sub.add_argument("--max-iters", dest="max_iters", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levmc",
        description="Robust matrix completion under leveraged sampling",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    gen = subs.add_parser("gen", help="write a rank-r ground-truth matrix to CSV")
    _add_common(gen)

    solve = subs.add_parser("solve", help="solve one sampled instance")
    _add_common(solve)
    solve.add_argument("--model", choices=("uu", "lu"), default=None)
    solve.add_argument("--p", type=float, default=None)
    solve.add_argument("--q", type=float, default=None)
    _add_instance_flags(solve)

    sweep = subs.add_parser("sweep", help="success-ratio sweep over p or q")
    _add_common(sweep, workers=True)
    sweep.add_argument("--model", choices=("uu", "lu", "both"), default=None)
    sweep.add_argument("--sweep", choices=("p", "q"), default=None)
    sweep.add_argument("--grid", type=str, default=None,
                       help="a:b:step range or comma list")
    sweep.add_argument("--fixed", type=float, default=None,
                       help="the rate held fixed while the other sweeps")
    sweep.add_argument("--trials", type=int, default=None)
    sweep.add_argument("--threshold", type=float, default=None)
    sweep.add_argument("--fixed-truth", dest="fixed_truth",
                       action="store_const", const=True, default=None)
    sweep.add_argument("--timings", action="store_const", const=True, default=None,
                       help="record real wall times (breaks byte-identical reruns)")
    _add_instance_flags(sweep)

    certify = subs.add_parser("certify", help="golfing certificate study")
    _add_common(certify, workers=True)
    certify.add_argument("--model", choices=("uu", "lu"), default=None)
    certify.add_argument("--sweep", choices=("p", "q"), default=None)
    certify.add_argument("--grid", type=str, default=None)
    certify.add_argument("--fixed", type=float, default=None)
    certify.add_argument("--trials", type=int, default=None)
    certify.add_argument("--cp", type=float, default=None,
                         help="use the analysis-regime plan with this rate multiplier")
    certify.add_argument("--lambda", dest="lam", type=float, default=None)

    leverage = subs.add_parser("leverage", help="dump leverage scores to CSV")
    _add_common(leverage)
    leverage.add_argument("--truth", type=str, default=None,
                          help="matrix CSV to analyze instead of generating one")

    return parser


def _experiment_config(vals: dict, model_default: str | None = None) -> ExperimentConfig:
    grid = vals["grid"]
    if isinstance(grid, str):
        grid = parse_grid(grid)
    model = vals["model"]
    if model_default is not None and model == "both":
        model = model_default
    return ExperimentConfig(
        n=vals["n"], r=vals["rank"], model=model, sweep=vals["sweep"],
        grid=grid, fixed_value=vals["fixed"], trials=vals["trials"],
        seed=vals["seed"], success_threshold=vals["threshold"],
        lam=vals["lam"], amplitude=vals["amplitude"], workers=vals["workers"],
        fixed_truth=vals["fixed_truth"],
        estimated_leverage=vals["estimated_leverage"],
        uniform_fallback=vals["uniform_fallback"], timings=vals["timings"],
        tol=vals["tol"], max_iters=vals["max_iters"], cp=vals["cp"],
        out=vals["out"],
    )


def cmd_gen(vals: dict) -> int:
    if vals["out"] is None:
        print("gen requires --out", file=sys.stderr)
        return 2
    L = generate_ground_truth(vals["n"], vals["rank"], rng_stream(vals["seed"], "truth"))
    write_matrix(vals["out"], L)
    print(f"wrote {vals['out']} shape={vals['n']}x{vals['n']} rank={vals['rank']}")
    return 0


def cmd_solve(vals: dict) -> int:
    cfg = _experiment_config(vals, model_default="uu")
    sol, rel = run_single(cfg, vals["p"], vals["q"])
    if vals["out"] is not None:
        write_solution(vals["out"], sol)
    print(
        f"iters={sol.iterations} residual={sol.feasibility_residual:.3e} "
        f"objective={sol.objective:.6e} converged={int(sol.converged)} "
        f"rel_error={rel:.3e}"
    )
    return 0


def cmd_sweep(vals: dict) -> int:
    cfg = _experiment_config(vals)
    _, aggregates = run_sweep(cfg)
    for agg in aggregates:
        print(
            f"{agg.model} {cfg.sweep}={agg.grid_value:g} "
            f"success={agg.successes}/{agg.trials} ratio={agg.success_ratio:.2f}"
        )
    if cfg.out is not None:
        print(f"wrote {cfg.out}")
    return 0


def cmd_certify(vals: dict) -> int:
    cfg = _experiment_config(vals, model_default="uu")
    records = run_certify(cfg)
    decay = sum(rec.decay_ok for rec in records)
    cond2 = np.array([rec.cond2_value for rec in records])
    cond3 = np.array([rec.cond3_value for rec in records])
    cond4 = max(rec.cond4_max_abs for rec in records)
    print(
        f"trials={len(records)} decay_ok={decay}/{len(records)} "
        f"cond2_max={cond2.max():.4f} cond3_max={cond3.max():.4e} "
        f"cond4_max={cond4:.1e}"
    )
    if cfg.out is not None:
        print(f"wrote {cfg.out}")
    return 0


def cmd_leverage(vals: dict) -> int:
    if vals["out"] is None:
        print("leverage requires --out", file=sys.stderr)
        return 2
    if vals["truth"] is not None:
        L = read_matrix(vals["truth"])
    else:
        L = generate_ground_truth(vals["n"], vals["rank"], rng_stream(vals["seed"], "truth"))
    prof = leverage_scores(reduced_svd(L))
    write_profile(vals["out"], prof)
    print(
        f"wrote {vals['out']} rank={prof.rank} "
        f"mu_sum={prof.mu.sum():.6f} nu_sum={prof.nu.sum():.6f}"
    )
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    vals = _resolve(args)
    handlers = {
        "gen": cmd_gen,
        "solve": cmd_solve,
        "sweep": cmd_sweep,
        "certify": cmd_certify,
        "leverage": cmd_leverage,
    }
    return handlers[args.command](vals)


if __name__ == "__main__":
    raise SystemExit(main())
