import numpy as np
import pytest

from levmc import (
    ExperimentConfig,
    auto_lambda,
    generate_ground_truth,
    read_aggregate,
    read_certify,
    read_trials,
    run_certify,
    run_single,
    run_sweep,
    trial_seed,
)


def test_ground_truth_rank_and_scale():
    rng = np.random.default_rng(0)
    L = generate_ground_truth(100, 5, rng)
    assert L.shape == (100, 100)
    assert np.linalg.matrix_rank(L) == 5
    ortho = generate_ground_truth(100, 5, np.random.default_rng(1), orthogonalize=True)
    s = np.linalg.svd(ortho, compute_uv=False)
    assert np.abs(s[:5] - 1.0).max() <= 1e-10  # orthonormal factors
    assert np.abs(s[5:]).max() <= 1e-10
    with pytest.raises(ValueError):
        generate_ground_truth(10, 11, rng)
    with pytest.raises(ValueError):
        generate_ground_truth(10, 0, rng)


def test_ground_truth_entry_variance():
    # factor entries are N(0, 1/n^2), so E[L_ij^2] = r / n^4
    n, r = 200, 5
    ratios = [
        float(np.mean(generate_ground_truth(n, r, np.random.default_rng(s)) ** 2))
        * n**4 / r
        for s in range(20)
    ]
    assert abs(np.mean(ratios) - 1.0) <= 0.1


def test_auto_lambda_arithmetic():
    assert auto_lambda(100, 0.25) == 0.2  # 1 / sqrt(25)
    assert auto_lambda(4, 1.0) == 0.5
    with pytest.raises(ValueError):
        auto_lambda(100, 0.0)
    with pytest.raises(ValueError):
        auto_lambda(100, 1.5)
    with pytest.raises(ValueError):
        auto_lambda(0, 0.5)


def test_trial_seed_distinct_and_stable():
    assert trial_seed(7, 1, 2) == trial_seed(7, 1, 2)
    seen = {trial_seed(0, g, t) for g in range(5) for t in range(5)}
    assert len(seen) == 25
    assert trial_seed(1, 0, 0) != trial_seed(2, 0, 0)
    for s in seen:
        assert 0 <= s < 2**64


def test_config_validation():
    good = dict(n=10, r=2)
    ExperimentConfig(**good)
    bad_cases = [
        dict(n=1, r=1),
        dict(n=10, r=11),
        dict(n=10, r=2, model="xx"),
        dict(n=10, r=2, sweep="z"),
        dict(n=10, r=2, grid=()),
        dict(n=10, r=2, grid=(0.5, 0.5)),
        dict(n=10, r=2, grid=(0.5, 0.2)),
        dict(n=10, r=2, grid=(-0.1,)),
        dict(n=10, r=2, grid=(1.2,)),
        dict(n=10, r=2, fixed_value=1.5),
        dict(n=10, r=2, trials=0),
        dict(n=10, r=2, success_threshold=0.0),
        dict(n=10, r=2, lam=0.0),
        dict(n=10, r=2, workers=0),
        dict(n=10, r=2, cp=0.0),
    ]
    for kwargs in bad_cases:
        with pytest.raises(ValueError):
            ExperimentConfig(**kwargs)


def test_models_and_rate_resolution():
    cfg = ExperimentConfig(n=10, r=2, model="both", sweep="p", fixed_value=0.1)
    assert cfg.models() == ("uu", "lu")
    assert cfg.resolve_rates(0.7) == (0.7, 0.1)
    cfg = ExperimentConfig(n=10, r=2, model="uu", sweep="q", fixed_value=0.4)
    assert cfg.models() == ("uu",)
    assert cfg.resolve_rates(0.05) == (0.4, 0.05)


def test_sweep_full_observation_succeeds():
    cfg = ExperimentConfig(n=60, r=2, model="both", sweep="p", grid=(1.0,),
                           fixed_value=0.0, trials=3, seed=0)
    records, aggregates = run_sweep(cfg)
    assert len(records) == 6
    assert [rec.model for rec in records] == ["uu"] * 3 + ["lu"] * 3
    for rec in records:
        assert rec.p == 1.0 and rec.q == 0.0
        assert rec.success and rec.rel_error <= 0.05
        assert rec.wall_s == 0.0  # timings off
    assert len(aggregates) == 2
    for agg in aggregates:
        assert agg.trials == 3 and agg.successes == 3
        assert agg.success_ratio == 1.0


def test_sweep_starved_observation_fails():
    cfg = ExperimentConfig(n=60, r=5, model="both", sweep="p", grid=(0.01,),
                           fixed_value=0.1, trials=2, seed=0, max_iters=150)
    _, aggregates = run_sweep(cfg)
    for agg in aggregates:
        assert agg.successes == 0


def test_sweep_zero_rate_short_circuits():
    cfg = ExperimentConfig(n=40, r=2, model="uu", sweep="p", grid=(0.0,),
                           fixed_value=0.0, trials=2, seed=3)
    records, aggregates = run_sweep(cfg)
    for rec in records:
        assert rec.rel_error == 1.0
        assert rec.iters == 0
        assert not rec.success
    assert aggregates[0].successes == 0


def test_sweep_aggregates_recompute_from_records():
    cfg = ExperimentConfig(n=40, r=2, model="both", sweep="p", grid=(0.3, 0.6),
                           fixed_value=0.05, trials=4, seed=5)
    records, aggregates = run_sweep(cfg)
    assert len(records) == 2 * 2 * 4
    assert len(aggregates) == 4
    idx = 0
    for agg in aggregates:
        chunk = records[idx:idx + 4]
        idx += 4
        assert all(rec.model == agg.model for rec in chunk)
        assert all(rec.p == agg.grid_value for rec in chunk)
        assert agg.successes == sum(rec.success for rec in chunk)
    # canonical order: model-major, then grid, then trial
    keys = [(rec.model, rec.p) for rec in records]
    expect = [(m, g) for m in ("uu", "lu") for g in (0.3, 0.6) for _ in range(4)]
    assert keys == expect


def test_sweep_timings_flag_records_wall_time():
    cfg = ExperimentConfig(n=40, r=2, model="uu", grid=(0.8,), fixed_value=0.0,
                           trials=1, seed=0, timings=True)
    records, _ = run_sweep(cfg)
    assert records[0].wall_s > 0.0


def test_sweep_worker_count_invariance():
    base = dict(n=40, r=2, model="both", sweep="p", grid=(0.5, 0.8),
                fixed_value=0.05, trials=2, seed=9)
    serial, agg1 = run_sweep(ExperimentConfig(**base, workers=1))
    parallel, agg2 = run_sweep(ExperimentConfig(**base, workers=2))
    assert serial == parallel  # bit-identical records, any worker layout
    assert agg1 == agg2


def test_fixed_truth_shares_instance_across_trials():
    base = dict(n=50, r=2, model="uu", grid=(1.0,), fixed_value=0.0, trials=3)
    fixed, _ = run_sweep(ExperimentConfig(**base, seed=2, fixed_truth=True))
    assert len({rec.rel_error for rec in fixed}) == 1  # same data, same answer
    varied, _ = run_sweep(ExperimentConfig(**base, seed=2))
    assert len({rec.rel_error for rec in varied}) == 3


def test_sweep_writes_trials_and_aggregate_files(tmp_path):
    out = tmp_path / "sweep.csv"
    cfg = ExperimentConfig(n=40, r=2, model="uu", grid=(0.9,), fixed_value=0.0,
                           trials=2, seed=4, out=str(out))
    records, aggregates = run_sweep(cfg)
    assert read_trials(out) == records
    assert read_aggregate(tmp_path / "sweep_aggregate.csv") == aggregates


def test_estimated_leverage_clean_probe_recovers():
    # with no corruption the probe estimates usable scores
    cfg = ExperimentConfig(n=40, r=2, model="lu", grid=(0.9,), fixed_value=0.0,
                           trials=2, seed=1, estimated_leverage=True)
    records, aggregates = run_sweep(cfg)
    assert aggregates[0].successes == 2
    assert all(rec.rel_error <= 1e-4 for rec in records)


def test_run_certify_records_and_reproducibility(tmp_path):
    out = tmp_path / "cert.csv"
    cfg = ExperimentConfig(n=50, r=2, model="lu", sweep="p", grid=(0.9,),
                           fixed_value=0.05, trials=2, seed=11, out=str(out))
    records = run_certify(cfg)
    assert len(records) == 2
    for i, rec in enumerate(records):
        assert rec.n == 50 and rec.r == 2
        assert rec.q == 0.05
        assert rec.seed == trial_seed(11, 0, i)
        assert rec.cond4_max_abs == 0.0  # support invariant, exact
        assert 0 < rec.p_mean <= 1.0
    again = run_certify(ExperimentConfig(n=50, r=2, model="lu", sweep="p",
                                         grid=(0.9,), fixed_value=0.05,
                                         trials=2, seed=11))
    assert again == records
    assert read_certify(out) == records


def test_run_certify_oversampled_plan_saturates():
    cfg = ExperimentConfig(n=50, r=2, sweep="p", grid=(0.5,), fixed_value=0.05,
                           trials=1, seed=0, cp=32.0)
    rec = run_certify(cfg)[0]
    # c_p = 32 with log-squared oversampling exceeds one at this size
    assert rec.p_mean == 1.0


def test_run_single_full_observation():
    cfg = ExperimentConfig(n=50, r=2, model="uu", seed=6)
    sol, rel = run_single(cfg, p=1.0, q=0.0)
    assert sol.converged
    assert rel <= 1e-5
    with pytest.raises(ValueError):
        run_single(cfg, p=0.0, q=0.0)
