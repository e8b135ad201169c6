import numpy as np
import pytest

from levmc import (
    AGGREGATE_HEADER,
    CERTIFY_HEADER,
    TRIALS_HEADER,
    read_matrix,
    read_profile,
    read_trials,
)
from levmc.cli import main, parse_grid, read_config_file


def test_parse_grid_range_lands_on_endpoint():
    vals = parse_grid("0.2:0.7:0.05")
    assert vals == tuple(round(0.2 + 0.05 * i, 10) for i in range(11))
    assert vals[-1] == 0.7
    vals = parse_grid("0.02:0.2:0.02")
    assert len(vals) == 10
    assert vals[0] == 0.02 and vals[-1] == 0.2


def test_parse_grid_lists():
    assert parse_grid("0.1,0.4,0.9") == (0.1, 0.4, 0.9)
    assert parse_grid("0.5") == (0.5,)
    assert parse_grid(" 0.1, 0.2 ") == (0.1, 0.2)


def test_parse_grid_errors():
    for bad in ("1:2", "0.1:0.5:0", "0.1:0.5:-0.1", "", ","):
        with pytest.raises(ValueError):
            parse_grid(bad)


def test_read_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# a comment\n"
        "\n"
        "n=30\n"
        "max-iters = 120\n"
        "lambda=0.5\n"
        "model=uu\n"
    )
    vals = read_config_file(cfg)
    assert vals == {"n": "30", "max_iters": "120", "lam": "0.5", "model": "uu"}
    cfg.write_text("mystery=1\n")
    with pytest.raises(ValueError, match="unknown key"):
        read_config_file(cfg)
    cfg.write_text("just a line\n")
    with pytest.raises(ValueError, match="key=value"):
        read_config_file(cfg)


def test_gen_writes_matrix_and_requires_out(tmp_path, capsys):
    out = tmp_path / "L.csv"
    assert main(["gen", "--n", "30", "--rank", "2", "--seed", "5",
                 "--out", str(out)]) == 0
    L = read_matrix(out)
    assert L.shape == (30, 30)
    assert np.linalg.matrix_rank(L) == 2
    capsys.readouterr()
    assert main(["gen", "--n", "10", "--rank", "2"]) == 2
    assert "requires --out" in capsys.readouterr().err


def test_gen_is_seed_deterministic(tmp_path):
    a, b, c = (tmp_path / name for name in ("a.csv", "b.csv", "c.csv"))
    main(["gen", "--n", "20", "--rank", "2", "--seed", "9", "--out", str(a)])
    main(["gen", "--n", "20", "--rank", "2", "--seed", "9", "--out", str(b)])
    main(["gen", "--n", "20", "--rank", "2", "--seed", "10", "--out", str(c)])
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() != c.read_bytes()


def test_config_file_values_and_cli_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("n=30\nrank=2\nseed=5\n")
    from_file = tmp_path / "file.csv"
    overridden = tmp_path / "cli.csv"
    assert main(["gen", "--config", str(cfg), "--out", str(from_file)]) == 0
    assert read_matrix(from_file).shape == (30, 30)
    assert main(["gen", "--config", str(cfg), "--n", "22",
                 "--out", str(overridden)]) == 0
    assert read_matrix(overridden).shape == (22, 22)


def test_solve_command_reports_and_writes(tmp_path, capsys):
    out = tmp_path / "sol"
    code = main(["solve", "--n", "30", "--rank", "2", "--p", "1.0", "--q", "0.0",
                 "--seed", "5", "--out", str(out)])
    assert code == 0
    printed = capsys.readouterr().out
    assert "converged=1" in printed
    assert "rel_error=" in printed
    assert read_matrix(out / "Lhat.csv").shape == (30, 30)
    assert read_matrix(out / "Shat.csv").shape == (30, 30)
    assert (out / "diagnostics.csv").exists()


def test_leverage_command(tmp_path, capsys):
    truth = tmp_path / "L.csv"
    main(["gen", "--n", "24", "--rank", "3", "--seed", "2", "--out", str(truth)])
    prof_path = tmp_path / "prof.csv"
    assert main(["leverage", "--truth", str(truth), "--out", str(prof_path)]) == 0
    prof = read_profile(prof_path)
    assert prof.rank == 3
    assert abs(prof.mu.sum() - 24.0) <= 1e-8
    assert abs(prof.nu.sum() - 24.0) <= 1e-8
    capsys.readouterr()
    assert main(["leverage", "--n", "10", "--rank", "2"]) == 2
    assert "requires --out" in capsys.readouterr().err
    generated = tmp_path / "gen_prof.csv"
    assert main(["leverage", "--n", "16", "--rank", "2", "--seed", "0",
                 "--out", str(generated)]) == 0
    assert read_profile(generated).mu.size == 16


def test_sweep_command_end_to_end(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code = main(["sweep", "--n", "40", "--rank", "2", "--model", "uu",
                 "--grid", "0.9", "--fixed", "0.0", "--trials", "2",
                 "--seed", "3", "--out", str(out)])
    assert code == 0
    printed = capsys.readouterr().out
    assert "uu p=0.9 success=2/2 ratio=1.00" in printed
    lines = out.read_text().splitlines()
    assert lines[0] == TRIALS_HEADER
    assert len(lines) == 3
    agg = tmp_path / "sweep_aggregate.csv"
    assert agg.read_text().splitlines()[0] == AGGREGATE_HEADER
    records = read_trials(out)
    assert all(rec.model == "uu" and rec.p == 0.9 for rec in records)


def test_sweep_config_file_drives_run(tmp_path):
    cfg = tmp_path / "sweep.cfg"
    out = tmp_path / "out.csv"
    cfg.write_text(
        "n=40\nrank=2\nmodel=uu\ngrid=0.9\nfixed=0.0\ntrials=2\nseed=3\n"
    )
    assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
    assert len(read_trials(out)) == 2


def test_sweep_worker_count_byte_identity(tmp_path):
    args = ["sweep", "--n", "40", "--rank", "2", "--model", "both",
            "--grid", "0.5,0.8", "--fixed", "0.05", "--trials", "2",
            "--seed", "11"]
    one = tmp_path / "w1.csv"
    four = tmp_path / "w4.csv"
    assert main(args + ["--workers", "1", "--out", str(one)]) == 0
    assert main(args + ["--workers", "4", "--out", str(four)]) == 0
    assert one.read_bytes() == four.read_bytes()
    assert (tmp_path / "w1_aggregate.csv").read_bytes() == \
        (tmp_path / "w4_aggregate.csv").read_bytes()


def test_certify_command_end_to_end(tmp_path, capsys):
    out1 = tmp_path / "c1.csv"
    out2 = tmp_path / "c2.csv"
    args = ["certify", "--n", "40", "--rank", "2", "--model", "lu",
            "--grid", "0.9", "--fixed", "0.05", "--trials", "2", "--seed", "7"]
    assert main(args + ["--out", str(out1)]) == 0
    printed = capsys.readouterr().out
    assert "decay_ok=" in printed
    assert "cond4_max=0.0e+00" in printed
    assert out1.read_text().splitlines()[0] == CERTIFY_HEADER
    assert main(args + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_unknown_command_exits_with_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
