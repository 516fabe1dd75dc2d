import json
import math
import os

import numpy as np
import pytest

from sepca.cli import main, parse_levels, read_config_file
from sepca.noise import load_path


def run(argv, capsys):
    code = main(argv)
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def test_parse_levels():
    assert parse_levels("8:12") == (256, 512, 1024, 2048, 4096)
    assert parse_levels("4,6") == (16, 64)


def test_simulate_linear_matches_exponential(capsys):
    code, out, _ = run(
        ["simulate", "--problem", "linear", "--a", "-1", "--a0", "0", "--b", "0", "--b0", "0", "--x0", "1", "--level", "12", "--seed", "7"],
        capsys,
    )
    assert code == 0
    term = float(next(ln for ln in out.splitlines() if ln.startswith("# terminal")).split("=")[1])
    assert abs(term - math.exp(-1)) <= 1e-3
    rows = [ln for ln in out.splitlines() if not ln.startswith("#")]
    assert rows[0] == "step,t,y_1"
    assert len(rows) == 1 + 4097


def test_simulate_dump_path(tmp_path, capsys):
    dump = tmp_path / "path.bin"
    code, _, _ = run(["simulate", "--level", "5", "--horizon", "2", "--seed", "3", "--dump-path", str(dump), "--out", str(tmp_path / "y.csv")], capsys)
    assert code == 0
    with open(dump, "rb") as fh:
        p = load_path(fh)
    assert (p.noise_dim, p.horizon, p.steps_per_unit) == (1, 2, 32)


def test_validate_even_alpha_rejected(capsys):
    code, _, err = run(["validate", "--problem", "poly", "--alpha", "4"], capsys)
    assert code != 0
    assert "odd" in err and len(err.strip().splitlines()) == 1


def test_validate_reports_json(capsys):
    code, out, _ = run(["validate", "--problem", "linear", "--a", "1", "--a0", "0.5", "--b", "1", "--b0", "0.5", "--samples", "500"], capsys)
    assert code == 0
    rep = json.loads(out)["report"]
    assert rep["k_estimate_one_sided"] == pytest.approx(1.0)
    assert rep["violations"] == []


def test_converge_writes_table(tmp_path, capsys):
    out = tmp_path / "t1.csv"
    argv = [
        "converge", "--problem", "poly", "--alpha", "3", "--a", "0.5", "--b", "1", "--x0", "1.5",
        "--horizons", "1,2", "--levels", "3:5", "--fine-level", "7", "--blocks", "2", "--per-block", "5",
        "--seed", "42", "--out", str(out), "--workers", "1",
    ]
    assert run(argv, capsys)[0] == 0
    text = out.read_text()
    assert "# base_seed = 42" in text
    assert "step,eps_T1,ratio_T1,eps_T2,ratio_T2" in text
    assert json.loads((tmp_path / "t1.json").read_text())["trajectories_used"] == 10
    # identical argv -> identical bytes, independent of worker count
    out2 = tmp_path / "t2.csv"
    argv2 = argv[:-4] + ["--out", str(out2), "--workers", "2"]
    assert run(argv2, capsys)[0] == 0
    assert out2.read_bytes() == out.read_bytes()


def test_converge_bad_level_is_usage_error(capsys):
    code, _, err = run(["converge", "--levels", "8:12", "--fine-level", "10", "--blocks", "1", "--per-block", "1"], capsys)
    assert code == 2
    assert "divide" in err


def test_unknown_flag_is_usage_error(capsys):
    code, _, _ = run(["converge", "--frobnicate"], capsys)
    assert code == 2


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# desk run\nlevels = 3:4\nfine-level = 6\nblocks = 1\nper-block = 3\nseed = 5\nworkers = 1\n")
    assert read_config_file(cfg)["per_block"] == "3"
    code, out, _ = run(["converge", "--config", str(cfg), "--seed", "9"], capsys)
    assert code == 0
    assert "# base_seed = 9" in out and "# blocks = 1" in out


def test_config_file_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("nonsense = 1\n")
    assert run(["converge", "--config", str(cfg)], capsys)[0] == 2


def test_seed_from_environment(monkeypatch, capsys):
    monkeypatch.setenv("SEPCA_SEED", "1234")
    code, out, _ = run(["simulate", "--level", "2"], capsys)
    assert code == 0 and "# seed = 1234" in out


def test_moments_command(capsys):
    code, out, _ = run(
        ["moments", "--problem", "poly", "--alpha", "5", "--a", "4.5", "--b", "3", "--x0", "5", "--levels", "3", "--blocks", "1", "--per-block", "20", "--p", "2", "--workers", "1"],
        capsys,
    )
    assert code == 0
    lvl = json.loads(out)["report"]["levels"]["8"]
    assert lvl["explicit_divergences"] == 20 and lvl["tamed_divergences"] == 0
