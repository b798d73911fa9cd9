import json
import subprocess
import sys

import pytest


def run_cli(args, cwd):
    return subprocess.run([sys.executable, "-m", "walshuniv.cli"] + args,
                          capture_output=True, text=True, cwd=cwd)


def test_verify_lemma1_cli(tmp_path):
    r = run_cli(["verify-lemma1", "--K", "1", "--M", "3", "--all-l",
                 "--outdir", str(tmp_path)], cwd=tmp_path)
    assert r.returncode == 0, r.stderr
    data = json.loads((tmp_path / "verify-lemma1.json").read_text())
    assert data["passed"]


def test_verify_lemma2_cli(tmp_path):
    r = run_cli(["verify-lemma2", "--eps", "9/10", "--gamma", "1",
                 "--delta-l", "0", "--delta-K", "1", "--q", "1",
                 "--outdir", str(tmp_path)], cwd=tmp_path)
    assert r.returncode == 0, r.stderr
    data = json.loads((tmp_path / "verify-lemma2.json").read_text())
    assert data["passed"] and data["mode"] == "paper"
    # schedule example from the minimal scan
    assert data["meta"]["levels"] == [[13, 15, 17, 19]]


def test_verify_lemma2_infeasible_cli(tmp_path):
    r = run_cli(["verify-lemma2", "--eps", "9/10", "--gamma", "1",
                 "--delta-l", "0", "--delta-K", "1", "--q", "2",
                 "--expect-infeasible", "--outdir", str(tmp_path)],
                cwd=tmp_path)
    assert r.returncode == 0, r.stderr
    data = json.loads((tmp_path / "verify-lemma2.json").read_text())
    assert data["meta"]["round"] == 2


def test_verify_lemma2_toy_cli(tmp_path):
    r = run_cli(["verify-lemma2", "--gamma", "2", "--delta-l", "1",
                 "--delta-K", "2", "--q", "3", "--mode", "toy",
                 "--outdir", str(tmp_path)], cwd=tmp_path)
    assert r.returncode == 0, r.stderr


def test_verify_lemma3_cli(tmp_path):
    r = run_cli(["verify-lemma3", "--pieces", "1/1024,-1/1024",
                 "--eps", "1/2", "--subsets", "10",
                 "--outdir", str(tmp_path)], cwd=tmp_path)
    assert r.returncode == 0, r.stderr


def test_approximate_cli_shape(tmp_path):
    tgt = tmp_path / "target.json"
    tgt.write_text(json.dumps(
        [{"l": 0, "K": 1, "value": "3"}, {"l": 1, "K": 1, "value": "-1"}]))
    r = run_cli(["approximate", "--target", str(tgt), "--depth", "3",
                 "--stages", "12", "--outdir", str(tmp_path)], cwd=tmp_path)
    assert r.returncode == 0, r.stderr
    csv_lines = (tmp_path / "convergence.csv").read_text().strip().splitlines()
    assert len(csv_lines) == 4  # header + 3 rows
    sel = json.loads((tmp_path / "selection.json").read_text())
    assert sel["depth"] == 3 and len(sel["chosen"]) == 3


def test_bench_cli(tmp_path):
    r = run_cli(["bench-fwht", "--js", "8", "10", "--reps", "1",
                 "--outdir", str(tmp_path)], cwd=tmp_path)
    assert r.returncode == 0, r.stderr
    lines = (tmp_path / "bench-fwht.csv").read_text().strip().splitlines()
    assert lines[0] == "J,path,nanos_per_transform"
    assert len(lines) >= 3


def test_bad_flags_error(tmp_path):
    r = run_cli(["verify-lemma3", "--pieces", "1,0,-1"], cwd=tmp_path)
    assert r.returncode != 0


def test_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 3, "outdir": str(tmp_path / "o")}))
    r = run_cli(["verify-lemma1", "--K", "0", "--M", "2",
                 "--config", str(cfg)], cwd=tmp_path)
    assert r.returncode == 0, r.stderr
    assert (tmp_path / "o" / "verify-lemma1.json").exists()
