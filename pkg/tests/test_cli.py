import csv
import json
import math

import pytest

from dcmvoter.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def test_theory_regular(capsys):
    code, cap = run(capsys, "theory", "--family", "regular", "--d", "3")
    assert code == 0
    rows = list(csv.DictReader(cap.out.splitlines()))
    assert float(rows[0]["theta"]) == pytest.approx(1.2247449, abs=1e-7)


def test_theory_alternate(capsys):
    _, cap = run(capsys, "theory", "--family", "alternate", "--a", "2", "--b", "4")
    rows = list(csv.DictReader(cap.out.splitlines()))
    assert float(rows[0]["theta"]) == pytest.approx(0.956167, abs=2e-6)


def test_theory_figure1_preset(capsys):
    _, cap = run(capsys, "theory", "--preset", "figure1")
    rows = list(csv.DictReader(cap.out.splitlines()))
    assert len(rows) == 5
    assert list(rows[0]) == ["family", "delta", "beta", "rho", "gamma", "alpha", "p", "q", "r", "theta"]


def test_generate(tmp_path, capsys):
    code, _ = run(capsys, "generate", "--n", "40", "--seed", "3", "--out", str(tmp_path))
    assert code == 0
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["seed"] == 3 and man["seed_source"] == "flag"
    assert (tmp_path / "edges.csv").read_text().startswith("src,dst,multiplicity")


def test_simulate_meeting(tmp_path, capsys):
    code, _ = run(capsys, "simulate", "meeting", "--n", "200", "--trials", "500", "--seed", "1", "--out", str(tmp_path))
    assert code == 0
    lines = (tmp_path / "samples.csv").read_text().splitlines()
    assert len(lines) == 501
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["seed"] == 1 and man["trials"] == 500 and man["command"] == "simulate meeting"
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["reference"] == "exp1" and summary["w1"] >= 0
    assert (tmp_path / "samples_rescaled.csv").exists()


def test_simulate_voter_u_tenth(tmp_path, capsys):
    run(capsys, "simulate", "voter", "--n", "60", "--u", "0.1", "--trials", "200", "--seed", "2", "--out", str(tmp_path))
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["reference"] == "consensus_sum"
    assert "w1" in summary and 0 <= summary["consensus_on_one"] <= 1


def test_simulate_workers_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    base = ["simulate", "coalescence", "--n", "100", "--trials", "300", "--seed", "9"]
    run(capsys, *base, "--workers", "1", "--out", str(a))
    run(capsys, *base, "--workers", "8", "--out", str(b))
    assert (a / "samples.csv").read_bytes() == (b / "samples.csv").read_bytes()


def test_quenched_seed_pins_graph(tmp_path, capsys):
    for name, seed in (("a", "1"), ("b", "2")):
        run(capsys, "simulate", "meeting", "--n", "50", "--trials", "10", "--seed", seed, "--quenched-seed", "77", "--out", str(tmp_path / name))
    ma = json.loads((tmp_path / "a" / "manifest.json").read_text())
    mb = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert ma["graph_seed"] == mb["graph_seed"] == 77


def test_seed_from_env(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("DCM_SEED", "123")
    run(capsys, "generate", "--n", "20", "--out", str(tmp_path))
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["seed"] == 123 and man["seed_source"] == "DCM_SEED"


def test_seed_auto_recorded(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("DCM_SEED", raising=False)
    run(capsys, "generate", "--n", "20", "--out", str(tmp_path))
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert isinstance(man["seed"], int) and man["seed_source"] == "entropy"


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nn = 30\nseed = 5\ntrials = 20\n")
    out = tmp_path / "o"
    run(capsys, "--config", str(cfg), "simulate", "meeting", "--trials", "40", "--out", str(out))
    man = json.loads((out / "manifest.json").read_text())
    assert man["n"] == 30 and man["seed"] == 5 and man["trials"] == 40


def test_collapsed_commands(tmp_path, capsys):
    code, cap = run(capsys, "collapsed", "exact-meeting", "--n", "20", "--seed", "4", "--out", str(tmp_path))
    res = json.loads(cap.out)
    assert code == 0 and res["discrete"] == pytest.approx(2 * res["continuous"])
    code, cap = run(capsys, "collapsed", "rt", "--n", "20", "--T", "50", "--seed", "4", "--out", str(tmp_path))
    assert json.loads(cap.out)["T"] == 50
    assert (tmp_path / "rt.csv").read_text().startswith("T,R_T")
    code, cap = run(capsys, "collapsed", "lambda", "--n", "100", "--T", str(math.floor(math.log(100))), "--seed", "4", "--out", str(tmp_path))
    assert 0 < json.loads(cap.out)["lam"] < 1


def test_forest_command(tmp_path, capsys):
    code, cap = run(capsys, "forest", "--n", "12", "--T", "60", "--trials", "2000", "--seed", "1", "--out", str(tmp_path))
    res = json.loads(cap.out)
    assert code == 0 and res["target"] == pytest.approx(math.sqrt(1.5))
    assert (tmp_path / "first_return.csv").read_text().startswith("t,mass")


def test_mixing_command(tmp_path, capsys):
    code, cap = run(capsys, "mixing", "--n", "200", "--starts", "all", "--seed", "1", "--out", str(tmp_path))
    assert code == 0 and cap.out.startswith("t=")
    assert (tmp_path / "tv.csv").read_text().startswith("t,tv")


def test_usage_errors(capsys):
    with pytest.raises(SystemExit):
        main(["theory", "--family", "nope"])
    code, cap = run(capsys, "generate", "--family", "alternate", "--n", "7")
    assert code == 2 and "even" in cap.err


def test_check_exact_suite(tmp_path, capsys):
    code, cap = run(capsys, "check", "--suite", "theory", "--out", str(tmp_path))
    assert code == 0
    assert "criterion  3 PASS" in cap.out and "criterion 11 PASS" in cap.out
    verdicts = json.loads((tmp_path / "check.json").read_text())
    assert {v["id"] for v in verdicts} == {3, 11}
    assert all("seed" in v and "tolerance" in v for v in verdicts)
