import csv
import json

import pytest

from spinspin.cli import EXIT_CONFIG, EXIT_FATAL, EXIT_OK, EXIT_PARTIAL, main, parse_axis, ConfigError


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


STAB = ["stability-scan", "--e-axis", "0,0.2,2", "--lambda-axis", "0.1,0.5,3", "--order", "2:2",
        "--gamma-steps", "60"]


def test_kepler_solve(tmp_path):
    out = str(tmp_path / "k.csv")
    assert main(["kepler-solve", "--e", "0.3,0.9", "--t", "0.5,2", "-o", out]) == EXIT_OK
    rows = _rows(out)
    assert len(rows) == 4 and all(abs(float(r["residual"])) < 1e-13 for r in rows)
    assert (tmp_path / "k.csv.log").exists()


def test_axis_parsing():
    assert len(parse_axis("1e-3,1,4,log", "x")) == 4
    for bad in ("1,2", "0,1,3,log", "a,b,3", "0,1,0", "0,1,3,cubic"):
        with pytest.raises(ConfigError):
            parse_axis(bad, "x")


def test_config_errors(tmp_path, capsys):
    out = str(tmp_path / "s.csv")
    assert main(STAB[:1] + ["--e-axis", "0,1", "-o", out]) == EXIT_CONFIG
    cfg = tmp_path / "c.ini"
    cfg.write_text("[stability-scan]\norder = 3:2\nbogus = 1\n")
    assert main(["stability-scan", "--config", str(cfg), "-o", out]) == EXIT_CONFIG
    assert f"{cfg}:3" in capsys.readouterr().err
    cfg.write_text("[stability-scan]\ngamma_steps = many\n")
    assert main(["stability-scan", "--config", str(cfg), "-o", out]) == EXIT_CONFIG
    assert main(["no-such-command"]) == EXIT_CONFIG
    assert main(STAB + ["--workers", "0", "-o", out]) == EXIT_CONFIG


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[kepler-solve]\ne = 0.1\nt = 1\n")
    out = str(tmp_path / "k.csv")
    assert main(["kepler-solve", "--config", str(cfg), "--e", "0.2", "-o", out]) == EXIT_OK
    rows = _rows(out)
    assert len(rows) == 1 and float(rows[0]["e"]) == 0.2 and float(rows[0]["t"]) == 1.0


def test_scan_is_identical_across_worker_counts_and_resumable(tmp_path):
    a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    assert main(STAB + ["--workers", "1", "-o", a]) == EXIT_OK
    assert main(STAB + ["--workers", "2", "-o", b]) == EXIT_OK
    assert open(a).read() == open(b).read()
    rows = _rows(a)
    assert len(rows) == 6 and {r["class"] for r in rows} <= {"elliptic", "hyperbolic", "parabolic"}
    # drop the output and the last manifest record, then resume
    man = tmp_path / "a.csv.manifest.jsonl"
    lines = man.read_text().splitlines()
    man.write_text("\n".join(lines[:-1]) + "\n")
    first = open(a).read()
    (tmp_path / "a.csv").unlink()
    assert main(STAB + ["--workers", "1", "--resume", "-o", a]) == EXIT_OK
    assert open(a).read() == first
    assert len(man.read_text().splitlines()) == len(lines)


def test_resonance_commands(tmp_path):
    out = str(tmp_path / "r.json")
    assert main(["resonance-find", "--e", "0.1", "--lambda1", "0.2", "--order", "3:2",
                 "--flavor", "standard", "-o", out]) == EXIT_OK
    rec = json.load(open(out))
    assert rec["converged"] and rec["monodromy"]["dim"] == 2
    out = str(tmp_path / "s.csv")
    assert main(["resonance-enumerate", "--e", "0.0", "--lambda1", "0.25", "--order", "2:2",
                 "--gamma-steps", "100", "-o", out]) == EXIT_OK
    assert any(abs(float(r["v0"]) - 1.0) < 1e-8 for r in _rows(out))
    assert main(["resonance-find", "--order", "3:3", "-o", out]) == EXIT_CONFIG


def test_poincare_and_sync(tmp_path):
    out = str(tmp_path / "p.csv")
    assert main(["poincare", "--e", "0.06", "--lambda1", "0.05", "--lambda2", "0.05",
                 "--k-max", "5", "-o", out]) == EXIT_OK
    assert len(_rows(out)) == 12
    out = str(tmp_path / "sync.csv")
    assert main(["sync-sweep", "--e", "0.06", "--lambda1", "0.05", "--lambda2", "0.05",
                 "--qhat1", "0.001", "--qhat2", "0.001", "--sigma-axis", "0.01,0.3,2",
                 "--k-max", "100", "-o", out]) == EXIT_OK
    assert len(_rows(out)) == 2


def test_compare_commands(tmp_path):
    out = str(tmp_path / "c.csv")
    assert main(["compare", "--lambda1", "0.05", "--lambda2", "0.05", "--sigma1", "1e-3",
                 "--qhat1", "0.01", "--qhat2", "0.01", "--a", "25.81988897471611",
                 "--horizon", "1", "-o", out]) == EXIT_OK
    summary = json.load(open(out + ".json"))
    assert summary["collision"] is None and summary["max_abs_delta_a"] < 1e-2
    out = str(tmp_path / "g.csv")
    assert main(["compare-grid", "--lambda-axis", "1e-3,1,2,log", "--sigma-axis", "1e-4,1e-3,2,log",
                 "--horizon", "1", "-o", out]) == EXIT_OK
    assert [r["status"] for r in _rows(out)] == ["ok"] * 4
    # a single-body order is not a comparison
    assert main(["compare", "--order", "3:2", "--type", "0", "--horizon", "1", "-o", out]) == EXIT_FATAL


def test_floquet_and_diophantine(tmp_path):
    out = str(tmp_path / "f.csv")
    assert main(["floquet-table", "-o", out]) == EXIT_OK
    rows = _rows(out)
    assert [r["block"] for r in rows].count("z") == 8
    out = str(tmp_path / "d.json")
    assert main(["diophantine-check", "--K", "10", "-o", out]) == EXIT_OK
    assert json.load(open(out))["accepted"]
    assert main(["diophantine-check", "--poly", "1,0,0,-1", "-o", out]) == EXIT_PARTIAL
    assert main(["diophantine-check", "--A", "1,0", "-o", out]) == EXIT_CONFIG
