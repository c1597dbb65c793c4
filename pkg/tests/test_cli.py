import csv
import json
import math
import subprocess
import sys

import pytest

from robinshape.cli import main
from robinshape.config import ConfigError, FORMAT_VERSION, config_to_dict, parse_run_config
from robinshape.mesh import spec_from_json

DISK = {"components": [{"type": "disk", "center": [0, 0], "radius": 1}], "resolution": 8}


def write(path, obj):
    path.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return str(path)


def run_config(**problem):
    base = {
        "functional": {"kind": "lambda_k", "k": 2},
        "m": math.pi,
        "beta": 1.0,
        "family": {"type": "balls"},
        "budget": 60,
    }
    base.update(problem)
    return {"version": FORMAT_VERSION, "seed": 0, "problem": base}


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_eig_writes_spectrum_and_report(tmp_path):
    dom = write(tmp_path / "d.json", DISK)
    out = tmp_path / "out"
    assert main(["eig", dom, "--beta", "1", "--k", "6", "--out", str(out)]) == 0
    rows = read_csv(out / "spectrum.csv")
    assert rows[0] == ["index", "lambda", "residual"] and len(rows) == 7
    report = json.loads((out / "report.json").read_text())
    assert [2, 3] in report["degenerate_pairs"]
    assert report["measure_exact"] == pytest.approx(math.pi)
    assert report["n_components"] == 1


def test_eig_resolution_override(tmp_path, capsys):
    dom = write(tmp_path / "d.json", DISK)
    assert main(["eig", dom, "--beta", "1", "--k", "1", "--resolution", "4"]) == 0
    assert capsys.readouterr().out.startswith("index,lambda,residual\n1,")


def test_eig_input_errors(tmp_path, capsys):
    bad = write(tmp_path / "bad.json", '{"components": [\n  {"type": "disk",,}]}')
    assert main(["eig", bad, "--beta", "1", "--k", "2"]) == 2
    assert "line 2 column" in capsys.readouterr().err
    dom = write(tmp_path / "d.json", DISK)
    with pytest.raises(SystemExit) as exc:
        main(["eig", dom, "--beta", "1", "--k", "0"])
    assert exc.value.code == 2
    assert main(["eig", str(tmp_path / "missing.json"), "--beta", "1", "--k", "2"]) == 2
    unknown = write(tmp_path / "u.json", {**DISK, "colour": "red"})
    assert main(["eig", unknown, "--beta", "1", "--k", "2"]) == 2


def test_eig_numerical_failure_exit_code(tmp_path, monkeypatch):
    import robinshape.fem as fem

    monkeypatch.setattr(fem, "MAX_DOF", 10)
    dom = write(tmp_path / "d.json", DISK)
    assert main(["eig", dom, "--beta", "1", "--k", "2"]) == 3


def test_oracle_examples(capsys):
    assert main(["oracle", "--radius", "1", "--dimension", "2", "--beta", "0", "--k", "1"]) == 0
    assert capsys.readouterr().out == "index,lambda,residual\n1,0,0\n"
    assert main(["oracle", "--radii", "1,1", "--dimension", "2", "--beta", "1", "--k", "4"]) == 0
    rows = capsys.readouterr().out.strip().split("\n")[1:]
    lam = [r.split(",")[1] for r in rows]
    assert lam[0] == lam[1] and lam[2] == lam[3]
    with pytest.raises(SystemExit) as exc:
        main(["oracle", "--radius", "1", "--dimension", "4", "--beta", "1", "--k", "1"])
    assert exc.value.code == 2
    assert main(["oracle", "--radius", "-1", "--beta", "1", "--k", "1"]) == 2


def test_optimize_two_balls(tmp_path):
    cfg = write(tmp_path / "c.json", run_config())
    out = tmp_path / "o"
    assert main(["optimize", cfg, "--out", str(out)]) == 0
    spec = spec_from_json((out / "best_domain.json").read_text())
    radii = [c.radius for c in spec.components]
    assert len(radii) == 2 and radii[0] / radii[1] == pytest.approx(1.0, abs=1e-6)
    doc = json.loads((out / "run.json").read_text())
    # the embedded config round-trips through the strict parser
    assert config_to_dict(parse_run_config(json.dumps(doc["config"]))) == doc["config"]
    hist = read_csv(out / "history.csv")
    assert hist[0] == ["eval", "value"] and len(hist) == 61


def test_optimize_budget_one(tmp_path):
    cfg = write(tmp_path / "c.json", run_config(budget=1))
    out = tmp_path / "o"
    assert main(["optimize", cfg, "--out", str(out)]) == 0
    assert len(read_csv(out / "history.csv")) == 2


def test_optimize_config_errors(tmp_path, capsys):
    cfg = write(tmp_path / "c.json", run_config(mode="penalized"))
    assert main(["optimize", cfg]) == 2
    assert "HypF violated" in capsys.readouterr().err
    bad = run_config()
    bad["version"] = "robinshape-run/0"
    assert main(["optimize", write(tmp_path / "v.json", bad)]) == 2
    bad = run_config()
    bad["problem"]["budgett"] = 3
    assert main(["optimize", write(tmp_path / "u.json", bad)]) == 2
    assert main(["optimize", write(tmp_path / "k.json", run_config(functional={"kind": "lambda_k", "k": 0}))]) == 2


def test_verify_suites(tmp_path, capsys):
    assert main(["verify", "nodal", "--resolution", "6", "--out", str(tmp_path / "v")]) == 0
    out = capsys.readouterr().out
    assert "nodal[disk,l=2] INFO" in out and "min_z:" in out
    doc = json.loads((tmp_path / "v" / "checks.json").read_text())
    assert doc["passed"] is True and len(doc["checks"]) == 2
    assert main(["verify", "gap", "--dimension", "3", "--k", "3", "--budget", "60"]) == 0
    assert "gap[balls,dim=3,k=3] PASS" in capsys.readouterr().out
    with pytest.raises(SystemExit) as exc:
        main(["verify", "everything"])
    assert exc.value.code == 2


def test_sweep(tmp_path):
    cfg = run_config(
        functional={"kind": "fp", "k": 1, "p": 1},
        family={"type": "stars", "fourier_order": 1},
        eigensolver={"type": "fem", "resolution": 6, "final_resolution": 6},
        budget=6,
        restarts=1,
    )
    cfg["betas"] = [0.5, 1.0]
    out = tmp_path / "s"
    assert main(["sweep", write(tmp_path / "c.json", cfg), "--out", str(out)]) == 0
    rows = read_csv(out / "sweep.csv")
    assert rows[0] == ["beta", "balls_value", "connected_value", "winner"]
    assert [r[3] for r in rows[1:]] == ["balls", "balls"]
    cfg["betas"] = []
    assert main(["sweep", write(tmp_path / "e.json", cfg)]) == 2


def test_config_parser_strictness():
    text = json.dumps(run_config(family={"type": "mixed", "stars": {"fourier_order": 2}}))
    cfg = parse_run_config(text, seed=5)
    assert cfg.seed == 5 and cfg.problem.seed == 5
    assert parse_run_config(json.dumps(config_to_dict(cfg))) == cfg
    with pytest.raises(ConfigError):
        parse_run_config(json.dumps(run_config(family={"type": "blobs"})))
    with pytest.raises(ConfigError):
        parse_run_config(json.dumps(run_config(m="3")))
    with pytest.raises(ConfigError):
        parse_run_config(json.dumps(run_config(budget=True)))


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "robinshape", "oracle", "--radius", "1", "--beta", "1", "--k", "1"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0 and proc.stdout.startswith("index,lambda,residual")
