import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from noetherlab.cli import main
from noetherlab.lagrangians import shipped
from noetherlab.nonlocal_model import truncated_model_lagrangian
from noetherlab.tensor_expr import from_json_obj
from noetherlab.variational import SymmetryVariation, noether_current

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_derive_klein_gordon(tmp_path, capsys):
    assert main(["derive", str(CONFIGS / "klein_gordon.lag"), "--defect", "--out", str(tmp_path)]) == 0
    data = json.loads((tmp_path / "currents.json").read_text())
    assert set(data) == {"internal", "translation", "rotation"}
    spec = shipped("klein-gordon").spec()
    assert from_json_obj(data["translation"]) == noether_current(spec, SymmetryVariation.translation())
    assert "defect[rotation] = 0" in capsys.readouterr().out
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["command"] == "derive"
    assert manifest["outputs"] == ["currents.json", "currents.txt"]


def test_derive_model_at_first_order(tmp_path):
    assert main(["derive", str(CONFIGS / "nonlocal_L1.lag"), "--symmetry", "internal",
                 "--out", str(tmp_path)]) == 0
    got = from_json_obj(json.loads((tmp_path / "currents.json").read_text())["internal"])
    assert got == noether_current(truncated_model_lagrangian(1), SymmetryVariation.u1())


def test_derive_flags_non_invariant_lagrangian(tmp_path, capsys):
    spec = tmp_path / "broken.lag"
    spec.write_text("phi* phi d[0] phi\n")
    rc = main(["derive", str(spec), "--dim", "2", "--symmetry", "internal", "--defect",
               "--out", str(tmp_path / "o")])
    err = capsys.readouterr()
    assert rc == 1
    assert "not invariant" in err.err
    assert "NONZERO" in err.out


def test_malformed_spec_reports_position(tmp_path, capsys):
    spec = tmp_path / "bad.lag"
    spec.write_text("# comment line\nphi* phi + d[mu] d[mu] phi\n")
    assert main(["derive", str(spec), "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert f"{spec}:2:" in err


def test_unknown_symmetry(tmp_path):
    assert main(["derive", str(CONFIGS / "klein_gordon.lag"), "--symmetry", "scale",
                 "--out", str(tmp_path)]) == 2


def small_sim(tmp_path, **over):
    cfg = json.loads((CONFIGS / "demo_1d.json").read_text())
    cfg["lattice"]["steps"] = 60
    cfg["outputs"]["snapshots"] = True
    cfg.update(over)
    path = tmp_path / "sim.json"
    path.write_text(json.dumps(cfg))
    return path


def test_simulate_is_deterministic(tmp_path):
    cfg = small_sim(tmp_path)
    for name in ("a", "b"):
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / name)]) == 0
    for f in ("charges.csv", "field_final.npy", "manifest.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    rows = read_csv(tmp_path / "a" / "charges.csv")
    assert rows[0][:4] == ["t", "Q", "E_tot", "P1"]
    assert len(rows) == 1 + 60 // 10 + 1


def test_simulate_missing_key(tmp_path, capsys):
    cfg = json.loads((CONFIGS / "demo_1d.json").read_text())
    del cfg["lattice"]["N"]
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    assert main(["simulate", "--config", str(path), "--out", str(tmp_path / "o")]) == 2
    assert "missing config key 'lattice.N'" in capsys.readouterr().err


def test_simulate_rejects_unresolved_packet(tmp_path, capsys):
    cfg = json.loads((CONFIGS / "demo_1d.json").read_text())
    cfg["packet"]["width"] = 0.1
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    assert main(["simulate", "--config", str(path), "--out", str(tmp_path / "o")]) == 2
    assert "unresolved" in capsys.readouterr().err


def test_model_tables(tmp_path):
    assert main(["model", "--order", "6", "--mass", "2", "--out", str(tmp_path)]) == 0
    coeffs = read_csv(tmp_path / "coefficients.csv")
    assert coeffs[0] == ["l", "numerator", "denominator", "m_power"]
    assert coeffs[3] == ["2", "-1", "8", "-3"]
    assert len(coeffs) == 8
    assert len(read_csv(tmp_path / "ward_scan.csv")) > 1
    assert read_csv(tmp_path / "kernel_convergence.csv")[0][-1] == "abs_error"


def test_verify_suites(tmp_path, capsys):
    assert main(["verify", "--suite", "ward", "--suite", "coefficients", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 2
    assert main(["verify", "--suite", "kernel"]) == 1
    assert "failed criteria: 3 (kernel)" in capsys.readouterr().err
    assert main(["verify", "--suite", "nonsense"]) == 2


def test_verify_simulation_config(tmp_path):
    assert main(["verify", "--config", str(small_sim(tmp_path)), "--out", str(tmp_path / "v")]) == 0
    rows = read_csv(tmp_path / "v" / "verify.csv")
    assert {r[0] for r in rows[1:]} == {"Q", "E_tot", "P", "continuity"}
    assert all(r[3] == "True" for r in rows[1:])


def test_report_writes_figures(tmp_path):
    assert main(["report", "--out", str(tmp_path)]) == 0
    for name in ("coefficients", "kernel_convergence", "charges", "series_convergence"):
        assert (tmp_path / f"{name}.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
        assert (tmp_path / f"{name}.csv").exists()


def test_bad_arguments():
    with pytest.raises(SystemExit):
        main(["model", "--tol-scale", "0"])
    with pytest.raises(SystemExit):
        main(["model", "--seed", "-1"])


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "noetherlab.cli", "--version"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert res.stdout.startswith("noetherlab ")
