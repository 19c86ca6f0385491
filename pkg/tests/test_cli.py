from __future__ import annotations

import json
import math

import pytest

from pwthermo.cli import (EXIT_ERROR, EXIT_OK, ExperimentConfig, main, resolve_weight,
                          run_experiment)
from pwthermo.errors import ConfigError


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_catalog_list(capsys):
    code, out, _ = run(capsys, "catalog", "list")
    assert code == EXIT_OK
    names = [line.split("\t")[0] for line in out.splitlines()]
    assert names == sorted(["beta_2d_diag_2_3", "doubling", "golden_beta", "slopes_2_3", "tent"])


def test_pressure_json(capsys, tmp_path):
    csv_path = tmp_path / "p.csv"
    code, out, _ = run(capsys, "pressure", "--map", "doubling", "--weight", "one", "--nmax", "5",
                       "--csv", str(csv_path))
    assert code == EXIT_OK
    doc = json.loads(out)
    assert [row["count"] for row in doc["per_n"]] == [2, 4, 8, 16, 32]
    assert float(doc["per_n"][-1]["rate"]) == pytest.approx(math.log(2))
    assert csv_path.read_text().count("\n") == 6


def test_complexity_json(capsys):
    code, out, _ = run(capsys, "complexity", "--map", "golden_beta", "--nmax", "5")
    assert code == EXIT_OK
    assert json.loads(out)["De_n"] == [2, 3, 5, 8, 13]


def test_ulam_json(capsys):
    code, out, _ = run(capsys, "ulam", "--map", "golden_beta", "--depth", "1")
    doc = json.loads(out)
    assert code == EXIT_OK and doc["size"] == 2
    assert float(doc["eigenvalues"][0]["modulus"]) == pytest.approx(1.0, abs=1e-10)


def test_bounds_json(capsys):
    code, out, _ = run(capsys, "bounds", "--map", "doubling", "--t", "2/5", "--nmax", "6")
    assert code == EXIT_OK
    assert float(json.loads(out)[0]["r_t_p"]["value"]) == pytest.approx(2 ** -0.4)


def test_varcheck_pass(capsys):
    code, out, _ = run(capsys, "varcheck", "--map", "doubling", "--weight", "jac", "--nmax", "6")
    assert code == EXIT_OK
    assert json.loads(out)["status"] == "PASS"


def test_bad_parameters_exit_one(capsys):
    code, _, err = run(capsys, "bounds", "--map", "doubling", "--t", "0.8", "--p", "2")
    assert code == EXIT_ERROR
    assert "1/p" in err


def test_unknown_map(capsys):
    code, _, err = run(capsys, "pressure", "--map", "no_such_map")
    assert code == EXIT_ERROR and "error" in err


class TestConfig:
    def test_t_violation_message(self):
        with pytest.raises(ConfigError, match=r"t: 0.8 violates t < 1/p = 0.5"):
            ExperimentConfig.from_dict({"map": "doubling", "t": 0.8, "p": 2})

    def test_all_problems_reported(self):
        with pytest.raises(ConfigError) as info:
            ExperimentConfig.from_dict({"t": 0.2, "n_max": -1, "stages": ["nope"]})
        msg = str(info.value)
        assert "map: required" in msg and "n_max" in msg and "nope" in msg

    def test_weight_shorthands(self):
        assert resolve_weight("jac").value == -1
        assert resolve_weight("const:1/2").value == 0.5
        assert resolve_weight("detpow:-2").value == -2


def test_report_is_deterministic(capsys, tmp_path):
    cfg = {"map": "doubling", "weight": "jac", "t": [0.3], "p": [2], "n_max": 6,
           "k_max": 1, "L_max": 4, "ulam_depth": 3}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["report", "--config", str(path), "--out", str(out_a)]) == EXIT_OK
    assert main(["report", "--config", str(path), "--out", str(out_b)]) == EXIT_OK
    capsys.readouterr()
    files_a = sorted(p.name for p in out_a.iterdir())
    assert files_a == sorted(p.name for p in out_b.iterdir())
    for name in files_a:
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()
    summary = json.loads((out_a / "summary.json").read_text())
    assert "doubling" in json.dumps(summary)


def test_report_rewrite_replaces_directory(tmp_path):
    cfg = ExperimentConfig.from_dict({"map": "tent", "stages": ["cylinders", "complexity"],
                                      "n_max": 4})
    rep = run_experiment(cfg)
    target = tmp_path / "out"
    target.mkdir()
    (target / "stale.txt").write_text("old")
    rep.write(str(target))
    assert not (target / "stale.txt").exists()
    assert (target / "summary.json").exists()
