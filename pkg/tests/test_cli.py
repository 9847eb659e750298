import json
import time

import pytest

from kmslab import cli, io


def run(tmp_path, *args):
    return cli.main([*args, "--output", str(tmp_path)])


def test_unknown_key_in_config_file(tmp_path, capsys):
    conf = tmp_path / "bad.conf"
    conf.write_text("# typo below\nbetta = 1\n", encoding="utf-8")
    assert cli.main(["kms-check", "--config", str(conf)]) == 2
    assert "betta" in capsys.readouterr().err


def test_unknown_key_via_set(capsys):
    assert cli.main(["lindblad", "--set", "betta=1"]) == 2
    assert "betta" in capsys.readouterr().err


def test_unknown_flag_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        cli.main(["kinetic", "--betta", "1"])
    assert exc.value.code == 2


def test_bad_values_rejected(tmp_path, capsys):
    assert run(tmp_path, "kinetic", "--side", "two") == 2
    assert run(tmp_path, "kinetic", "--tol", "-1") == 2
    assert run(tmp_path, "kms-check", "--sites", "20") == 2
    assert "14" in capsys.readouterr().err
    assert run(tmp_path, "kinetic", "--dimension", "1") == 2


def test_config_parsing_rules():
    schema = cli.schema_for("kms-check")
    vals = cli.parse_config_text("beta = 2.5  # inline comment\n\n  sites=4\n", schema)
    assert vals == {"beta": 2.5, "sites": 4}
    with pytest.raises(cli.ConfigError, match="key = value"):
        cli.parse_config_text("beta 2.5\n", schema)


def test_flags_override_file(tmp_path):
    conf = tmp_path / "c.conf"
    conf.write_text("check_beta = 0.25\nsites = 4\n", encoding="utf-8")
    assert cli.main(["kms-check", "--config", str(conf), "--check-beta", "0.5", "--output", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "kms-check" / "verdict.json").read_text())
    assert doc["check_beta"] == 0.5


def test_kinetic_smallest_grid_fast(tmp_path):
    t0 = time.perf_counter()
    assert run(tmp_path, "kinetic", "--side", "2") == 0
    assert time.perf_counter() - t0 < 1.0
    out = tmp_path / "kinetic"
    rows = io.read_csv(out / "trajectory.csv")
    assert list(rows[0]) == ["tau", "entropy", "N", "E", "collision_norm", "beta_fit", "mu_fit"]
    occ = json.loads((out / "occupation.json").read_text())["occupation"]
    assert sorted(occ, key=int) == ["0", "1", "2", "3"]
    summary = json.loads((out / "summary.json").read_text())
    assert summary["converged"] and "invariants" in summary


def test_kinetic_nonconvergence_exit_code(tmp_path):
    assert run(tmp_path, "kinetic", "--side", "4", "--tau-max", "0.05") == 3


def test_outputs_are_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert cli.main(["lindblad", "--sites", "2", "--seed", "7", "--output", str(d)]) == 0
        assert cli.main(["kinetic", "--side", "3", "--seed", "7", "--output", str(d)]) == 0
    for rel in ("lindblad/trace.csv", "lindblad/stationary.json", "kinetic/trajectory.csv",
                "kinetic/occupation.json", "kinetic/summary.json"):
        assert (a / rel).read_bytes() == (b / rel).read_bytes(), rel
    c = tmp_path / "c"
    cli.main(["lindblad", "--sites", "2", "--seed", "8", "--output", str(c)])
    assert (c / "lindblad/trace.csv").read_bytes() != (a / "lindblad/trace.csv").read_bytes()


def test_every_file_has_header(tmp_path):
    assert run(tmp_path, "lindblad", "--sites", "2") == 0
    assert run(tmp_path, "kms-check", "--sites", "4") == 0
    assert run(tmp_path, "commute", "--sizes", "4") == 0
    for path in tmp_path.rglob("*.csv"):
        text = path.read_text()
        assert text.startswith("# config_hash: ") and "# version numpy" in text, path
    for path in tmp_path.rglob("*.json"):
        hdr = json.loads(path.read_text())["header"]
        assert {"config_hash", "versions", "tolerances"} <= set(hdr), path


def test_lindblad_stationary_json(tmp_path):
    assert run(tmp_path, "lindblad", "--sites", "2") == 0
    doc = json.loads((tmp_path / "lindblad" / "stationary.json").read_text())
    st = doc["stationary"]
    assert st["dimension"] >= 1
    first = st["states"][0]
    assert len(first["real"]) == 4 and len(first["imag"][0]) == 4
    assert doc["entropy_factor"] == 2.0


def test_kms_check_outputs(tmp_path):
    assert run(tmp_path, "kms-check", "--sites", "4") == 0
    doc = json.loads((tmp_path / "kms-check" / "verdict.json").read_text())
    assert doc["kms"] and abs(doc["beta_hat"] - 1.0) < 1e-10
    rows = io.read_csv(tmp_path / "kms-check" / "spectrum.csv")
    assert list(rows[0]) == ["mu", "lam", "weight"]
    assert run(tmp_path, "kms-check", "--sites", "4", "--state", "pinched-kinetic") == 0
    doc = json.loads((tmp_path / "kms-check" / "verdict.json").read_text())
    assert not doc["kms"]


def test_cluster_and_plots(tmp_path):
    assert run(tmp_path, "cluster", "--sites", "8", "--window", "3", "--three-point-j", "2", "--plots", "yes") == 0
    out = tmp_path / "cluster"
    assert (out / "decay.dat").exists() and (out / "decay.gp").exists()
    fit = json.loads((out / "fit.json").read_text())
    assert fit["M"] > 0


def test_lr_subcommand(tmp_path):
    assert run(tmp_path, "lr", "--sites", "6", "--xs", "1,2,3", "--ts", "0.5,1.0,1.5") == 0
    rows = io.read_csv(tmp_path / "lr" / "samples.csv")
    assert len(rows) == 9 and list(rows[0]) == ["x", "t", "value"]


def test_scaling_subcommand(tmp_path):
    rc = run(tmp_path, "scaling", "--sites", "4", "--trace-points", "3")
    rep = json.loads((tmp_path / "scaling" / "report.json").read_text())
    # four sites is too small for a monotone trend; the exit code must follow the verdict
    assert rc == (0 if rep["verdict"] else 1)
    assert rep["picture_defect"] < 1e-11
    assert len(io.read_csv(tmp_path / "scaling" / "trace.csv")) > 0
    assert run(tmp_path, "scaling", "--lambdas", "0.1,0.2") == 2


def test_accept_subset(tmp_path, capsys):
    assert run(tmp_path, "accept", "--criteria", "5,9") == 0
    out = capsys.readouterr().out
    assert "PASS criterion 5" in out and "PASS criterion 9" in out
    doc = json.loads((tmp_path / "accept" / "verdict.json").read_text())
    assert doc["passed"] and set(doc["criteria"]) == {"5", "9"}


def test_shipped_default_config_parses():
    vals = cli.parse_config_text(cli.default_config_text(), cli.schema_for("accept"))
    assert vals["criteria"] == tuple(range(1, 10))
