import json

import pytest

from phaselab import cli


def test_parse_config_defaults():
    cfg = cli.parse_config()
    assert cfg["mesh.family"] == "icosphere"
    assert cfg["potential.id"] == "quartic"
    assert cfg["flow.tau0"] == "1.0"


def test_parse_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("epsilon = 0.2, 0.1\n"
                    "# comment line\n"
                    "mesh.family = torus   # trailing comment\n"
                    "\n"
                    "flow.max_steps = 50\n")
    cfg = cli.parse_config(path)
    assert cli._floats(cfg, "epsilon") == [0.2, 0.1]
    assert cfg["mesh.family"] == "torus"
    assert cfg["flow.max_steps"] == "50"
    # untouched keys keep their defaults
    assert cfg["profile.n_samples"] == "1024"


def test_parse_config_bad_line(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("no equals sign here\n")
    with pytest.raises(ValueError):
        cli.parse_config(path)


def test_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("PHASELAB_FLOW_TAU0", "0.25")
    monkeypatch.setenv("PHASELAB_PROFILE_N_SAMPLES", "96")
    monkeypatch.setenv("PHASELAB_V", "0.7")
    cfg = cli.parse_config()
    assert cfg["flow.tau0"] == "0.25"
    assert cfg["profile.n_samples"] == "96"
    assert cfg["V"] == "0.7"
    assert cli.build_flow_config(cfg).tau0 == 0.25


def test_build_mesh_families():
    cfg = cli.parse_config()
    assert cli.build_mesh(cfg).family_tag == "sphere"
    cfg["mesh.family"] = "torus"
    cfg["mesh.nu"], cfg["mesh.nv"] = "12", "8"
    assert cli.build_mesh(cfg).family_tag == "torus"
    cfg["mesh.family"] = "moebius"
    with pytest.raises(ValueError):
        cli.build_mesh(cfg)


def test_mode_profile_artifacts(tmp_path, monkeypatch):
    monkeypatch.setenv("PHASELAB_PROFILE_N_SAMPLES", "128")
    monkeypatch.setenv("PHASELAB_EPSILON", "0.1")
    out = tmp_path / "out"
    assert cli.main(["profile", "--out", str(out)]) == 0
    assert (out / "profile_eps0.1.csv").exists()
    lines = (out / "profile_residuals.jsonl").read_text().splitlines()
    header = json.loads(lines[0])
    assert header["config"]["profile.n_samples"] == "128"
    assert "timestamp" in json.loads(lines[1])
    rec = json.loads(lines[2])
    assert rec["epsilon"] == 0.1
    assert rec["residual"] < 1e-2


def test_mode_gamma_small(tmp_path, monkeypatch):
    monkeypatch.setenv("PHASELAB_MESH_SUBDIVISIONS", "3")
    monkeypatch.setenv("PHASELAB_EPSILON", "0.2 0.1")
    monkeypatch.setenv("PHASELAB_V", "1.5707963267948966")
    monkeypatch.setenv("PHASELAB_PROFILE_N_SAMPLES", "256")
    out = tmp_path / "out"
    assert cli.main(["gamma", "--out", str(out)]) == 0
    rows = (out / "gamma.csv").read_text().splitlines()
    assert rows[0].startswith("# ")
    assert rows[1] == "epsilon,energy,sigma_perimeter,overshoot"
    assert len(rows) == 4


def test_mode_flow_exit_code(tmp_path, monkeypatch):
    monkeypatch.setenv("PHASELAB_MESH_SUBDIVISIONS", "3")
    monkeypatch.setenv("PHASELAB_EPSILON", "0.1")
    monkeypatch.setenv("PHASELAB_V", "1.0")
    monkeypatch.setenv("PHASELAB_PROFILE_N_SAMPLES", "256")
    out = tmp_path / "out"
    assert cli.main(["flow", "--out", str(out)]) == 0
    rec = json.loads((out / "flow.jsonl").read_text().splitlines()[2])
    assert rec["converged"]


def test_unknown_mode_rejected():
    with pytest.raises(SystemExit):
        cli.main(["frobnicate"])


def test_bad_config_exit_2(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("mesh.family = klein_bottle\n")
    assert cli.main(["photograph", "--config", str(cfg),
                     "--out", str(tmp_path / "o")]) == 2


def test_report_aggregates(tmp_path, monkeypatch):
    monkeypatch.setenv("PHASELAB_MESH_SUBDIVISIONS", "3")
    monkeypatch.setenv("PHASELAB_EPSILON", "0.1")
    monkeypatch.setenv("PHASELAB_V", "1.0")
    monkeypatch.setenv("PHASELAB_PROFILE_N_SAMPLES", "256")
    out = tmp_path / "out"
    assert cli.main(["photograph", "--out", str(out)]) == 0
    assert cli.main(["report", "--out", str(out)]) == 0
    body = (out / "report.csv").read_text().splitlines()
    assert any("photographs.jsonl" in line for line in body)


def test_jsonl_reproducible(tmp_path, monkeypatch):
    monkeypatch.setenv("PHASELAB_PROFILE_N_SAMPLES", "128")
    monkeypatch.setenv("PHASELAB_EPSILON", "0.1")
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        assert cli.main(["profile", "--out", str(out)]) == 0
        lines = (out / "profile_residuals.jsonl").read_text().splitlines()
        # drop the timestamp record; everything else must be byte-identical
        outs.append([lines[0]] + lines[2:])
    assert outs[0] == outs[1]
