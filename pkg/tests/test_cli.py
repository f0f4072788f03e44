import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from igrg.cli import ConfigError, main, parse_config


def run_cli(tmp_path, *args, name="out.txt"):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    text = out.read_text() if out.exists() else ""
    return code, text


def table(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_flow_trajectory_csv(tmp_path):
    code, text = run_cli(tmp_path, "--command", "flow", "--sites", "4", "--seed", "3")
    rows = table(text)
    assert code == 0
    assert len(rows) == 21
    speed = np.array([float(r["speed"]) for r in rows])
    assert np.all(np.diff(speed) <= 1e-8)
    assert all(r["monotone_violation_flag"] == "0" for r in rows)


def test_flow_single_point_and_fixed_start(tmp_path):
    code, text = run_cli(tmp_path, "--command", "flow", "--t-max", "0")
    assert code == 0 and len(table(text)) == 1
    from igrg.flow import speed
    from igrg.lattice import LatticeSpec, random_translation_invariant_state, swap_generator
    lat = LatticeSpec.ring(4)
    ref = speed(swap_generator(lat), random_translation_invariant_state(lat, 0))
    assert float(table(text)[0]["speed"]) == ref
    code, text = run_cli(tmp_path, "--command", "flow", "--initial", "fixed")
    assert all(float(r["speed"]) <= 1e-24 for r in table(text))


def test_ising1d_interior_maximum(tmp_path):
    code, text = run_cli(tmp_path, "--command", "ising1d", "--J", "0:3:0.05")
    rows = table(text)
    f = np.array([float(r["f"]) for r in rows])
    assert code == 0 and len(rows) == 61
    assert 0 < np.argmax(f) < len(f) - 1
    assert all(float(r["dJdt"]) < 0 for r in rows[1:])


def test_ising2d_enumeration_column(tmp_path):
    code, text = run_cli(tmp_path, "--command", "ising2d", "--sites", "4", "--tau-min", "2.5",
                         "--tau-max", "2.5", "--sweeps", "100000", "--enumerate")
    (row,) = table(text)
    assert code == 0
    assert abs(float(row["f_mean"]) - float(row["f_exact"])) <= 3 * float(row["f_stderr"])


def test_diffusion_command(tmp_path):
    code, text = run_cli(tmp_path, "--command", "diffusion")
    rows = table(text)
    assert code == 0 and len(rows) == 201
    assert float(rows[0]["L1_distance"]) <= 0.02


def test_verify_and_fault_injection(tmp_path):
    code, text = run_cli(tmp_path, "--command", "verify")
    doc = json.loads(text)
    assert code == 0
    assert doc["schema_version"] == "igrg/1"
    assert doc["summary"]["failed"] == 0 and doc["summary"]["total"] == len(doc["reports"])
    code, text = run_cli(tmp_path, "--command", "verify", "--inject-fault")
    doc = json.loads(text)
    assert code == 1
    assert [r["name"] for r in doc["reports"] if not r["passed"]] == ["faulty_channel"]


def test_json_output_has_schema(tmp_path):
    code, text = run_cli(tmp_path, "--command", "ising1d", "--J", "0.5,1.0", "--format", "json")
    doc = json.loads(text)
    assert doc["schema_version"] == "igrg/1"
    assert doc["columns"] == ["J", "f", "dJdt"] and len(doc["rows"]) == 2


@pytest.mark.parametrize("args", [
    ["--command", "flow", "--t-max", "-1"],
    ["--command", "flow", "--t-step", "0"],
    ["--command", "ising2d", "--sites", "2"],
    ["--command", "ising2d", "--sites", "5", "--enumerate"],
    ["--command", "ising2d", "--sweeps", "10"],
    ["--command", "ising1d", "--J", "1,0.5"],
    ["--command", "flow", "--sites", "13"],
    ["--command", "nope"],
    [],
    ["--command", "diffusion", "--sites", "200"],
])
def test_configuration_errors_exit_2(tmp_path, args):
    assert main(args + ["--out", str(tmp_path / "x")]) == 2


def test_numerical_failure_exit_3(tmp_path, monkeypatch):
    from igrg import cli
    from igrg.errors import FlowDegeneracyError

    def boom(cfg):
        raise FlowDegeneracyError("left the manifold", 0.5)

    monkeypatch.setattr(cli, "cmd_flow", boom)
    assert main(["--command", "flow"]) == 3


def test_config_file_precedence(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("# sweep settings\ncommand = ising2d\nsweeps = 6000\nbins = 20\n"
                        "seed = 7\nenumerate = yes\nsites = 4\n")
    cfg = parse_config(["--config", str(cfg_file)])
    assert (cfg.command, cfg.sweeps, cfg.bins, cfg.seed, cfg.enumerate) == ("ising2d", 6000, 20, 7, True)
    cfg = parse_config(["--config", str(cfg_file), "--seed", "9"])
    assert cfg.seed == 9 and cfg.sweeps == 6000
    assert parse_config(["--command", "ising2d"]).sweeps == 100_000
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    with pytest.raises(ConfigError):
        parse_config(["--config", str(bad)])


@pytest.mark.parametrize("args", [
    ["--command", "flow", "--sites", "4"],
    ["--command", "ising1d"],
    ["--command", "ising2d", "--sites", "4", "--tau-min", "2", "--tau-max", "3", "--tau-step", "0.5",
     "--sweeps", "5000", "--jobs", "2"],
    ["--command", "diffusion", "--format", "json"],
    ["--command", "verify"],
])
def test_bit_identical_reruns(tmp_path, args):
    _, first = run_cli(tmp_path, *args, name="a")
    _, second = run_cli(tmp_path, *args, name="b")
    assert first and first == second


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "igrg", "--command", "ising1d", "--J", "1.0"],
                         capture_output=True, text=True, check=True)
    assert res.stdout.splitlines()[1].startswith("1.0,0.0784979")
