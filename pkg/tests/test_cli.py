import hashlib
import json

import numpy as np
import pytest

import apdiff
from apdiff import TrigPoly, make_lattice
from apdiff.cli import main
from apdiff.diff_group import ApDiffeo
from apdiff.geodesic_flows import EulerianState
from apdiff.holder_norms import (
    cm_norm,
    holder_seminorm,
    little_holder_profile,
    sup_norm,
)
from apdiff.serialization import load_state, save_state

HEADER = "t,energy,sup_norm_u,margin,aliased_mass,inversion_iters"


def tiny_geodesic_config(**overrides):
    cfg = {
        "experiment": "geodesic",
        "lattice": {"n": 1, "d": 1, "omega": [[1.0]], "K": 4},
        "alpha": 1.0,
        "solver": {"dt": 0.05, "t_final": 0.1},
        "initial_velocity": [[{"k": [1], "re": 0.05, "im": 0.0}]],
    }
    cfg.update(overrides)
    return cfg


def write_config(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def read_csv(path):
    lines = path.read_text().splitlines()
    return lines[0], [line.split(",") for line in lines[1:]]


def test_geodesic_run_writes_trajectory_and_manifest(tmp_path):
    cfg_path = write_config(tmp_path, tiny_geodesic_config())
    out = tmp_path / "out"
    assert main(["run", "--config", cfg_path, "--out", str(out)]) == 0

    header, rows = read_csv(out / "trajectory.csv")
    assert header == HEADER
    assert len(rows) == 3
    assert [float(r[0]) for r in rows] == pytest.approx([0.0, 0.05, 0.1])

    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["toolkit_version"] == apdiff.__version__
    with open(cfg_path, "rb") as fh:
        assert manifest["config_sha256"] == hashlib.sha256(fh.read()).hexdigest()
    assert set(manifest["outputs"]) == {"trajectory.csv", "final_state.json"}
    got = hashlib.sha256((out / "trajectory.csv").read_bytes()).hexdigest()
    assert manifest["outputs"]["trajectory.csv"] == got

    state = load_state(str(out / "final_state.json"))
    assert state.t == pytest.approx(0.1)


def test_runs_are_byte_deterministic(tmp_path):
    cfg_path = write_config(tmp_path, tiny_geodesic_config())
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert main(["run", "--config", cfg_path, "--out", str(out_a)]) == 0
    assert main(["run", "--config", cfg_path, "--out", str(out_b)]) == 0
    for name in ("trajectory.csv", "final_state.json"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_constant_velocity_energy_column_is_flat(tmp_path):
    cfg = tiny_geodesic_config(
        initial_velocity=[[{"k": [0], "re": 0.3, "im": 0.0}]],
        solver={"dt": 0.05, "t_final": 0.2},
    )
    out = tmp_path / "out"
    assert main(["run", "--config", write_config(tmp_path, cfg), "--out", str(out)]) == 0
    _, rows = read_csv(out / "trajectory.csv")
    assert len(rows) == 5
    energies = [r[1] for r in rows]
    assert len(set(energies)) == 1
    assert abs(float(energies[0]) - 0.09) < 1e-15


def test_run_rejects_unknown_config_key(tmp_path, capsys):
    cfg = tiny_geodesic_config(bogus=1)
    rc = main(["run", "--config", write_config(tmp_path, cfg), "--out", str(tmp_path / "o")])
    assert rc == 2
    assert "bogus" in capsys.readouterr().err


def test_run_rejects_missing_experiment(tmp_path):
    cfg = tiny_geodesic_config()
    del cfg["experiment"]
    rc = main(["run", "--config", write_config(tmp_path, cfg), "--out", str(tmp_path / "o")])
    assert rc == 2


def test_run_rejects_invalid_json(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    rc = main(["run", "--config", str(path), "--out", str(tmp_path / "o")])
    assert rc == 2
    assert "invalid JSON" in capsys.readouterr().err


def test_burgers_run_past_breakdown_saves_checkpoint(tmp_path):
    cfg = {
        "experiment": "burgers",
        "lattice": {"n": 1, "d": 1, "omega": [[1.0]], "K": 8},
        "alpha": 0.0,
        "solver": {"dt": 0.08, "t_final": 0.4},
        "initial_velocity": [[{"k": [1], "re": 0.0, "im": -0.5}]],
    }
    out = tmp_path / "out"
    rc = main(["run", "--config", write_config(tmp_path, cfg), "--out", str(out)])
    assert rc == 3

    failure = json.loads((out / "failure.json").read_text())
    assert failure["error"] == "BeyondBlowup"

    cp = load_state(str(out / "checkpoint.json"))
    assert isinstance(cp, EulerianState)
    assert cp.t == pytest.approx(0.24)

    header, rows = read_csv(out / "trajectory.csv")
    assert header == HEADER
    assert [float(r[0]) for r in rows] == pytest.approx([0.0, 0.08, 0.16, 0.24])

    manifest = json.loads((out / "manifest.json").read_text())
    assert "failure.json" in manifest["outputs"]
    assert "checkpoint.json" in manifest["outputs"]


def test_exp_lie_run_logs_single_endpoint_row(tmp_path):
    cfg = {
        "experiment": "exp-lie",
        "lattice": {"n": 1, "d": 1, "omega": [[1.0]], "K": 4},
        "alpha": 1.0,
        "solver": {"dt": 0.05, "t_final": 1.0},
        "initial_velocity": [[{"k": [0], "re": -0.8, "im": 0.0}]],
    }
    out = tmp_path / "out"
    assert main(["run", "--config", write_config(tmp_path, cfg), "--out", str(out)]) == 0
    _, rows = read_csv(out / "trajectory.csv")
    assert len(rows) == 1
    assert float(rows[0][0]) == 1.0
    assert abs(float(rows[0][1]) - 0.64) < 1e-14
    assert np.isnan(float(rows[0][4]))

    phi = load_state(str(out / "final_state.json"))
    assert isinstance(phi, ApDiffeo)
    assert phi.evaluate([0.0])[0] == pytest.approx(-0.8, abs=1e-12)


def test_norms_report_matches_direct_calls(tmp_path):
    lat = make_lattice([[1.0]], 4)
    f = TrigPoly.sine(lat, (1,))
    src = tmp_path / "f.json"
    save_state(f, str(src))
    report = tmp_path / "report.csv"
    rc = main(
        [
            "norms",
            "--input",
            str(src),
            "--m",
            "1.5",
            "--gamma",
            "0.5",
            "--grid",
            "2048",
            "--out",
            str(report),
        ]
    )
    assert rc == 0
    header, rows = read_csv(report)
    assert header == "quantity,gamma_or_m,grid,value,verdict"
    table = {r[0]: r for r in rows}
    assert set(table) == {"sup_norm", "cm_norm", "holder_seminorm", "little_holder"}
    assert float(table["sup_norm"][3]) == pytest.approx(sup_norm(f, M=2048))
    assert float(table["cm_norm"][3]) == pytest.approx(cm_norm(f, 1.5, M=2048))
    assert float(table["holder_seminorm"][3]) == pytest.approx(
        holder_seminorm(f, 0.5, M=2048)
    )
    profile = little_holder_profile(f, 0.5, M=2048)
    assert float(table["little_holder"][3]) == pytest.approx(profile.omegas[-1])
    assert table["little_holder"][4] == profile.verdict


def test_norms_rejects_missing_input(tmp_path, capsys):
    rc = main(
        [
            "norms",
            "--input",
            str(tmp_path / "absent.json"),
            "--out",
            str(tmp_path / "report.csv"),
        ]
    )
    assert rc == 2
    assert "config error" in capsys.readouterr().err


def test_verify_single_check_passes(capsys):
    rc = main(["verify", "--only", "a_alpha"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "overall: PASS (1/1 checks" in out
    assert "a_alpha" in out


def test_verify_rejects_unknown_check(capsys):
    rc = main(["verify", "--only", "nope"])
    assert rc == 2
    assert "unknown check" in capsys.readouterr().err


def test_run_verify_experiment_writes_report(tmp_path):
    cfg = {"experiment": "verify", "only": "a_alpha"}
    out = tmp_path / "out"
    assert main(["run", "--config", write_config(tmp_path, cfg), "--out", str(out)]) == 0
    report = json.loads((out / "verification_report.json").read_text())
    assert report["overall"] == "pass"
    assert [c["name"] for c in report["checks"]] == ["a_alpha"]
    assert report["checks"][0]["status"] == "pass"


def test_sweep_fans_out_over_thread_pool(tmp_path, monkeypatch):
    monkeypatch.setenv("APDIFF_THREADS", "2")
    cfg = tiny_geodesic_config(
        sweep=[
            {"alpha": 0.5},
            {"solver": {"dt": 0.025}},
            {"initial_velocity": [[{"k": [1], "re": 0.0, "im": -0.025}]]},
        ]
    )
    out = tmp_path / "out"
    assert main(["run", "--config", write_config(tmp_path, cfg), "--out", str(out)]) == 0

    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["sweep_exit_codes"] == [0, 0, 0]
    for i in range(3):
        sub = out / f"sweep-{i:03d}"
        header, rows = read_csv(sub / "trajectory.csv")
        assert header == HEADER
        assert (sub / "manifest.json").exists()
    assert len(json.loads((out / "sweep-001" / "manifest.json").read_text())["outputs"]) == 2
