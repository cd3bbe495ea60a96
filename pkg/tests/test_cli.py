import csv
import json
from pathlib import Path

import numpy as np
import pytest

from discmech import cli, liealg, optimal_control as oc
from discmech.errors import ConfigError, SingularJacobian

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def write(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return str(p)


def read_csv(path):
    with open(path) as f:
        return list(csv.DictReader(f))


def test_linear_spline_run(tmp_path):
    out = tmp_path / "out"
    code = cli.main(["run", str(CONFIGS / "pair_spline_linear.json"), "--out", str(out)])
    assert code == 0
    rows = read_csv(out / "pair_spline_linear.csv")
    assert [float(r["q_0"]) for r in rows] == pytest.approx(np.arange(9.0), abs=1e-10)
    report = json.loads((out / "pair_spline_linear.report.json").read_text())
    assert report["status"] == "converged"
    assert report["residual"] <= 1e-10


def test_report_numbers_match_api(tmp_path):
    out = tmp_path / "o"
    assert cli.main(["run", str(CONFIGS / "rigid_body.json"), "--out", str(out)]) == 0
    report = json.loads((out / "rigid_body.report.json").read_text())
    p = oc.RigidBodyParams()
    traj = oc.rigidbody_oc_solve(np.eye(3), np.zeros(3), liealg.cay([0.2, -0.1, 0.15]),
                                 np.zeros(3), 10, p)
    assert report["action"] == traj.info.action
    assert report["residual"] == traj.info.residual
    rows = read_csv(out / "rigid_body.csv")
    assert len(rows) == 10 and "R_22" in rows[0]
    R = np.array([[float(rows[4][f"R_{i}{j}"]) for j in range(3)] for i in range(3)])
    assert np.array_equal(R, traj.nodes()[4])


@pytest.mark.parametrize("cfg, message", [
    ({"problem": "pair-spline", "N": -3}, "N must be"),
    ({"problem": "pair-spline", "bogus": 1}, "unknown config keys"),
    ({"problem": "rigid-body", "boundary": {"R1": 0}}, "unknown boundary keys"),
    ({"problem": "heavy-top", "solver": {"tol": -1}}, "invalid solver"),
    ({"problem": "nope"}, "unknown problem"),
    ({"N": 9}, "missing key"),
])
def test_config_errors(tmp_path, capsys, cfg, message):
    assert cli.main(["run", write(tmp_path, cfg)]) == 2
    assert message in capsys.readouterr().err


def test_malformed_files(tmp_path):
    assert cli.main(["run", write(tmp_path, "{not json")]) == 2
    assert cli.main(["run", str(tmp_path / "missing.json")]) == 2
    with pytest.raises(ConfigError):
        cli.RunConfig.from_dict([1, 2])


def test_invalid_boundary_values(tmp_path):
    cfg = {"problem": "rigid-body", "boundary": {"RT": [[2, 0, 0], [0, 1, 0], [0, 0, 1]]}}
    assert cli.main(["run", write(tmp_path, cfg), "--out", str(tmp_path)]) == 2
    cfg = {"problem": "pair-spline", "boundary": {"start": [0, 1], "end": [7, 8, 9]}}
    assert cli.main(["run", write(tmp_path, cfg)]) == 2


def test_no_convergence_exit_code(tmp_path):
    cfg = {"problem": "pair-spline", "N": 9, "boundary": {"start": [0, 0], "end": [0, 1]},
           "solver": {"max_iter": 1, "tol": 1e-30}}
    out = tmp_path / "o"
    assert cli.main(["run", write(tmp_path, cfg), "--out", str(out)]) == 3
    report = json.loads((out / "cfg.report.json").read_text())
    assert report["status"] == "no_convergence"


def test_singular_exit_code(tmp_path, monkeypatch):
    def boom(cfg):
        raise SingularJacobian("rank 3 of 5", 3, 5)

    monkeypatch.setitem(cli.RUNNERS, "pair-spline", boom)
    out = tmp_path / "o"
    assert cli.main(["run", write(tmp_path, {"problem": "pair-spline"}), "--out", str(out)]) == 4
    report = json.loads((out / "cfg.report.json").read_text())
    assert report["status"] == "singular_jacobian" and report["rank"] == 3


def test_overrides(tmp_path):
    cfg = cli.RunConfig.load(CONFIGS / "pair_spline_2d.json")
    cfg2 = cfg.with_overrides(tol=1e-12, max_iter=7, seed=3, out="x")
    assert cfg2.solver_config().tol == 1e-12 and cfg2.solver_config().max_iter == 7
    assert (cfg2.seed, cfg2.out, cfg2.name) == (3, "x", "pair_spline_2d")


def test_verify_subcommand(tmp_path, capsys):
    assert cli.main(["verify", "--suite", "cayley", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "verify.report.json").read_text())
    assert {c["name"] for c in report["checks"]} >= {"cayley.roundtrip"}
    assert all("threshold" in c for c in report["checks"])
    assert "PASS cayley.roundtrip" in capsys.readouterr().out


def test_determinism_and_jobs(tmp_path):
    paths = [str(CONFIGS / n) for n in ("pair_spline_2d.json", "ep_free_body.json")]
    for d in ("a", "b"):
        assert cli.main(["run", *paths, "--out", str(tmp_path / d), "--jobs", "2"]) == 0
    for f in sorted((tmp_path / "a").iterdir()):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_floats_round_trip(tmp_path):
    out = tmp_path / "o"
    cli.main(["run", str(CONFIGS / "ep_free_body.json"), "--out", str(out)])
    text = (out / "ep_free_body.csv").read_text().splitlines()
    value = text[5].split(",")[1]
    assert repr(float(value)) == value
