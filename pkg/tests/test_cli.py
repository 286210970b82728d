import csv
import json

import pytest

from membrana.cli import main

GEOM = {"outer": [0.0, 1.0], "inner": [1 / 3, 2 / 3], "gamma1": 1.0, "gamma2": 2.0, "n_per_unit": 48}
PARAMS = {"lambda1": 2.0, "lambda2": 1.0, "mu": 1.0, "a1": 0.5, "a2": 0.5, "b1": 0.5, "b2": 0.5}


@pytest.fixture
def config(tmp_path):
    def write(**extra):
        cfg = {"geometry": GEOM, "params": dict(PARAMS)}
        for k, v in extra.items():
            if k == "params":
                cfg["params"].update(v)
            else:
                cfg[k] = v
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        return str(path)
    return write


def run(cmd, cfg, out, *flags):
    return main([cmd, "--config", cfg, "--out", str(out), *flags])


def test_eig_zero(config, tmp_path, capsys):
    assert run("eig", config(), tmp_path / "o", "--dump-matrix") == 0
    data = json.loads((tmp_path / "o" / "eig.json").read_text())
    assert abs(data["value"]) < 1e-9
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert manifest["config"]["geometry"]["gamma2"] == 2.0
    assert set(manifest["outputs"]) == {"eig.json", "eigenfunction.csv", "matrix.txt"}
    assert json.loads(capsys.readouterr().out.strip())["exit_code"] == 0


def test_invalid_config_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"geometry": {**GEOM, "gamma1": -1.0}}))
    assert run("eig", str(bad), tmp_path / "o") == 2
    assert not (tmp_path / "o").exists()


def test_unknown_command_exit_code(config):
    with pytest.raises(SystemExit) as info:
        main(["nope", "--config", config()])
    assert info.value.code == 2


def test_out_of_domain_exit_code(config, tmp_path):
    # mu0 needs the semitrivial pair: Lambda1(-lambda1, -lambda2) > 0 here
    cfg = config(params={"lambda1": -5.0, "lambda2": -5.0})
    assert run("mu0", cfg, tmp_path / "o") == 2
    data = json.loads((tmp_path / "o" / "mu0.json").read_text())
    assert data["status"] == "invalid"


def test_coexist_state_csv(config, tmp_path):
    assert run("coexist", config(), tmp_path / "o") == 0
    rows = list(csv.DictReader(open(tmp_path / "o" / "state.csv")))
    assert list(rows[0]) == ["x", "region", "u1", "u2", "v"]
    assert all((r["u1"] == "") != (r["u2"] == "") for r in rows)
    data = json.loads((tmp_path / "o" / "coexist.json").read_text())
    assert data["status"] == "coexistence" and data["within_bounds"]


def test_coexist_refuted(config, tmp_path):
    assert run("coexist", config(params={"mu": -0.5}), tmp_path / "o") == 0
    assert json.loads((tmp_path / "o" / "coexist.json").read_text())["evidence"] == "necessary"


def test_logistic_no_solution(config, tmp_path):
    assert run("logistic", config(params={"mu": -1.0}), tmp_path / "o") == 0
    assert json.loads((tmp_path / "o" / "logistic.json").read_text())["status"] == "no_positive_solution"


@pytest.mark.parametrize("cmd,files", [
    ("curve-h", ["curve_h.csv"]),
    ("curve-ghat", ["curve_ghat.csv"]),
    ("semitrivial", ["semitrivial.csv"]),
    ("mu1", []),
    ("oracle", []),
])
def test_commands_write_outputs(config, tmp_path, cmd, files):
    out = tmp_path / cmd
    assert run(cmd, config(), out) == 0
    for f in files + [cmd.replace("-", "_") + ".json", "manifest.json"]:
        assert (out / f).exists()


def test_curve_h_header(config, tmp_path):
    run("curve-h", config(commands={"curve_h": {"start": -2.0, "stop": 6.0, "num": 5}}), tmp_path / "o")
    lines = (tmp_path / "o" / "curve_h.csv").read_text().splitlines()
    assert lines[0] == "nu2,H,flag"
    assert lines[-1].endswith(",nan,OutOfDomain")


def test_branch_columns(config, tmp_path):
    cfg = config(commands={"branch": {"max_points": 5}})
    assert run("branch", cfg, tmp_path / "o") == 0
    header = (tmp_path / "o" / "branch.csv").read_text().splitlines()[0]
    assert header == "mu,arclength,min_u1,min_u2,min_v,residual"


def test_region_map_deterministic(config, tmp_path):
    rm = {"x_range": [-1.0, 6.0], "mu_range": [-0.5, 5.0], "nx": 3, "nmu": 4}
    cfg = config(commands={"region_map": rm})
    assert run("region-map", cfg, tmp_path / "a") == 0
    assert run("region-map", cfg, tmp_path / "b", "--threads", "2") == 0
    for f in ("region_map.csv", "region_map.svg"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    header = (tmp_path / "a" / "region_map.csv").read_text().splitlines()[0]
    assert header == "lambda1,mu,class,confirmed"


def test_region_map_requires_block(config, tmp_path):
    assert run("region-map", config(), tmp_path / "o") == 2


def test_solver_failure_exit_code(config, tmp_path, monkeypatch):
    from membrana import cli
    from membrana.errors import SolverFailure

    def boom(*args, **kwargs):
        raise SolverFailure("did not converge")

    monkeypatch.setattr(cli, "solve_coexistence", boom)
    assert run("coexist", config(), tmp_path / "o") == 3
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert manifest["exit_code"] == 3
