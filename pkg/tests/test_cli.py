import csv
import json
from pathlib import Path

import jsonschema
import pytest

from kfpwall import cli


def _run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_exponents_at_one(capsys):
    code, out, _ = _run(capsys, "exponents", "--r", "1")
    assert code == 0
    d = json.loads(out)
    assert d["alpha"] == 0
    assert d["beta"] == pytest.approx(-2 / 3)
    assert d["c_star"] is None


def test_exponents_text_table(capsys):
    code, out, _ = _run(capsys, "exponents", "--r", "0.1", "--text")
    assert code == 0
    keys = [line.split()[0] for line in out.splitlines()]
    assert keys == ["r", "r_c", "alpha", "beta", "k_alpha", "kappa", "c_star"]


def test_exponents_table_csv(capsys, tmp_path):
    p = tmp_path / "t.csv"
    assert cli.main(["exponents", "table", "--from", "0.05", "--to", "0.5", "--n", "4", "--csv", str(p)]) == 0
    rows = list(csv.reader(p.open()))
    assert rows[0] == ["r", "alpha", "beta", "kappa", "c_star"]
    assert len(rows) == 5


def test_flux_cstar_compare(capsys):
    code, out, _ = _run(capsys, "flux", "cstar", "--r", "0.05", "--compare")
    assert code == 0
    assert json.loads(out)["relative_deviation"] < 1e-4


def test_flux_boundary_matches_kappa(capsys):
    code, out, _ = _run(capsys, "flux", "boundary", "--gamma", "m23", "--r", "0.3")
    d = json.loads(out)
    assert d["flux"] == pytest.approx(d["kappa_target"], rel=1e-3)


def test_profile_dump_header(capsys):
    code, out, _ = _run(capsys, "profile", "dump", "--kind", "G", "--r", "0.1", "--grid", "3x4")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "x,v,value"
    assert len(lines) == 1 + 12


def test_hidden_specfun(capsys):
    code, out, _ = _run(capsys, "specfun", "eval", "--func", "lngamma", "--z", "0.5")
    assert code == 0
    assert float(out) == pytest.approx(0.5723649429247001, rel=1e-14)
    helptext = cli.build_parser().format_help()
    assert "specfun" not in helptext


def test_unknown_flag_exit_2(capsys):
    with pytest.raises(SystemExit) as e:
        cli.main(["exponents", "--bogus"])
    assert e.value.code == 2


def test_domain_error_exit_2(capsys):
    code, _, err = _run(capsys, "cstar", "--r", "0.5")
    assert code == 2
    assert json.loads(err)["error"] == "usage"


def test_numerical_failure_exit_1(capsys, monkeypatch):
    from kfpwall import fluxes

    def boom(M):
        raise ArithmeticError("quadrature did not converge")

    monkeypatch.setattr(fluxes, "zeta_lambda_moment", boom)
    code, _, err = _run(capsys, "flux", "moment", "--M", "50")
    assert code == 1
    d = json.loads(err)
    assert d["error"] == "numerical" and "converge" in d["message"]


def test_sde_collapse_outputs_and_determinism(capsys, tmp_path):
    args = ["sde", "collapse", "--r", "0.05", "--n", "200", "--seed", "5"]
    assert cli.main(args + ["--out", str(tmp_path / "a")]) == 0
    assert cli.main(args + ["--out", str(tmp_path / "b")]) == 0
    capsys.readouterr()
    a = (tmp_path / "a" / "paths.csv").read_bytes()
    assert a == (tmp_path / "b" / "paths.csv").read_bytes()
    assert a.splitlines()[0] == b"path,collapsed,t_final,bounces"
    man = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert man["seed"] == 5 and man["config"]["n_paths"] == 200
    assert len(man["outputs"]) == 2
    assert set(man) == {"command", "config", "seed", "version", "started", "finished", "outputs"}


def test_lattice_run(capsys):
    code, out, _ = _run(capsys, "lattice", "run", "--lambda", "1*h", "--h", "0.015625", "--bc-check", "dynamic")
    d = json.loads(out)
    assert code == 0 and d["lambda"] == 0.015625
    assert set(d) >= {"max_error", "m_lattice", "m_reference"}


def test_pde_run_outputs(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"r": 0.1, "bc": "trap", "nx": 60, "nv": 160}))
    out = tmp_path / "run"
    code = cli.main(["pde", "run", "--config", str(cfg), "--tend", "0.02", "--out", str(out)])
    assert code == 0
    d = json.loads(capsys.readouterr().out)
    assert d["total_mass"] == pytest.approx(1.0, abs=1e-10)
    header = (out / "series.csv").read_text().splitlines()[0]
    assert header.startswith("t,interior_mass,m,a_alpha,a_m23")
    assert (out / "snapshot_0000.csv").read_text().startswith("x,v,P\n")
    man = json.loads((out / "manifest.json").read_text())
    assert man["config"]["t_end"] == 0.02 and man["config"]["nx"] == 60


def test_pde_bad_regime_exit_2(capsys):
    code, _, err = _run(capsys, "pde", "run", "--bc", "super", "--r", "0.1", "--tend", "0.01")
    assert code == 2


def test_reproduce_subset(capsys, tmp_path):
    code, out, _ = _run(capsys, "reproduce", "all", "--only", "1,2", "--out", str(tmp_path))
    assert code == 0
    assert "[PASS]  1" in out and "[PASS]  2" in out
    res = json.loads((tmp_path / "acceptance.json").read_text())
    assert [r["number"] for r in res] == [1, 2]


SCHEMAS = json.loads((Path(__file__).resolve().parents[1] / "docs" / "schemas.json").read_text())["$defs"]


def _validate(obj, name):
    jsonschema.validate(obj, SCHEMAS[name])


@pytest.mark.parametrize("name,argv", [
    ("exponents", ["exponents", "--r", "0.1"]),
    ("cstar", ["cstar", "--r", "0.1"]),
    ("flux_moment", ["flux", "moment", "--M", "20"]),
    ("flux_boundary", ["flux", "boundary", "--gamma", "alpha", "--r", "0.1", "--b", "1"]),
    ("flux_cstar", ["flux", "cstar", "--r", "0.1", "--compare"]),
    ("sde_collapse", ["sde", "collapse", "--r", "0.1", "--n", "50", "--json"]),
    ("sde_hitting", ["sde", "hitting", "--n", "50"]),
    ("sde_sweep", ["sde", "sweep", "--rs", "0.1,0.3", "--n", "50", "--tmax", "100"]),
    ("lattice_run", ["lattice", "run", "--h", "0.03125"]),
    ("pde_run", ["pde", "run", "--nx", "60", "--nv", "160", "--tend", "0.01"]),
])
def test_json_outputs_match_schema(capsys, name, argv):
    assert cli.main(argv) == 0
    _validate(json.loads(capsys.readouterr().out), name)


def test_manifest_and_acceptance_schema(capsys, tmp_path):
    assert cli.main(["reproduce", "all", "--only", "2", "--out", str(tmp_path)]) == 0
    capsys.readouterr()
    _validate(json.loads((tmp_path / "manifest.json").read_text()), "manifest")
    _validate(json.loads((tmp_path / "acceptance.json").read_text()), "acceptance")
