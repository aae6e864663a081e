import io
import json
import math
import subprocess
import sys

import pytest

from telegraph_forms.cli import RunConfig, main, read_artifact, run
from telegraph_forms.montecarlo import read_binary
from telegraph_forms.operator_algebra import OperatorPoly, T, X

SYM = {"components": [{"rate": "1", "speed": "1", "start": "0", "coef": "1"},
                      {"rate": "1", "speed": "1", "start": "0", "coef": "1"}]}
GEN = {"components": [{"rate": "1", "speed": "3/2", "start": "1/5", "coef": "1"},
                      {"rate": "2", "speed": "1", "start": "0", "coef": "-1/2"}]}


@pytest.fixture
def specs(tmp_path):
    paths = {}
    for name, data in (("two", SYM), ("gen", GEN)):
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(data))
        paths[name] = str(p)
    return paths


def _run(argv):
    out, err = io.StringIO(), io.StringIO()
    from telegraph_forms.cli import config_from_args
    code = run(config_from_args(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def test_derive_pde_symmetric(specs):
    code, out, _ = _run(["derive-pde", "--spec", specs["two"]])
    assert code == 0
    meta, payload = read_artifact(out)
    assert meta["version"] and meta["spec_hash"] and meta["command"] == "derive-pde"
    P = OperatorPoly.from_terms(payload["terms"])
    assert P == (T + 2) ** 2 * (T ** 2 + 4 * T - 4 * X ** 2)
    assert payload["n"] == 2 and payload["order"] == 4
    assert payload["factor_check"]["divisible"] is True
    assert all(isinstance(term["coef"], str) for term in payload["terms"])
    assert payload["text"].startswith("∂t^4")


def test_derive_pde_csv(specs):
    code, out, _ = _run(["derive-pde", "--spec", specs["gen"], "--format", "csv", "--method", "cofactor"])
    assert code == 0
    meta, rows = read_artifact(out)
    assert OperatorPoly.from_terms(rows).total_degree() == 4
    assert meta["command"] == "derive-pde"


def test_atoms(specs):
    code, out, _ = _run(["atoms", "--spec", specs["two"], "--t", "1"])
    assert code == 0
    _, payload = read_artifact(out)
    assert payload["count"] == 3
    assert payload["total_mass"] == pytest.approx(math.exp(-2))
    assert [a["location_exact"] for a in payload["atoms"]] == ["-2", "0", "2"]
    code, out, _ = _run(["atoms", "--spec", specs["gen"], "--t", "1/2", "--format", "csv"])
    _, rows = read_artifact(out)
    assert len(rows) == 4 and sum(float(r["mass"]) for r in rows) == pytest.approx(math.exp(-1.5))


def test_cf_and_density(specs, tmp_path):
    code, out, _ = _run(["cf", "--spec", specs["gen"], "--t", "1", "--alpha", "0,1/2,2"])
    assert code == 0
    _, payload = read_artifact(out)
    assert payload["values"][0]["re"] == pytest.approx(1.0)
    target = tmp_path / "d.csv"
    code, _, _ = _run(["density", "--spec", specs["two"], "--t", "1", "--format", "csv", "--out", str(target)])
    assert code == 0
    meta, rows = read_artifact(target.read_text())
    dx = float(rows[1]["x"]) - float(rows[0]["x"])
    assert sum(float(r["density"]) for r in rows) * dx == pytest.approx(1 - math.exp(-2), abs=1e-6)
    assert meta["t"] == "1"


def test_simulate_formats_and_determinism(specs, tmp_path):
    args = ["simulate", "--spec", specs["gen"], "--t", "1", "--samples", "500", "--seed", "7"]
    code, a, _ = _run(args + ["--format", "csv"])
    _, b, _ = _run(args + ["--format", "csv"])
    assert code == 0 and a == b
    meta, rows = read_artifact(a)
    assert meta["seed"] == "7" and len(rows) == 500
    code, j, _ = _run(args)
    _, payload = read_artifact(j)
    assert payload["count"] == 500
    binfile = tmp_path / "s.bin"
    code, _, _ = _run(args + ["--format", "binary", "--out", str(binfile)])
    t, values, events = read_binary(binfile.read_bytes())
    assert code == 0 and t == 1.0 and len(values) == 500
    assert [float(r["value"]) for r in rows] == list(values)


def test_identical_invocations_byte_identical(specs, tmp_path):
    outs = []
    for k in range(2):
        target = tmp_path / f"o{k}.json"
        _run(["atoms", "--spec", specs["gen"], "--t", "1", "--out", str(target)])
        outs.append(target.read_bytes())
    assert outs[0] == outs[1]


def test_verify(specs):
    code, out, _ = _run(["verify", "--spec", specs["two"], "--t", "1", "--advisory"])
    assert code == 0
    _, payload = read_artifact(out)
    names = {c["check"] for c in payload["checks"]}
    assert {"symbol_root", "system_cf", "initial_condition+", "fd_residual"} <= names
    assert payload["passed"] is True
    assert payload["reports"]["system_cf"]["notes"]["convention"] == "+i alpha c_sigma"


def test_kac(specs):
    code, out, _ = _run(["kac", "--samples", "20000", "--scales", "1,100", "--format", "csv"])
    assert code == 0
    meta, rows = read_artifact(out)
    assert meta["seed"] == "0" and float(rows[1]["ks"]) < float(rows[0]["ks"])


def test_errors(specs, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"components": [{"rate": "-1", "speed": "1", "coef": "1"}]}))
    code, _, err = _run(["atoms", "--spec", str(bad), "--t", "1"])
    assert code == 1 and "components[0].rate" in err
    code, _, err = _run(["atoms", "--spec", specs["two"]])
    assert code == 1 and "requires --t" in err
    code, _, err = _run(["density", "--spec", specs["gen"], "--t", "1", "--points", "256"])
    assert code == 2 and "numerical error" in err
    code, _, err = _run(["derive-pde", "--spec", specs["two"], "--cap", "1"])
    assert code == 1
    missing = tmp_path / "none.json"
    code, _, _ = _run(["atoms", "--spec", str(missing), "--t", "1"])
    assert code == 1
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 1
    assert run(RunConfig(command="no-such-command"), stdout=io.StringIO(), stderr=io.StringIO()) == 1


def test_module_entry_point(specs):
    proc = subprocess.run([sys.executable, "-m", "telegraph_forms", "atoms", "--spec", specs["two"],
                           "--t", "1", "--format", "csv"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.startswith("# command: atoms")
