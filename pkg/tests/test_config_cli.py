import csv
import io
import json
import math

import numpy as np
import pytest

from ibvp import __version__
from ibvp.cli import main
from ibvp.config import BUNDLED, compile_expression, load_config
from ibvp.errors import ConfigError
from ibvp.report import dumps, format_float, to_csv


def _write(tmp_path, obj, name="cfg.json"):
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(path)


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_configs_load(name):
    cfg = load_config(name)
    assert cfg.name == name and len(cfg.sha256) == 64


def test_example_config_compiles_expressions():
    cfg = load_config("example_sec4")
    assert cfg.spec.k(1.0) == pytest.approx(math.exp(-1) / (math.e - 2), abs=1e-15)
    assert cfg.spec.coefficients.p(np.array([0.0, 1.0])).tolist() == [1.0, math.e]
    assert cfg.reference_values["f_0"] == math.inf
    assert cfg.spec.impulses.points == (0.5,)


def test_compile_expression_slot_variables():
    psi = compile_expression("1/(1+s^2)", "psi", "here")
    assert psi(1.0) == 0.5
    assert psi(np.array([0.0, 1.0])).tolist() == [1.0, 0.5]
    h = compile_expression("1", "h", "here")
    assert h(np.zeros(3), np.zeros(3)).shape == (3,)
    with pytest.raises(ConfigError, match="not allowed"):
        compile_expression("t*x", "g1", "here")


@pytest.mark.parametrize(
    "raw, match",
    [
        ("{\n  \"problem\": {,}\n}", r":2:\d+:"),
        ({"extra": {}}, "unknown section"),
        ({"problem": {"colour": "red"}}, "unknown field"),
        ({"problem": {"f": "2*+3"}}, r"problem.f: 1:3:"),
        ({"problem": {"coefficients": {"a1": -1}}}, "coefficients"),
        ({"problem": {"impulses": [{"t": 1, "I": "x", "Ibar": "x"}, {"t": 1, "I": "x", "Ibar": "x"}]}}, "increasing"),
        ({"numerics": {"solver": {"beta": 2}}}, "beta"),
        ({"numerics": {"operator_form": "other"}}, "operator_form"),
        ({"certify": {"window": [1]}}, "window"),
        ({"certify": {"q": "ten"}}, "finite number"),
    ],
)
def test_config_errors(tmp_path, raw, match):
    with pytest.raises(ConfigError, match=match):
        load_config(_write(tmp_path, raw))


def test_missing_config():
    with pytest.raises(ConfigError, match="bundled"):
        load_config("no_such_config")


def test_format_float():
    assert format_float(0.1) == "0.10000000000000001"
    assert format_float(-0.0) == "0"
    assert format_float(math.inf) == '"inf"' and format_float(-math.inf) == '"-inf"'
    assert format_float(math.nan) == '"nan"'


def test_dumps_is_valid_json_and_ordered():
    text = dumps({"b": [1.0, math.inf], "a": {"z": None, "y": True}})
    assert list(json.loads(text)) == ["b", "a"]
    assert json.loads(text)["b"] == [1.0, "inf"]


def test_to_csv():
    rows = list(csv.reader(io.StringIO(to_csv(("a", "b"), [(1.5, "-"), (math.inf, "x")]))))
    assert rows == [["a", "b"], ["1.5", "-"], ["inf", "x"]]


def test_cli_validate_envelope(capsys):
    code, out, _ = _run(capsys, "validate", "--config", "example_sec4")
    assert code == 0
    doc = json.loads(out)
    assert [doc[k] for k in ("tool", "version", "command", "config")] == ["ibvp", __version__, "validate", "example_sec4"]
    assert not doc["result"]["all_verified"]
    checks = {c["quantity"]: c for c in doc["result"]["reference_checks"]}
    assert checks["int_G_p_k"]["status"] == "not reproduced"
    assert "does not converge near s=0.69" in checks["int_G_p_k"]["reason"]
    assert checks["int_psi"]["status"] == "reproduced"


def test_cli_green_csv(capsys):
    code, out, _ = _run(capsys, "green", "--config", "example_sec4", "--format", "csv", "--grid", "1:2:2")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 4
    r = next(r for r in rows if r["t"] == "1" and r["s"] == "2")
    assert float(r["G"]) == pytest.approx(2 - math.exp(-1), abs=1e-12)
    d = next(r for r in rows if r["t"] == "2" and r["s"] == "2")
    assert float(d["Gt_left"]) - float(d["Gt_right"]) == pytest.approx(math.exp(-2), abs=1e-14)


def test_cli_solve_skips_divergent_problem(capsys):
    code, out, _ = _run(capsys, "solve", "--config", "example_sec4")
    assert code == 0
    res = json.loads(out)["result"]
    assert res["skipped"] and "H7 divergent" in res["reason"]


def test_cli_solve_empty_problem_csv(capsys):
    code, out, _ = _run(capsys, "solve", "--config", "empty_problem", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows and all(float(r["x"]) == 0.0 for r in rows)
    assert {r["side"] for r in rows} == {"-"}


def test_cli_certify_contraction(capsys, tmp_path):
    out_path = tmp_path / "c.json"
    code, out, _ = _run(capsys, "certify", "--config", "contraction_corpus", "--out", str(out_path))
    assert code == 0 and out == ""
    res = json.loads(out_path.read_text())["result"]
    a2 = next(c for c in res["conditions"] if c["name"] == "A2")
    assert a2["status"] == "pass"
    assert res["ingredients"]["int_G_p_k"] == pytest.approx(1.5, abs=1e-9)


def test_cli_seed_and_tol_overrides(capsys):
    code, out, _ = _run(capsys, "validate", "--config", "contraction_corpus", "--seed", "7", "--tol", "1e-6")
    assert code == 0 and json.loads(out)["seed"] == 7


def test_cli_exit_codes(capsys, tmp_path):
    code, _, err = _run(capsys, "validate", "--config", "missing_config")
    assert code == 2 and err.startswith("error:")
    bad = _write(tmp_path, {"problem": {"coefficients": {"a1": 1, "b1": 1}, "p": "1"}})
    code, _, err = _run(capsys, "green", "--config", bad)
    assert code == 3 and "diverges" in err
    code, _, err = _run(capsys, "green", "--config", "example_sec4", "--grid", "a:b")
    assert code == 2
