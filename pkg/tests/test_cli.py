import csv
import io
import json
import math
import os
import subprocess
import sys
from importlib import resources

import jsonschema
import mpmath
import pytest

from conway_analysis import cli
from conway_analysis.errors import NeedsMoreTerms

from helpers import EXPRESSION_CORPUS

SCHEMA = json.loads(resources.files("conway_analysis").joinpath("schema/output.schema.json").read_text())


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out.strip(), err.strip()


def test_eval_examples(capsys):
    assert run(capsys, "eval", "{0|1}")[:2] == (0, "1/2")
    assert run(capsys, "eval", "integrate(exp(x),0,w)")[:2] == (0, "exp(w) - 1")
    got = run(capsys, "eval", "ei(w)", "--truncate", "3")
    assert got[:2] == (0, "exp(w)*(w^-1 + w^-2 + 2*w^-3) + O(w^-4*exp(w))")


def test_truncation_marker_is_explicit(capsys):
    _, out, _ = run(capsys, "eval", "1/(w+1)", "--truncate", "2")
    assert out == "w^-1 - w^-2 + O(w^-3)"
    _, out, _ = run(capsys, "eval", "(w+1)*(w-1)", "--truncate", "2")
    assert out == "w^2 - 1"


def test_bracket_subcommand(capsys):
    assert run(capsys, "bracket", "{3|w}")[:2] == (0, "4")
    assert run(capsys, "bracket", "{-inf|inf}")[:2] == (0, "0")
    assert run(capsys, "bracket", "w+1")[0] == cli.EXIT_PARSE


@pytest.mark.parametrize(
    "argv, code",
    [
        (["eval", "(1+"], cli.EXIT_PARSE),
        (["eval", "{0|w^-1}"], cli.EXIT_UNSUPPORTED),
        (["eval", "sum(k>=0) w^k"], cli.EXIT_UNSUPPORTED),
        (["eval", "1/0"], cli.EXIT_DOMAIN),
        (["ei", "1"], cli.EXIT_DOMAIN),
        (["eval", "sum(k>=0) 0*w^-k"], cli.EXIT_RESOURCE),
    ],
)
def test_exit_codes(capsys, argv, code):
    got, out, err = run(capsys, *argv)
    assert got == code
    assert out == "" and err


def test_needs_more_terms_exit_code(capsys, monkeypatch):
    monkeypatch.setattr(cli, "evaluate", lambda text: NeedsMoreTerms("prefix too short", 8))
    got, _, err = run(capsys, "eval", "w")
    assert got == cli.EXIT_NEEDS_MORE_TERMS and "needs more terms" in err


def test_depth_cap_from_environment():
    env = dict(os.environ, CONWAY_DEPTH_CAP="2")
    proc = subprocess.run(
        [sys.executable, "-m", "conway_analysis.cli", "eval", "w^(w^(w^w))"],
        capture_output=True, text=True, env=env, timeout=120,
    )
    assert proc.returncode == cli.EXIT_RESOURCE


def test_ei_real_interval(capsys):
    code, out, _ = run(capsys, "ei", "10", "--format", "json")
    data = json.loads(out)
    jsonschema.validate(data, SCHEMA)
    assert code == 0 and data["kind"] == "interval"
    assert abs(float(data["midpoint"]) - float(mpmath.ei(10))) < float(data["radius"])


@pytest.mark.parametrize("text", EXPRESSION_CORPUS)
def test_json_matches_schema(capsys, text):
    code, out, _ = run(capsys, "eval", "--format", "json", "--truncate", "4", "--", text)
    assert code == 0
    data = json.loads(out)
    jsonschema.validate(data, SCHEMA)
    assert data["input"] == text


def test_special_outputs(capsys):
    code, out, _ = run(capsys, "special", "stirling", "--terms", "5", "--format", "json")
    data = json.loads(out)
    jsonschema.validate(data, SCHEMA)
    assert [c["coeff"] for c in data["coefficients"]] == ["1", "1/12", "1/288", "-139/51840", "-571/2488320"]
    for which in ("ei-at-omega", "lngamma", "erfi"):
        code, out, _ = run(capsys, "special", which, "--terms", "3", "--format", "json")
        assert code == 0
        jsonschema.validate(json.loads(out), SCHEMA)


def test_borel_csv(capsys):
    code, out, _ = run(capsys, "borel", "sum", "--coeffs", "(-1)^k*k!", "--at", "5,10,20")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and [r["x"] for r in rows] == ["5", "10", "20"]
    for r in rows:
        x = float(r["x"])
        expected = math.exp(x) * float(mpmath.e1(x))
        assert float(r["value"]) == pytest.approx(expected, rel=1e-8)
        assert float(r["error_bound"]) < 1e-8


def test_borel_least_term_and_pv(capsys):
    _, out, _ = run(capsys, "borel", "sum", "--coeffs", "k!", "--at", "4:6:1", "--method", "least-term")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["x"] for r in rows] == ["4", "5", "6"]
    _, out, _ = run(capsys, "borel", "sum", "--coeffs", "k!", "--at", "5", "--method", "pv")
    (row,) = csv.DictReader(io.StringIO(out))
    assert float(row["value"]) == pytest.approx(float(mpmath.exp(-5) * mpmath.ei(5)), rel=1e-9)


def test_selftest(capsys):
    code, out, _ = run(capsys, "selftest")
    assert code == 0 and "FAIL" not in out


def test_console_entry_point():
    proc = subprocess.run(["conway", "eval", "{1|}"], capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0 and proc.stdout.strip() == "2"
