"""Black-box tests of the command line."""

import json
import shutil
import subprocess
import sys

import pytest
import yaml

from sdesym.runner import CASES_FILE, CORPUS_DIR, invoke


def run(*argv):
    return invoke([str(a) for a in argv])


def ex(name):
    return CORPUS_DIR / f"{name}.sde"


def test_console_script_runs():
    out = subprocess.run([sys.executable, "-m", "sdesym.cli", "check", ex("ex5"), "X1"],
                         capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert "symmetry" in out.stdout


def test_missing_file_is_usage_error():
    r = run("check", "/nonexistent/model.sde", "X")
    assert r.exit_code == 2 and r.stderr


def test_unknown_field_is_usage_error():
    assert run("check", ex("ex5"), "Nope").exit_code == 2


def test_zero_paths_rejected():
    assert run("simulate", ex("ex7"), "--x0", "1", "--paths", "0").exit_code == 2


def test_bad_set_value():
    assert run("check", ex("ex5"), "X1", "--set", "mu=abc").exit_code == 2


def test_check_exit_codes_follow_verdict():
    assert run("check", ex("ex6"), "X").exit_code == 0
    assert run("check", ex("ex6"), "X", "--calculus", "stratonovich").exit_code == 1


def test_check_json_shape():
    r = run("check", ex("ex5"), "X1", "--json")
    assert r.payload["verdict"] == "symmetry"
    assert r.payload["residual"] == {"drift[0]": "0", "noise[0][0]": "0"}


def test_convert_ex6_to_stratonovich():
    r = run("convert", ex("ex6"), "--to", "stratonovich", "--json")
    assert r.exit_code == 0
    # lambda = 1, sigma = x^2, so b = x - x^2 * 2x / 2
    assert r.payload["calculus"] == "stratonovich"
    assert r.payload["drift"] == ["x - x^3"]
    assert "calculus = stratonovich" in r.payload["model"]


def test_kozlov_not_integrable_hint(tmp_path):
    p = tmp_path / "m.sde"
    p.write_text("[system]\nvars = x\nnoises = w\nf.x = 0\nsigma.x.w = 1\n[field X]\nphi.x = exp(x^2)\n")
    r = run("kozlov", p, "X")
    assert r.exit_code == 1
    assert "sdesym transform --forward" in r.stderr


def test_persistence_exit_code():
    assert run("persistence", ex("ex5"), "X1").exit_code == 0
    assert run("persistence", ex("ex6"), "X").exit_code == 1


def test_bracket_of_commuting_fields():
    r = run("bracket", ex("ex13"), "Rot", "D", "--json")
    assert r.exit_code == 0


def test_simulate_csv_reproducible(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        r = run("simulate", ex("ex7"), "--x0", "1", "--paths", "3", "--h", "0.125", "--out", out,
                "--set", "lambda=1", "--set", "mu=1")
        assert r.exit_code == 0, r.stderr
    assert a.read_bytes() == b.read_bytes()


def test_corpus_filter():
    r = run("corpus", "--filter", "c*", "--json")
    ids = [c["id"] for c in r.payload["cases"]]
    assert ids and all(i.startswith("c") for i in ids)
    assert r.exit_code == 0


def test_corpus_filter_without_match():
    assert run("corpus", "--filter", "zzz*").exit_code == 2


def test_tampered_expectation_fails_with_diff(tmp_path):
    for p in CORPUS_DIR.glob("*.sde"):
        shutil.copy(p, tmp_path)
    data = yaml.safe_load(CASES_FILE.read_text())
    case = next(c for c in data["cases"] if c["id"] == "ex5")
    step = case["steps"][0]
    key = next(k for k, v in step["expect"].items() if isinstance(v, str))
    step["expect"][key] = "definitely-not-" + step["expect"][key]
    (tmp_path / "cases.yaml").write_text(yaml.safe_dump(data))
    r = run("corpus", "--cases", tmp_path / "cases.yaml", "--filter", "ex5")
    assert r.exit_code == 1
    out = r.payload.get("_text", "")
    assert "FAIL  ex5" in out and "expected 'definitely-not-" in out


@pytest.mark.parametrize("argv", [
    ("deteqs", "ex1", "X"),
    ("classify", "ex9", "X"),
    ("chi", "ex5", "X1"),
    ("kozlov", "ex1", "X"),
    ("transform", "c1", "etazeta", "--check", "X"),
    ("group-apply", "ex12", "--exponents", "x=2,w=1", "--lam", "3", "--no-discharge"),
])
def test_commands_emit_json(argv):
    cmd, model, *rest = argv
    r = run(cmd, ex(model), *rest, "--json")
    assert r.exit_code == 0, r.stderr
    json.dumps(r.payload)
