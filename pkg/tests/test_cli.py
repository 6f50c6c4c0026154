import json
import subprocess
import sys

import pytest

from qetlab.bundled import corpus_dir
from qetlab.cli import main


def path(name):
    return str(corpus_dir() / name)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_check_ok(capsys):
    code, out, _ = run(capsys, "check", path("cointoss.aql"))
    assert code == 0 and out.strip().endswith(": Q")


def test_check_rejects_clone(capsys):
    code, out, _ = run(capsys, "check", path("clone.aql"), "--json")
    doc = json.loads(out)
    assert code == 1
    assert doc["error"]["kind"] == "LinearityViolation" and doc["error"]["rule"] == "ax"


def test_check_expected_type(capsys):
    assert run(capsys, "check", path("cointoss.aql"), "--type", "Q")[0] == 0
    assert run(capsys, "check", path("cointoss.aql"), "--type", "Q -o Q")[0] == 1


def test_usage_errors(capsys):
    code, _, err = run(capsys, "check", "missing.aql")
    assert code == 2 and "no such file" in err
    with pytest.raises(SystemExit) as exc:
        main(["run", path("cointoss.aql"), "--depth", "0"])
    assert exc.value.code == 2


def test_run_json(capsys):
    code, out, _ = run(capsys, "run", path("cointoss.aql"), "--depth", "3", "--json")
    doc = json.loads(out)
    assert code == 0
    assert doc["accumulated_cost"] == pytest.approx(1.375)
    assert doc["normal_form_mass"] + doc["live_mass"] + doc["pruned"] == pytest.approx(1)


@pytest.mark.parametrize("argv", [
    ("run", "cointoss.aql", "--depth", "4"),
    ("sample", "cointoss.aql", "--trials", "100", "--seed", "3"),
    ("compare", "cointoss.aql"),
    ("verify-bound", "ecost.csl", "--type", "ecost_bad.rty", "--samples", "200"),
])
def test_json_is_stable(capsys, argv):
    cmd, f, *rest = argv
    rest = [path(r) if r.endswith(".rty") else r for r in rest]
    first = run(capsys, cmd, path(f), *rest, "--json")
    second = run(capsys, cmd, path(f), *rest, "--json")
    assert first == second
    json.loads(first[1])


def test_seed_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("QETLAB_SEED", "11")
    a = json.loads(run(capsys, "sample", path("cointoss.aql"), "--trials", "50", "--json")[1])
    b = json.loads(run(capsys, "sample", path("cointoss.aql"), "--trials", "50",
                       "--seed", "11", "--json")[1])
    assert a == b and a["seed"] == 11
    monkeypatch.setenv("QETLAB_SEED", "abc")
    assert run(capsys, "sample", path("cointoss.aql"))[0] == 2


def test_transform_then_denote(capsys, tmp_path):
    out = tmp_path / "g.csl"
    code, _, _ = run(capsys, "transform", path("grover2.aql"),
                     "--continuation", path("grover2_err.csl"), "-o", str(out))
    assert code == 0
    code, text, _ = run(capsys, "denote", str(out), "--json")
    assert code == 0 and json.loads(text)["value"] == pytest.approx(0, abs=1e-9)


def test_transform_zero_continuation(capsys, tmp_path):
    out = tmp_path / "c.csl"
    assert run(capsys, "transform", path("cointoss.aql"), "-o", str(out))[0] == 0
    doc = json.loads(run(capsys, "denote", str(out), "--json")[1])
    assert doc["value"] == pytest.approx(1.5, abs=1e-6)


def test_compare(capsys):
    code, out, _ = run(capsys, "compare", path("cointoss.aql"), "--json")
    doc = json.loads(out)
    assert code == 0 and doc["verdict"] == "pass" and doc["gap"] < 1e-6
    code, out, _ = run(capsys, "compare", path("grover3.aql"),
                       "--continuation", path("grover3_err.csl"), "--json")
    assert code == 0 and json.loads(out)["denotational"]["value"] == pytest.approx(0.21875)


def test_verify_bound(capsys):
    code, out, _ = run(capsys, "verify-bound", path("ecost.csl"), "--type", path("ecost.rty"),
                       "--samples", "200", "--json")
    assert code == 0 and json.loads(out)["verdict"] == "NotFalsified"
    code, out, _ = run(capsys, "verify-bound", path("ecost.csl"), "--type",
                       path("ecost_bad.rty"), "--samples", "200", "--json")
    doc = json.loads(out)
    assert code == 1 and doc["verdict"] == "Falsified" and "X" in doc["witness"]["valuation"]


def test_corpus_listing(capsys):
    code, out, _ = run(capsys, "corpus")
    assert code == 0 and "cointoss" in out and "qwalk" in out


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qetlab", "check", path("qwalk.aql")],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip().endswith(": Q")
