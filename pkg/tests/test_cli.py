import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from odpcalc.cli import main, parse_text, render_text, run_command
from odpcalc.corpus import corpus_manifest, golden_path, problem_path, run_check
from odpcalc.errors import SchemaError, UnsupportedExpressionError
from odpcalc.problem import load_problem

MANIFEST = corpus_manifest()
CHECKS = [(e, c) for e in MANIFEST for c in e["checks"]]
NUM_TOL = 1e-6


def _path(name):
    return str(problem_path(name))


def _close(a, b, where="report"):
    if isinstance(a, dict):
        assert isinstance(b, dict) and set(a) == set(b), where
        for k in a:
            _close(a[k], b[k], f"{where}.{k}")
    elif isinstance(a, list):
        assert isinstance(b, list) and len(a) == len(b), where
        for i, (u, v) in enumerate(zip(a, b)):
            _close(u, v, f"{where}[{i}]")
    elif isinstance(a, float) or isinstance(b, float):
        if a is None or b is None or isinstance(a, (str, bool)) or isinstance(b, (str, bool)):
            assert a == b, where
        elif math.isfinite(a) and math.isfinite(b):
            assert abs(a - b) <= NUM_TOL * max(1.0, abs(b)), f"{where}: {a} vs {b}"
        else:
            assert a == b, where
    else:
        assert a == b, where


def test_manifest_contents():
    names = {e["name"] for e in MANIFEST}
    assert len(names) >= 9
    assert len({s for e in MANIFEST for s in e["sequences"]}) >= 6
    soc = next(e for e in MANIFEST if e["name"] == "soc_example")
    assert soc["oracle_only"]


@pytest.mark.parametrize("entry, check", CHECKS, ids=[c["id"] for _, c in CHECKS])
def test_golden_regression(entry, check):
    report = json.loads(json.dumps(run_check(entry, check)))
    golden = json.loads(golden_path(check["id"]).read_text())
    assert report["verdict"] == golden["verdict"] == check["expected"]
    _close(report, golden)


def test_mstat_directional_report():
    rep = run_command(["check", "mstat", "--point", "0,0", "--dir", "0,1", _path("ggcq_without_mscq")])
    assert rep["verdict"] == "Holds"
    lam = rep["details"]["lambda"]
    assert np.allclose(lam, [1.0, 0.0, 0.0])
    assert rep["details"]["residual"] <= 1e-9


def test_how_to_apply_multiplier():
    rep = run_command(["check", "mstat", _path("how_to_apply")])
    assert rep["details"]["lambda"] == [-1.0]


def test_gen_then_verify(tmp_path):
    out = tmp_path / "akkt.jsonl"
    rep = run_command(["gen", "amseq", "-K", "20", _path("akkt_example"), "--dir", "-0.7071,-0.7071",
                       "--out", str(out)])
    assert rep["verdict"] == "Holds" and out.exists()
    rep = run_command(["verify", "amseq", "--seq", str(out), "--dir", "-0.7071,-0.7071",
                       _path("akkt_example")])
    assert rep["verdict"] == "Holds"


def test_cubic_directional_mscq_diverges():
    rep = run_command(["check", "cq", "mscq", "--dir", "0.7071,0.7071", _path("odp_cubic")])
    assert rep["details"]["details"]["divergence"] is True


def test_polyhedral_mscq_bounded():
    rep = run_command(["check", "cq", "mscq", _path("mscq_not_enough")])
    assert rep["verdict"] == "Holds" and rep["details"]["details"]["divergence"] is False


@pytest.mark.parametrize("entry, check", CHECKS[:12], ids=[c["id"] for _, c in CHECKS[:12]])
def test_text_and_json_carry_the_same_report(entry, check):
    report = json.loads(json.dumps(run_check(entry, check)))
    assert parse_text(render_text(report)) == report


def test_main_exit_codes(capsys):
    assert main(["check", "mstat", _path("how_to_apply")]) == 0
    assert main(["check", "mstat", _path("akkt_example")]) == 1
    assert main(["oracle", "normals", "--grid", "200", _path("soc_example")]) == 2
    assert main(["check", "bogus", _path("how_to_apply")]) == 3
    assert main(["check", "mstat", "--point", "1,1", _path("akkt_example")]) == 3
    assert main(["check", "mstat", "--dir", "1,0,0", _path("akkt_example")]) == 3
    capsys.readouterr()


def test_main_json_output(capsys):
    assert main(["--json", "check", "mstat", _path("how_to_apply")]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert set(rep) == {"command", "verdict", "details"}


def test_main_text_output(capsys):
    main(["check", "mstat", _path("how_to_apply")])
    out = capsys.readouterr().out
    assert out.startswith("command: check mstat\nverdict: Holds\n")


def test_problem_schema(tmp_path):
    p = load_problem(problem_path("ggcq_without_mscq"))
    assert p.ell == 3 and p.gamma.nboxes == 1
    obj = json.loads(problem_path("how_to_apply").read_text())
    del obj["Gamma"]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(obj))
    with pytest.raises(SchemaError, match="Gamma"):
        load_problem(bad)
    assert main(["check", "mstat", str(bad)]) == 3


def test_nested_kink_rejected(tmp_path):
    obj = json.loads(problem_path("how_to_apply").read_text())
    obj["F"] = [{"op": "abs", "arg": {"op": "max", "args": [{"op": "var", "index": 0}, 0]}}]
    bad = tmp_path / "nested.json"
    bad.write_text(json.dumps(obj))
    with pytest.raises(UnsupportedExpressionError):
        load_problem(bad)


def _run(args, **env):
    return subprocess.run([sys.executable, "-m", "odpcalc", *args], capture_output=True, text=True,
                          env={**os.environ, **env}, timeout=120)


def test_module_entry_point():
    res = _run(["--json", "check", "mstat", "--dir", "0,1", _path("ggcq_without_mscq")])
    assert res.returncode == 0
    assert json.loads(res.stdout)["verdict"] == "Holds"


def test_pure_python_backend_agrees():
    args = ["--json", "oracle", "normals", "--grid", "300", _path("ggcq_without_mscq")]
    pure = _run(args, ODPCALC_PURE="1")
    default = _run(args)
    assert pure.returncode == default.returncode == 0
    _close(json.loads(pure.stdout), json.loads(default.stdout))
    res = subprocess.run([sys.executable, "-c", "from odpcalc import kernels; print(kernels.BACKEND)"],
                         capture_output=True, text=True, env={**os.environ, "ODPCALC_PURE": "1"})
    assert res.stdout.strip() == "python"
