"""Bundled example problems, witness sequences and their expected verdicts.

The JSON files under ``corpus/`` are generated by :func:`write_corpus` from
the builders below and then kept under version control; the golden reports
in ``corpus/golden`` are frozen CLI outputs.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .amseq import AMRecord, AMSequence, load_sequence
from .orthogeom import OrthoSet
from .problem import ProblemSpec, SecondOrderCone, load_problem
from .pwexpr import Abs, Const, Spline, Sqrt, VectorFunc, smax, smin, var

CORPUS_DIR = Path(__file__).with_name("corpus")
GOLDEN_DIR = CORPUS_DIR / "golden"
K_DEFAULT = 50
INF = math.inf
R2 = 1.0 / math.sqrt(2.0)


def _box(*intervals):
    return OrthoSet.from_intervals([list(intervals)])


def _problems():
    x1, x2, x3 = var(0), var(1), var(2)
    g_sqrt = Sqrt(x1, tau0=0.25, extend=True)
    g_cubic = smin(x1 ** 3 - 3 * x1, Spline(x1, (1.0,), ((-2.0,), (0, -3.0, 0, 1.0))))
    return [
        ProblemSpec(2, x1, VectorFunc([-x1, -x2, x1 * x2], 2),
                    _box((-INF, 0), (-INF, 0), (0, 0)), "ggcq_without_mscq", {"xbar": [0, 0]}),
        ProblemSpec(1, x1, VectorFunc([x1], 1), _box((0, 0)), "how_to_apply", {"xbar": [0]}),
        ProblemSpec(2, x1 + x2, VectorFunc([x1 ** 2 + x2 ** 2], 2), _box((-INF, 0)),
                    "akkt_example", {"xbar": [0, 0]}),
        ProblemSpec(2, x1, VectorFunc([x1, -x1, x1 + x2], 2), _box(*[(-INF, 0)] * 3),
                    "mscq_not_enough", {"xbar": [0, 0]}),
        ProblemSpec(2, Const(0.0), VectorFunc([smax(x1 ** 2, x1) - x2, smin(x1 ** 2, -x1) + x2], 2),
                    _box((-INF, 0), (-INF, 0)), "dirmscq_without_ggcq", {"xbar": [0, 0]}),
        ProblemSpec(3, 1.5 * x1 + x2 + x3,
                    VectorFunc([g_sqrt - x2 - x3 - 1, x1 + Abs(x2) - x2 - 1, -x3], 3),
                    _box((0, 0), (0, 0), (-INF, 0)), "normal_but_not_dir", {"xbar": [1, 0, 0]}),
        ProblemSpec(2, x1 ** 2, VectorFunc([-Abs(x1) + Abs(x2), -x1 + x2], 2),
                    _box((0, 0), (0, 0)), "dir_but_not_normal", {"xbar": [0, 0]}),
        ProblemSpec(2, (x1 + 2) ** 2 + (x2 - 1) ** 2, VectorFunc([x2 ** 3 - 3 * x2 - g_cubic], 2),
                    _box((-INF, 0)), "odp_cubic", {"xbar": [-2, 1]}),
        ProblemSpec(1, Const(0.0), VectorFunc([x1 ** 2], 1), _box((-INF, 0)),
                    "amreg_not_ggcq", {"xbar": [0]}),
        ProblemSpec(2, x1, VectorFunc([x1, x2, x2], 2), SecondOrderCone(3), "soc_example",
                    {"xbar": [0, 0], "oracle_only": True}),
    ]


def _seq(name, xbar, rows, d=None, **meta):
    recs = []
    for k in range(1, K_DEFAULT + 1):
        x, lam, delta, tail = rows(k)
        key = "xi" if "xi" in meta else "eps"
        kw = {key: np.asarray(tail, dtype=float)}
        recs.append(AMRecord(k, np.asarray(x, dtype=float), np.asarray(lam, dtype=float),
                             np.asarray(delta, dtype=float), **kw))
    if "xi" in meta:
        meta["xi"] = list(meta["xi"])
    meta["name"] = name
    return AMSequence(recs, np.asarray(xbar, dtype=float),
                      None if d is None else np.asarray(d, dtype=float), meta)


def _sequences():
    c = 1.0
    return {
        "akkt_dir": _seq("akkt_dir", [0, 0], lambda k: (
            [-1 / (2 * k), -1 / (2 * k)], [k * c], [1 / (2 * k ** 2)], [0, 0]),
            d=[-R2, -R2], problem="akkt_example"),
        "mscq_not_enough_dir": _seq("mscq_not_enough_dir", [0, 0], lambda k: (
            [0, -1 / k], [k, k + 1, 0], [0, 0, 0], [0, 0]),
            d=[0, -1], problem="mscq_not_enough"),
        "normal_not_dir": _seq("normal_not_dir", [1, 0, 0], lambda k: (
            [1, 0, 0], [1, -2, 0], [0, 0, 1 / k], [0, 0, 0]),
            problem="normal_but_not_dir"),
        "dir_not_normal_plus": _seq("dir_not_normal_plus", [0, 0], lambda k: (
            [1 / k, 1 / k], [1 / k, 1 / k], [0, 0], [0, 2 / k]),
            d=[R2, R2], problem="dir_but_not_normal"),
        "dir_not_normal_minus": _seq("dir_not_normal_minus", [0, 0], lambda k: (
            [-1 / k, -1 / k], [1 / k, -1 / k], [0, 0], [0, -2 / k]),
            d=[-R2, -R2], problem="dir_but_not_normal"),
        "odp_cubic_dir": _seq("odp_cubic_dir", [-2, 1], lambda k: (
            [-2 + 1 / k, 1 + 1 / k], [0], [6 / k ** 2], [2 / k, 2 / k]),
            d=[R2, R2], problem="odp_cubic"),
        "odp_amreg_witness": _seq("odp_amreg_witness", [-2, 1], lambda k: (
            [-2 + 1 / k, 1 + 1 / k], [k * c], [3 / k ** 2 + 1 / k ** 3], [0, 6 + 3 / k]),
            d=[R2, R2], problem="odp_cubic", xi=[0, 6]),
        "ggcq_not_amreg_witness": _seq("ggcq_not_amreg_witness", [0, 0], lambda k: (
            [1 / k ** 2, 1 / k], [0, 0, k * c], [0, 0, 1 / k ** 3], [1, 1 / k]),
            d=[0, 1], problem="ggcq_without_mscq", xi=[1, 0]),
    }


def write_corpus(directory=CORPUS_DIR):
    """Regenerate the problem and sequence files."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for p in _problems():
        (directory / f"{p.name}.json").write_text(json.dumps(p.to_json(), indent=1) + "\n")
    for name, s in _sequences().items():
        s.save(directory / f"{name}.jsonl")


def _d(*v):
    return ",".join(repr(float(a)) for a in v)


# One entry per bundled check: CLI arguments (file names resolve inside the
# corpus directory) and the expected verdict.
CHECKS = [
    ("ggcq_without_mscq", "dir_mstat", ["check", "mstat", "--dir", "0,1"], "Holds"),
    ("ggcq_without_mscq", "mstat", ["check", "mstat"], "Holds"),
    ("ggcq_without_mscq", "ggcq", ["check", "cq", "ggcq"], "Holds"),
    ("ggcq_without_mscq", "gacq", ["check", "cq", "gacq"], "Fails"),
    ("ggcq_without_mscq", "dir_mscq", ["check", "cq", "mscq", "--dir", "0,1"], "Fails"),
    ("ggcq_without_mscq", "amreg_witness",
     ["check", "amreg", "--seq", "ggcq_not_amreg_witness.jsonl", "--mode", "dir"], "Fails"),
    ("how_to_apply", "mstat", ["check", "mstat"], "Holds"),
    ("how_to_apply", "analyze", ["analyze"], "Holds"),
    ("akkt_example", "mstat", ["check", "mstat"], "Fails"),
    ("akkt_example", "verify_dir", ["verify", "amseq", "--seq", "akkt_dir.jsonl",
                                    "--dir", _d(-R2, -R2)], "Holds"),
    ("akkt_example", "nnamcq", ["check", "cq", "nnamcq"], "Fails"),
    ("mscq_not_enough", "nnamcq", ["check", "cq", "nnamcq"], "Fails"),
    ("mscq_not_enough", "mscq", ["check", "cq", "mscq"], "Holds"),
    ("mscq_not_enough", "verify_dir", ["verify", "amseq", "--seq", "mscq_not_enough_dir.jsonl",
                                       "--dir", "0,-1"], "Holds"),
    ("mscq_not_enough", "mstat", ["check", "mstat"], "Holds"),
    ("dirmscq_without_ggcq", "ggcq", ["check", "cq", "ggcq"], "Fails"),
    ("dirmscq_without_ggcq", "gacq", ["check", "cq", "gacq"], "Fails"),
    ("normal_but_not_dir", "submfc", ["check", "submfc", "--seq", "normal_not_dir.jsonl",
                                      "--I", "0,1"], "Holds"),
    ("normal_but_not_dir", "mstat", ["check", "mstat"], "Holds"),
    ("normal_but_not_dir", "dir_mstat", ["check", "mstat", "--dir", "-2,-1,0"], "Fails"),
    ("dir_but_not_normal", "submfc", ["check", "submfc", "--seq", "dir_not_normal_plus.jsonl"],
     "Fails"),
    ("dir_but_not_normal", "submfc_plus", ["check", "submfc", "--seq", "dir_not_normal_plus.jsonl",
                                           "--dir", "1,1"], "Holds"),
    ("dir_but_not_normal", "submfc_minus", ["check", "submfc", "--seq", "dir_not_normal_minus.jsonl",
                                            "--dir", "-1,-1"], "Holds"),
    ("dir_but_not_normal", "dir_mstat", ["check", "mstat", "--dir", "1,1"], "Holds"),
    ("dir_but_not_normal", "mscq", ["check", "cq", "mscq"], "Holds"),
    ("odp_cubic", "submfc", ["check", "submfc", "--seq", "odp_cubic_dir.jsonl", "--I", ""], "Holds"),
    ("odp_cubic", "submfc_dir", ["check", "submfc", "--seq", "odp_cubic_dir.jsonl", "--I", "",
                                 "--dir", "1,1"], "Holds"),
    ("odp_cubic", "dir_mscq", ["check", "cq", "mscq", "--dir", "1,1"], "Fails"),
    ("odp_cubic", "amreg_witness", ["check", "amreg", "--seq", "odp_amreg_witness.jsonl"], "Fails"),
    ("odp_cubic", "mstat", ["check", "mstat"], "Holds"),
    ("amreg_not_ggcq", "ggcq", ["check", "cq", "ggcq"], "Fails"),
    ("amreg_not_ggcq", "mstat", ["check", "mstat"], "Holds"),
    ("ggcq_without_mscq", "oracle_normals", ["oracle", "normals", "--grid", "500"], "Holds"),
    ("ggcq_without_mscq", "oracle_dir_normals", ["oracle", "normals", "--dir", "0,1", "--grid", "500"],
     "Holds"),
    ("akkt_example", "gen_dir", ["gen", "amseq", "-K", "20", "--dir", "-1,-1"], "Holds"),
    ("akkt_example", "oracle_tangent", ["oracle", "tangent", "--dir", "-1,0"], "Fails"),
    ("mscq_not_enough", "foscms", ["check", "cq", "foscms", "--dir", "0,-1"], "Fails"),
    ("dirmscq_without_ggcq", "oracle_subdiff", ["oracle", "subdiff", "--lam", "1,1"], "Holds"),
    ("dirmscq_without_ggcq", "oracle_tangent", ["oracle", "tangent", "--dir", "1,1"], "Holds"),
    ("normal_but_not_dir", "refine", ["refine", "amseq", "--seq", "normal_not_dir.jsonl"], "Holds"),
    ("soc_example", "oracle_normals", ["oracle", "normals", "--grid", "300"], "Inconclusive"),
    ("soc_example", "oracle_tangent", ["oracle", "tangent", "--dir", "0,1"], "Holds"),
]


def corpus_manifest():
    """Bundled examples with their files, sequences and expected verdicts."""
    problems = {p.name: p for p in _problems()}
    seqs = _sequences()
    out = []
    for name, p in problems.items():
        out.append({
            "name": name,
            "file": f"{name}.json",
            "xbar": p.meta["xbar"],
            "oracle_only": bool(p.meta.get("oracle_only", False)),
            "sequences": sorted(f"{s}.jsonl" for s, q in seqs.items() if q.meta["problem"] == name),
            "checks": [{"id": f"{name}__{cid}", "args": args, "expected": exp}
                       for pn, cid, args, exp in CHECKS if pn == name],
        })
    return out


def problem_path(name):
    return CORPUS_DIR / (name if name.endswith(".json") else f"{name}.json")


def load_corpus_problem(name):
    return load_problem(problem_path(name))


def load_corpus_sequence(name):
    path = CORPUS_DIR / (name if name.endswith(".jsonl") else f"{name}.jsonl")
    return load_sequence(path)


def golden_path(check_id):
    return GOLDEN_DIR / f"{check_id}.json"


def run_check(entry, check):
    """Run one manifest check through the command line layer."""
    from .cli import run_command

    return run_command(list(check["args"]) + [str(problem_path(entry["file"]))])


def write_golden():
    """Freeze the current reports of every manifest check."""
    GOLDEN_DIR.mkdir(parents=True, exist_ok=True)
    for entry in corpus_manifest():
        for check in entry["checks"]:
            report = run_check(entry, check)
            golden_path(check["id"]).write_text(json.dumps(report, indent=1, sort_keys=True) + "\n")
