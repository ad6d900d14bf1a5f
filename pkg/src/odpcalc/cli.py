"""Command line front end.

Every command produces a report ``{command, verdict, details}``.  The text
form lists the same fields one per line, so both forms carry identical
content.  Exit codes: 0 Holds, 1 Fails, 2 Inconclusive, 3 input errors,
4 numerical failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .amseq import (generate_am_sequence, load_sequence, refine_nonzero_multipliers,
                    verify_am_sequence, verify_dir_am_sequence)
from .errors import OdpError, SchemaError, SolverStallError, VerificationRegressionError
from .orthogeom import dir_limiting_normal_cone, limiting_normal_cone
from .problem import load_problem, parse_vector
from .quals import (check_foscms, check_gacq_ggcq, check_nnamcq, estimate_mscq,
                    falsify_am_regularity)
from .stationarity import (check_dir_m_stationarity, check_m_stationarity,
                           strict_local_min_by_trivial_cone)
from .submfc import check_odp_submfc, check_odp_submfc_dir
from .verdict import Status, to_jsonable

EXIT_INPUT = 3
EXIT_NUMERIC = 4


class UsageError(OdpError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------- argument helpers

def _unit(text, n):
    v = parse_vector(text, n, "direction")
    nv = float(np.linalg.norm(v))
    if nv == 0.0:
        raise SchemaError("direction must be nonzero")
    return v / nv


def _setup(args):
    p = load_problem(args.problem)
    x = p.point(parse_vector(args.point, p.n, "point")) if args.point else p.default_point()
    d = _unit(args.dir, p.n) if getattr(args, "dir", None) else None
    return p, x, d


def _seq_path(args):
    path = Path(args.seq)
    if not path.exists() and not path.is_absolute():
        alt = Path(args.problem).parent / path
        if alt.exists():
            return alt
    return path


def _load_seq(args, p):
    return load_sequence(_seq_path(args), p.n, p.ell)


def _index_list(text):
    if text is None:
        return None
    parts = [t.strip() for t in text.split(",") if t.strip()]
    try:
        return [int(t) for t in parts]
    except ValueError:
        raise SchemaError(f"cannot parse index list {text!r}") from None


def _report(command, verdict, **extra):
    details = verdict.to_dict()
    status = details.pop("status")
    details.update(to_jsonable(extra))
    return {"command": command, "verdict": status, "details": details}


# ---------------------------------------------------------------- commands

def cmd_analyze(args):
    p, x, _ = _setup(args)
    p.require_orthodisjunctive()
    p.require_feasible(x)
    mstat = check_m_stationarity(p, x)
    return _report("analyze", mstat, point=x, problem=p.name,
                   nnamcq=check_nnamcq(p, x).to_dict(),
                   strict_min_by_critical_cone=strict_local_min_by_trivial_cone(p, x).to_dict(),
                   piecewise_affine=p.F.is_piecewise_affine())


def cmd_mstat(args):
    p, x, d = _setup(args)
    if d is None:
        return _report("check mstat", check_m_stationarity(p, x), point=x)
    return _report("check mstat --dir", check_dir_m_stationarity(p, x, d), point=x, direction=d)


def cmd_cq(args):
    p, x, d = _setup(args)
    which = args.which
    if which == "nnamcq":
        return _report("check cq nnamcq", check_nnamcq(p, x), point=x)
    if which == "foscms":
        if d is None:
            raise UsageError("check cq foscms needs --dir")
        return _report("check cq foscms", check_foscms(p, x, d), point=x, direction=d)
    if which in ("gacq", "ggcq"):
        res = check_gacq_ggcq(p, x, grid=args.grid, seed=args.seed)
        other = "ggcq" if which == "gacq" else "gacq"
        return _report(f"check cq {which}", res[which], point=x, exact=res["exact"],
                       **{other: res[other].to_dict()})
    return _mscq_report(p, x, d, args)


def _mscq_report(p, x, d, args):
    from .verdict import fails, holds, inconclusive

    res = estimate_mscq(p, x, d=d, count=args.count, seed=args.seed)
    maxima = [{"decade": dec, "max_ratio": m} for dec, m in res["decade_maxima"]]
    summary = {"samples": len(res["rows"]), "decade_maxima": maxima, "seed": res["seed"],
               "divergence": res["divergence"]}
    if p.F.is_piecewise_affine():
        v = holds(reason="piecewise affine data over a union of boxes: polyhedral, hence subregular",
                  details=summary)
    elif res["divergence"]:
        v = fails(reason="sampled ratios dist(x,X)/dist(F(x),Gamma) diverge (evidence)",
                  details=summary)
    else:
        v = inconclusive("sampled ratios stay bounded; sampling cannot certify", details=summary)
    cmd = "check cq mscq" + (" --dir" if d is not None else "")
    return _report(cmd, v, point=x, direction=d)


def cmd_submfc(args):
    p, x, d = _setup(args)
    I = _index_list(args.I)
    if args.seq:
        seq = _load_seq(args, p)
        source = _seq_path(args).name
    else:
        seq = refine_nonzero_multipliers(p, generate_am_sequence(p, x, K=args.K, seed=args.seed, d=d),
                                         xbar=x, d=d)
        source = "generated"
    if d is None:
        v = check_odp_submfc(p, x, seq, I=I)
        return _report("check submfc", v, point=x, sequence=source)
    v = check_odp_submfc_dir(p, x, d, seq, I=I)
    return _report("check submfc --dir", v, point=x, direction=d, sequence=source)


def cmd_amreg(args):
    p, x, d = _setup(args)
    seq = _load_seq(args, p)
    xi = parse_vector(args.xi, p.n, "xi") if args.xi else seq.meta.get("xi")
    if xi is None:
        raise UsageError("check amreg needs --xi or an 'xi' entry in the sequence meta line")
    if d is None and args.mode != "plain":
        if seq.d is None:
            raise UsageError(f"mode {args.mode} needs --dir")
        d = seq.d / np.linalg.norm(seq.d)
    v = falsify_am_regularity(p, x, seq, np.asarray(xi, dtype=float), mode=args.mode, d=d)
    return _report("check amreg", v, point=x, mode=args.mode, direction=d, xi=xi)


def _seq_summary(rep):
    rows = rep.rows
    return {"records": len(rows), "all_records_ok": all(r["ok"] for r in rows),
            "max_stationarity_residual": max((r["stationarity_residual"] for r in rows), default=0.0),
            "trends": rep.trends}


def cmd_gen(args):
    p, x, d = _setup(args)
    seq = generate_am_sequence(p, x, K=args.K, seed=args.seed, d=d)
    rep = verify_am_sequence(p, seq, xbar=x) if d is None else verify_dir_am_sequence(p, seq, d, xbar=x)
    extra = {"point": x, "direction": d, "seed": args.seed, **_seq_summary(rep)}
    if args.out:
        seq.save(args.out)
        extra["output"] = args.out
    return _report("gen amseq" + (" --dir" if d is not None else ""), rep.verdict, **extra)


def cmd_verify(args):
    p, x, d = _setup(args)
    seq = _load_seq(args, p)
    xb = x if args.point or seq.xbar is None else seq.xbar
    rep = verify_am_sequence(p, seq, xbar=xb) if d is None else verify_dir_am_sequence(p, seq, d, xbar=xb)
    return _report("verify amseq" + (" --dir" if d is not None else ""), rep.verdict,
                   point=xb, direction=d, **_seq_summary(rep))


def cmd_refine(args):
    from .verdict import holds

    p, x, d = _setup(args)
    seq = _load_seq(args, p)
    xb = x if args.point or seq.xbar is None else seq.xbar
    out = refine_nonzero_multipliers(p, seq, xbar=xb, d=d)
    extra = {"point": xb, "direction": d, "records": len(out),
             "nonzero_multipliers": sum(bool(np.any(r.lam != 0)) for r in out)}
    if args.out:
        out.save(args.out)
        extra["output"] = args.out
    else:
        extra["sequence"] = [r.to_json() for r in out]
    return _report("refine amseq", holds(reason="refined sequence verifies"), **extra)


def cmd_oracle(args):
    from .oracle import (sample_limiting_normals, sample_normal_rays, sample_subdiff,
                         sample_tangent)
    from .polytope import PolyUnion
    from .pwexpr import dir_limiting_subdiff, limiting_subdiff
    from .verdict import fails, holds, inconclusive

    p, x, d = _setup(args)
    kind = args.what
    y = p.F.eval(x)
    if kind == "normals":
        if not p.orthodisjunctive:
            rays = sample_normal_rays(p.gamma, y, grid=args.grid, seed=args.seed)
            v = inconclusive("no exact normal cone for this constraint set; sampled rays only")
            return _report("oracle normals", v, point=x, samples=len(rays), rays=rays[:20], seed=args.seed)
        y = p.gamma.snap(y)
        w = None if d is None else p.F.dir_derivative(x, d)
        sampled = sample_limiting_normals(p.gamma, y, grid=args.grid, seed=args.seed, w=w)
        exact = limiting_normal_cone(p.gamma, y) if w is None else dir_limiting_normal_cone(p.gamma, y, w)
        same = sampled == exact
        v = holds(reason="sampled cone equals exact cone") if same else fails(
            reason="sampled cone differs from exact cone")
        return _report("oracle normals", v, point=x, direction=d, sampled=sampled.to_list(),
                       exact=exact.to_list(), seed=args.seed)
    if kind == "tangent":
        if d is None:
            raise UsageError("oracle tangent needs --dir")
        if p.orthodisjunctive:
            res = sample_tangent(p, x, d, seed=args.seed)
            target = "feasible set"
        else:
            res = sample_tangent(p.gamma, y, p.F.dir_derivative(x, d), seed=args.seed)
            target = "constraint set at F(x) along F'(x; d)"
        status = {"in": holds, "out": fails}.get(res)
        v = status(reason=f"sampled tangency: {res}") if status else inconclusive("borderline tangency samples")
        return _report("oracle tangent", v, point=x, direction=d, target=target, sample=res, seed=args.seed)
    if not args.lam:
        raise UsageError("oracle subdiff needs --lam")
    lam = parse_vector(args.lam, p.ell, "lambda")
    e = p.F.scalarized(lam)
    _, clusters = sample_subdiff(e, x, grid=args.grid, seed=args.seed, d=d, n=p.n)
    exact = limiting_subdiff(e, x, 1) if d is None else dir_limiting_subdiff(e, x, d, 1)
    gap = clusters.directed_hausdorff(exact) if not clusters.is_empty else 0.0
    v = holds(reason="sampled gradients lie in the exact set") if gap <= 1e-3 else fails(
        reason=f"sampled gradients leave the exact set by {gap:.3g}")
    return _report("oracle subdiff", v, point=x, direction=d, lam=lam,
                   sampled=clusters.vertices(), exact=exact.to_list(), gap=gap, seed=args.seed)


# ---------------------------------------------------------------- parser

def _common(sp, direction=True):
    sp.add_argument("problem", help="problem JSON file")
    sp.add_argument("--point", help="point as comma separated reals (default: the file's xbar)")
    if direction:
        sp.add_argument("--dir", help="direction, normalized to unit length")


def build_parser():
    ap = _Parser(prog="odpcalc", description="Stationarity and qualification checks for constraints F(x) in a union of boxes.")
    ap.add_argument("--json", action="store_true", help="print the JSON report")
    ap.add_argument("--seed", type=int, default=0, help="seed for randomized steps (default 0)")
    ap.add_argument("--version", action="version", version=f"odpcalc {__version__}")
    sub = ap.add_subparsers(dest="group", required=True)

    sp = sub.add_parser("analyze", help="M-stationarity, NNAMCQ and a critical cone test")
    _common(sp, direction=False)
    sp.set_defaults(func=cmd_analyze)

    check = sub.add_parser("check", help="stationarity and qualification checks")
    csub = check.add_subparsers(dest="check", required=True)
    sp = csub.add_parser("mstat", help="(directional) M-stationarity")
    _common(sp)
    sp.set_defaults(func=cmd_mstat)
    sp = csub.add_parser("cq", help="constraint qualifications")
    sp.add_argument("which", choices=["nnamcq", "foscms", "gacq", "ggcq", "mscq"])
    _common(sp)
    sp.add_argument("--grid", type=int, default=None, help="sphere grid size for gacq/ggcq")
    sp.add_argument("--count", type=int, default=60, help="samples for mscq")
    sp.set_defaults(func=cmd_cq)
    sp = csub.add_parser("submfc", help="(directional) ODP-subMFC")
    _common(sp)
    sp.add_argument("--seq", help="AM sequence file (default: generate and refine one)")
    sp.add_argument("--I", help="comma separated index subset (default: inferred)")
    sp.add_argument("-K", type=int, default=20)
    sp.set_defaults(func=cmd_submfc)
    sp = csub.add_parser("amreg", help="refute AM-regularity with a witness sequence")
    _common(sp)
    sp.add_argument("--seq", required=True)
    sp.add_argument("--xi", help="limit of the xi column (default: from the meta line)")
    sp.add_argument("--mode", choices=["plain", "dir", "strong"], default="plain")
    sp.set_defaults(func=cmd_amreg)

    gen = sub.add_parser("gen", help="generate data")
    gsub = gen.add_subparsers(dest="gen", required=True)
    sp = gsub.add_parser("amseq", help="AM sequence by quadratic penalties")
    _common(sp)
    sp.add_argument("-K", type=int, default=20)
    sp.add_argument("--out", help="write the sequence here")
    sp.set_defaults(func=cmd_gen)

    ver = sub.add_parser("verify", help="verify data")
    vsub = ver.add_subparsers(dest="verify", required=True)
    sp = vsub.add_parser("amseq", help="(directional) AM sequence")
    _common(sp)
    sp.add_argument("--seq", required=True)
    sp.set_defaults(func=cmd_verify)

    ref = sub.add_parser("refine", help="refine data")
    rsub = ref.add_subparsers(dest="refine", required=True)
    sp = rsub.add_parser("amseq", help="make all multipliers nonzero")
    _common(sp)
    sp.add_argument("--seq", required=True)
    sp.add_argument("--out", help="write the refined sequence here")
    sp.set_defaults(func=cmd_refine)

    orc = sub.add_parser("oracle", help="sampling oracles")
    orc.add_argument("what", choices=["normals", "tangent", "subdiff"])
    _common(orc)
    orc.add_argument("--lam", help="multiplier for subdiff")
    orc.add_argument("--grid", type=int, default=2000)
    orc.set_defaults(func=cmd_oracle)
    return ap


_VECTOR_FLAGS = ("--dir", "--point", "--lam", "--xi")


def _glue_vectors(argv):
    # "--dir -1,-1" would otherwise read the vector as an option
    out, it = [], iter(argv)
    for a in it:
        if a in _VECTOR_FLAGS:
            nxt = next(it, None)
            out.append(a if nxt is None else f"{a}={nxt}")
        else:
            out.append(a)
    return out


def run_command(argv):
    """Parse ``argv`` and return the report; raises on errors."""
    args = build_parser().parse_args(_glue_vectors(list(argv)))
    return args.func(args)


def exit_code(report):
    return Status(report["verdict"]).exit_code


# ---------------------------------------------------------------- rendering

def _flatten(obj, prefix=""):
    if isinstance(obj, dict) and obj:
        for k, v in obj.items():
            yield from _flatten(v, f"{prefix}.{k}" if prefix else str(k))
    else:
        yield prefix, obj


def render_text(report):
    lines = [f"command: {report['command']}", f"verdict: {report['verdict']}"]
    for key, val in _flatten(report["details"], "details"):
        lines.append(f"{key}: {json.dumps(val)}")
    return "\n".join(lines) + "\n"


def parse_text(text):
    """Inverse of :func:`render_text`."""
    out = {"details": {}}
    for line in text.splitlines():
        key, _, val = line.partition(": ")
        if key in ("command", "verdict"):
            out[key] = val
            continue
        parts = key.split(".")[1:]
        node = out["details"]
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        if parts:
            node[parts[-1]] = json.loads(val)
    return out


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    want_json = "--json" in argv
    argv = [a for a in argv if a != "--json"]
    try:
        report = run_command(argv)
    except (SolverStallError, VerificationRegressionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OdpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    sys.stdout.write(json.dumps(report, indent=1) + "\n" if want_json else render_text(report))
    return exit_code(report)
