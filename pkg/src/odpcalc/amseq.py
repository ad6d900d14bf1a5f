"""Approximate stationarity along sequences.

A record ``(x, lam, delta, eps)`` is checked against

    eps - grad f(x)  in  d<lam, F>(x),      lam  in  N(F(x) - delta),

and a finite sequence is accepted when the per-record checks pass and the
vanishing quantities pass the tail/slope protocol of :mod:`asymptotics`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import asymptotics as asy
from .errors import (BasePointCollisionError, MalformedSequenceError, NotOrthodisjunctiveError,
                     SchemaError, SolverStallError, VerificationRegressionError)
from .orthogeom import (FEAS_TOL, NONNEG, NONPOS, FREE, ZERO, active_sets, limiting_normal_cone,
                        regular_normal_cone, _position)
from .pwexpr import exact_scalarized_subdiff, limiting_subdiff, scalarization_subdiff
from .verdict import fails, holds

SNAP_TOL = 1e-10
POINT_TOL = 1e-8


# ---------------------------------------------------------------- data

@dataclass
class AMRecord:
    k: int
    x: np.ndarray
    lam: np.ndarray
    delta: np.ndarray
    eps: np.ndarray | None = None
    xi: np.ndarray | None = None

    def to_json(self):
        out = {"k": int(self.k), "x": self.x.tolist(), "lambda": self.lam.tolist(),
               "delta": self.delta.tolist()}
        if self.eps is not None:
            out["eps"] = self.eps.tolist()
        if self.xi is not None:
            out["xi"] = self.xi.tolist()
        return out


@dataclass
class AMSequence:
    records: list
    xbar: np.ndarray | None = None
    d: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def ks(self):
        return np.array([r.k for r in self.records], dtype=float)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])

    def to_jsonl(self):
        meta = dict(self.meta)
        if self.xbar is not None:
            meta["xbar"] = np.asarray(self.xbar).tolist()
        if self.d is not None:
            meta["d"] = np.asarray(self.d).tolist()
        lines = [json.dumps({"meta": meta})] if meta else []
        lines += [json.dumps(r.to_json()) for r in self.records]
        return "\n".join(lines) + "\n"

    def save(self, path):
        Path(path).write_text(self.to_jsonl())


def _vec(obj, key, where, dim=None, required=True):
    if key not in obj:
        if required:
            raise MalformedSequenceError(f"{where}: missing field '{key}'")
        return None
    v = obj[key]
    if not isinstance(v, list) or not all(isinstance(a, (int, float)) and not isinstance(a, bool) for a in v):
        raise MalformedSequenceError(f"{where}: field '{key}' must be a list of numbers")
    arr = np.array(v, dtype=float)
    if dim is not None and len(arr) != dim:
        raise MalformedSequenceError(f"{where}: field '{key}' has {len(arr)} entries, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise MalformedSequenceError(f"{where}: field '{key}' is not finite")
    return arr


def sequence_from_lines(lines, source="<sequence>", n=None, ell=None):
    records, meta = [], {}
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedSequenceError(f"{where}: invalid JSON: {exc.msg}") from None
        if not isinstance(obj, dict):
            raise MalformedSequenceError(f"{where}: each line must be an object")
        if "meta" in obj:
            if records:
                raise MalformedSequenceError(f"{where}: meta line must come first")
            meta = dict(obj["meta"])
            continue
        k = obj.get("k")
        if isinstance(k, bool) or not isinstance(k, int) or k < 1:
            raise MalformedSequenceError(f"{where}: field 'k' must be a positive integer")
        x = _vec(obj, "x", where, n)
        lam = _vec(obj, "lambda", where, ell)
        delta = _vec(obj, "delta", where, len(lam))
        eps = _vec(obj, "eps", where, len(x), required=False)
        xi = _vec(obj, "xi", where, len(x), required=False)
        if eps is None and xi is None:
            raise MalformedSequenceError(f"{where}: record needs 'eps' or 'xi'")
        if records and (len(x) != len(records[0].x) or len(lam) != len(records[0].lam)):
            raise MalformedSequenceError(f"{where}: dimensions differ from the first record")
        if records and k <= records[-1].k:
            raise MalformedSequenceError(f"{where}: indices k must increase")
        records.append(AMRecord(k, x, lam, delta, eps, xi))
    if not records:
        raise MalformedSequenceError(f"{source}: no records")
    xbar = np.array(meta["xbar"], dtype=float) if "xbar" in meta else None
    d = np.array(meta["d"], dtype=float) if "d" in meta else None
    rest = {k: v for k, v in meta.items() if k not in ("xbar", "d")}
    return AMSequence(records, xbar, d, rest)


def load_sequence(path, n=None, ell=None):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SchemaError(f"{path}: {exc.strerror}") from None
    return sequence_from_lines(text.splitlines(), str(path), n, ell)


def _check_dims(p, seq):
    r = seq.records[0]
    if len(r.x) != p.n or len(r.lam) != p.ell:
        raise MalformedSequenceError(
            f"sequence has x in R^{len(r.x)}, lambda in R^{len(r.lam)}; problem needs R^{p.n}, R^{p.ell}")


def _base_point(p, seq, xbar):
    if xbar is not None:
        return p.point(xbar)
    if seq.xbar is not None:
        return p.point(seq.xbar)
    return p.default_point()


# ---------------------------------------------------------------- per-record checks

def normal_residual(p, x, lam, delta):
    """``(ok, y, info)`` for ``lam in N(F(x) - delta)`` after snapping onto the set."""
    y = p.F.eval(x) - delta
    scale = 1.0 + float(np.max(np.abs(y), initial=0.0))
    dist = p.gamma.distance(y)
    if dist > SNAP_TOL * scale:
        return False, y, {"off_set": dist}
    y = p.gamma.snap(y, SNAP_TOL * scale)
    cone = limiting_normal_cone(p.gamma, y)
    ok = cone.contains(lam, POINT_TOL * (1.0 + float(np.max(np.abs(lam), initial=0.0))))
    return ok, y, {"normal_cone": cone.to_list()}


def subgradient_residual(p, x, lam, vec, d=None):
    """Distance from ``vec`` to the subdifferential of ``<lam, F>`` at ``x``.

    The sum-rule outer estimate is tried first; when it is not known to be
    exact the combined expression is used instead.
    """
    S, exact = scalarization_subdiff(p.F, lam, x, d)
    dist = S.distance(vec)
    if not exact:
        dist = exact_scalarized_subdiff(p.F, lam, x, d).distance(vec)
    return dist


def _stat_tol(lam, g):
    return POINT_TOL * (1.0 + float(np.linalg.norm(lam)) + float(np.linalg.norm(g)))


def index_sets(p, x, delta):
    """``(J, I)`` at ``F(x) - delta``: active boxes and endpoint coordinates."""
    y = p.F.eval(x) - delta
    scale = 1.0 + float(np.max(np.abs(y), initial=0.0))
    y = p.gamma.snap(y, SNAP_TOL * scale)
    return active_sets(p.gamma, y)


# ---------------------------------------------------------------- verification

@dataclass
class SequenceReport:
    verdict: object
    rows: list
    trends: dict

    @property
    def status(self):
        return self.verdict.status

    def to_dict(self):
        return {"verdict": self.verdict.to_dict(), "rows": self.rows,
                "trends": {k: v for k, v in self.trends.items()}}


def _trend_entry(ok, tr, kind):
    return {"ok": bool(ok), "kind": kind, "tail": tr.tail, "slope": tr.slope}


def verify_am_sequence(p, seq, tol=asy.DEFAULT_TOL, xbar=None, slope=asy.DEFAULT_SLOPE):
    """Check every record and the vanishing of ``x - xbar``, ``delta`` and ``eps``."""
    p.require_orthodisjunctive()
    _check_dims(p, seq)
    xbar = _base_point(p, seq, xbar)
    rows, failures = [], []
    for r in seq.records:
        if r.eps is None:
            raise MalformedSequenceError(f"record k={r.k} has no 'eps'")
        ok_n, y, info = normal_residual(p, r.x, r.lam, r.delta)
        g = p.grad_f(r.x)
        dist = subgradient_residual(p, r.x, r.lam, r.eps - g)
        ok_s = dist <= _stat_tol(r.lam, g)
        rows.append({"k": r.k, "feasible_shift": "off_set" not in info, "normal": bool(ok_n),
                     "stationarity_residual": dist, "ok": bool(ok_n and ok_s)})
        if not ok_n:
            failures.append(f"k={r.k}: multiplier not in the normal cone")
        if not ok_s:
            failures.append(f"k={r.k}: stationarity residual {dist:.3g}")
    ks = seq.ks
    trends = {}
    for name, vals in (("x_to_xbar", [np.linalg.norm(r.x - xbar) for r in seq.records]),
                       ("delta", [np.linalg.norm(r.delta) for r in seq.records]),
                       ("eps", [np.linalg.norm(r.eps) for r in seq.records])):
        ok, tr = asy.tends_to_zero(vals, ks, tol, slope)
        trends[name] = _trend_entry(ok, tr, "to_zero")
        if not ok:
            failures.append(f"{name} does not tend to zero (tail {tr.tail:.3g}, slope {tr.slope:.3g})")
    details = {"K": len(seq), "failures": failures}
    verdict = holds(details=details) if not failures else fails(reason=failures[0], details=details)
    return SequenceReport(verdict, rows, trends)


def directional_trends(seq, xbar, d, tol=asy.DEFAULT_TOL, slope=asy.DEFAULT_SLOPE):
    """The four directional conditions, each as a trend entry."""
    d = np.asarray(d, dtype=float)
    secant, rel_delta, align, growth = [], [], [], []
    for r in seq.records:
        v = r.x - xbar
        nv = float(np.linalg.norm(v))
        if nv == 0.0:
            raise BasePointCollisionError(f"record k={r.k} sits at the base point")
        secant.append(np.linalg.norm(v / nv - d))
        nd = float(np.linalg.norm(r.delta))
        rel_delta.append(nd / nv)
        align.append(asy.alignment_residual(r.lam, r.delta))
        growth.append(nd * float(np.linalg.norm(r.lam)) / nv)
    ks = seq.ks
    out = {}
    for name, vals in (("secant_to_d", secant), ("delta_over_dist", rel_delta),
                       ("alignment", align)):
        ok, tr = asy.tends_to_zero(vals, ks, tol, slope)
        out[name] = _trend_entry(ok, tr, "to_zero")
    ok, tr = asy.is_bounded(growth, ks, slope)
    out["growth_bounded"] = _trend_entry(ok, tr, "bounded")
    return out


def verify_dir_am_sequence(p, seq, d, tol=asy.DEFAULT_TOL, xbar=None, slope=asy.DEFAULT_SLOPE):
    from .stationarity import unit_direction

    d = unit_direction(d, p.n)
    xb = _base_point(p, seq, xbar)
    extra = directional_trends(seq, xb, d, tol, slope)
    base = verify_am_sequence(p, seq, tol, xb, slope)
    failures = list(base.verdict.details["failures"])
    for name, entry in extra.items():
        if not entry["ok"]:
            failures.append(f"directional condition {name} fails (tail {entry['tail']:.3g}, slope {entry['slope']:.3g})")
    trends = {**base.trends, **extra}
    details = {"K": len(seq), "direction": d, "failures": failures}
    verdict = holds(details=details) if not failures else fails(reason=failures[0], details=details)
    return SequenceReport(verdict, base.rows, trends)


# ---------------------------------------------------------------- generation

def _penalty_parts(p, x, k, anchor):
    Fx, J = p.F.value_and_jacobian(x)
    proj, _ = p.gamma.project(Fx)
    delta = Fx - proj
    fx, g = _f_and_grad(p, x)
    val = fx + 0.5 * k * float(delta @ delta) + 0.5 * float((x - anchor) @ (x - anchor))
    grad = g + k * (J.T @ delta) + (x - anchor)
    return val, grad, delta, J, g


def _f_and_grad(p, x):
    from .pwexpr import value_and_grad
    return value_and_grad(p.f, x)


def generate_am_sequence(p, xbar, K=20, steps=2000, seed=0, d=None, starts=5):
    """Minimize ``f + (k/2) dist(F, Gamma)^2 + |x - anchor|^2 / 2`` for ``k = 1..K``.

    The anchor is ``xbar``, or ``xbar + d/k`` in directional mode.  Then
    ``delta = F(x) - Proj(F(x))``, ``lam = k delta`` and ``eps`` is the
    residual ``grad f(x) + J(x)^T lam``, which equals ``anchor - x`` up to
    the solver tolerance.
    """
    from scipy.optimize import minimize

    p.require_orthodisjunctive()
    xbar = p.point(xbar)
    if d is not None:
        from .stationarity import unit_direction
        d = unit_direction(d, p.n)
    rng = np.random.default_rng(seed)
    records = []
    prev = xbar.copy()
    for k in range(1, K + 1):
        anchor = xbar if d is None else xbar + d / k
        inits = [anchor, prev] + [anchor + 0.1 * rng.standard_normal(p.n) / k
                                  for _ in range(max(0, starts - 2))]
        best = None
        for x0 in inits:
            res = minimize(lambda z: _penalty_parts(p, z, k, anchor)[:2], x0, jac=True,
                           method="BFGS", options={"gtol": 1e-12, "maxiter": steps})
            val, grad, *_ = _penalty_parts(p, res.x, k, anchor)
            gn = float(np.linalg.norm(grad))
            if gn <= 1e-8 * (1.0 + k) and (best is None or val < best[0] - 1e-14):
                best = (val, res.x.copy())
        if best is None:
            raise SolverStallError(f"penalty subproblem k={k} did not reach a stationary point")
        x = best[1]
        if d is not None and np.array_equal(x, xbar):
            raise SolverStallError(f"penalty subproblem k={k} returned the base point")
        _, _, delta, J, g = _penalty_parts(p, x, k, anchor)
        lam = k * delta
        eps = g + J.T @ lam
        records.append(AMRecord(k, x, lam, delta, eps))
        prev = x
    meta = {"generator": "penalty", "seed": seed}
    return AMSequence(records, xbar, d, meta)


# ---------------------------------------------------------------- refinement

def _normal_tags_at(gamma, y):
    """Coordinate tags of the regular normal cone at ``y`` (a single cell)."""
    return regular_normal_cone(gamma, y).cells[0]


def _approximant(gamma, y, lam, radius):
    """A point ``y'`` within ``radius`` of ``y`` where ``lam`` is a regular normal.

    Moves a subset of endpoint coordinates slightly into the interior of the
    boxes that remain active; returns ``y`` itself when it already works.
    """
    import itertools

    J, I = active_sets(gamma, y)
    if regular_normal_cone(gamma, y).contains(lam, POINT_TOL * (1 + np.linalg.norm(lam))):
        return y
    gaps = []
    for j in J:
        for i in I:
            for end in (gamma.lo[j, i], gamma.hi[j, i]):
                if np.isfinite(end) and abs(end - y[i]) > 0:
                    gaps.append(abs(end - y[i]))
    rho = min([radius] + [g / 2 for g in gaps]) / math.sqrt(max(len(I), 1))
    for moves in itertools.product((0, 1, -1), repeat=len(I)):
        z = y.copy()
        for i, m in zip(I, moves):
            z[i] += m * rho
        if not gamma.contains(z, 0.0):
            continue
        if regular_normal_cone(gamma, z).contains(lam, POINT_TOL * (1 + np.linalg.norm(lam))):
            return z
    return None


def _a_subgradient(p, x, i, sign):
    return limiting_subdiff(p.F[i], x, sign).polytopes[0][0]


def _refine_record(p, r, xbar, d, k):
    x, lam, delta, eps = r.x, r.lam.copy(), r.delta.copy(), r.eps.copy()
    ell = p.ell
    nx = float(np.linalg.norm(x - xbar))
    for _ in range(4 * ell + 4):
        y = p.gamma.snap(p.F.eval(x) - delta, SNAP_TOL * (1 + np.max(np.abs(p.F.eval(x)))))
        J, I = active_sets(p.gamma, y)
        zero = [i for i in I if lam[i] == 0.0]
        if not zero:
            break
        radius = 1.0 / k if d is None else min(nx, 2.0 ** -k) * float(np.linalg.norm(delta))
        if radius <= 0.0:
            radius = 1.0 / k
        yp = _approximant(p.gamma, y, lam, radius)
        if yp is None:
            raise VerificationRegressionError(f"k={k}: no regular approximant for the multiplier")
        delta = p.F.eval(x) - yp
        tags = _normal_tags_at(p.gamma, yp)
        _, Ip = active_sets(p.gamma, yp)
        zero = [i for i in Ip if lam[i] == 0.0]
        i12 = [i for i in zero if tags[i] != ZERO]
        i11 = [i for i in zero if tags[i] == ZERO]
        if i12:
            # inject small multipliers with the sign the regular cone allows
            size = 1.0 / k if d is None else (1.0 / k) / math.sqrt(ell) * min(1.0, float(np.linalg.norm(lam)))
            if size == 0.0:
                size = 1.0 / k
            for i in i12:
                s = -1 if tags[i] == NONPOS else 1
                lam[i] = s * size
                eps = eps + size * _a_subgradient(p, x, i, s)
            continue
        if i11:
            i0 = i11[0]
            Jp, _ = active_sets(p.gamma, yp)
            J1 = {j for j in Jp if yp[i0] == p.gamma.lo[j, i0]}
            J2 = {j for j in Jp if yp[i0] == p.gamma.hi[j, i0]}
            J3 = {j for j in Jp if p.gamma.lo[j, i0] < yp[i0] < p.gamma.hi[j, i0]}
            keep = (J1 - J2) | J3
            if not keep:
                raise VerificationRegressionError(f"k={k}: no box to move coordinate {i0} into")
            room = min(min(p.gamma.hi[j, i0] - yp[i0], 1.0) for j in keep)
            eta = 2.0 ** -k * room
            if d is not None and np.linalg.norm(delta) > 0:
                eta = min(eta, 2.0 ** -k * float(np.linalg.norm(delta)))
            yt = yp.copy()
            yt[i0] += eta
            delta = p.F.eval(x) - yt
            continue
    return AMRecord(r.k, x, lam, delta, eps, r.xi)


def refine_nonzero_multipliers(p, seq, xbar=None, d=None, tol=asy.DEFAULT_TOL):
    """Make ``lam_i`` nonzero on every endpoint coordinate, preserving verification."""
    if not p.orthodisjunctive:
        raise NotOrthodisjunctiveError("refinement needs an orthodisjunctive constraint set")
    d = seq.d if d is None else d
    xb = _base_point(p, seq, xbar)

    def check(s):
        if d is None:
            return verify_am_sequence(p, s, tol, xb)
        return verify_dir_am_sequence(p, s, d, tol, xb)

    before = check(seq)
    if not before.verdict.holds:
        raise MalformedSequenceError(f"input sequence does not verify: {before.verdict.reason}")
    dd = None if d is None else np.asarray(d, dtype=float)
    out = [_refine_record(p, r, xb, dd, r.k) for r in seq.records]
    refined = AMSequence(out, seq.xbar, seq.d, dict(seq.meta))
    after = check(refined)
    if not after.verdict.holds:
        raise VerificationRegressionError(f"refined sequence fails verification: {after.verdict.reason}")
    return refined


# ---------------------------------------------------------------- normalization

def tail_normalize(p, seq):
    """Keep the records sharing the last record's ``J``, ``I`` and sign pattern."""
    def key(r):
        J, I = index_sets(p, r.x, r.delta)
        return J, I, tuple(int(np.sign(v)) for v in r.lam)

    last = key(seq.records[-1])
    kept = [r for r in seq.records if key(r) == last]
    return AMSequence(kept, seq.xbar, seq.d, dict(seq.meta)), last
