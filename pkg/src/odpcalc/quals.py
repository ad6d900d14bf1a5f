"""Constraint-qualification verdicts.

NNAMCQ and FOSCMS are decided by the multiplier enumeration of
:mod:`stationarity` with the normalization ``sum |lam_i| = 1``.  The
tangent-cone based conditions and metric subregularity are sampled and
reported as evidence.  AM-regularity is only ever refuted, by a witness.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.optimize import nnls

from . import asymptotics as asy
from .amseq import _base_point, _check_dims, directional_trends, normal_residual
from .errors import MalformedSequenceError
from .orthogeom import (FEAS_TOL, DirNbhd, dir_limiting_normal_cone, dir_nbhd_sample,
                        limiting_normal_cone, tangent_cone)
from .projection import distance_to_feasible
from .pwexpr import exact_scalarized_subdiff
from .stationarity import (STAT_TOL, SubdiffCache, cone_sign_spaces, linearized_direction,
                           search_multipliers, sphere_grid, sum_rule_exact, unit_direction)
from .verdict import fails, holds, inconclusive


def _decide_abnormal(p, x, cone, d, tol, details):
    cache = SubdiffCache(p.F, x, d)
    zero = np.zeros(p.n)
    found = False
    for cand in search_multipliers(p.F, x, zero, cone_sign_spaces(cone), d, normalized=True,
                                   cache=cache, tol=tol):
        found = True
        if sum_rule_exact(p.F, cand.lam, cache) or \
                exact_scalarized_subdiff(p.F, cand.lam, x, d).distance(zero) <= tol:
            return fails(witness=cand.lam, certificate=cand.certificate,
                         reason="nonzero abnormal multiplier", details=details)
    if not found:
        return holds(details=details)
    return inconclusive("abnormal candidates exist for the sum-rule estimate but none replays exactly",
                        details=details)


def check_nnamcq(p, x, tol=STAT_TOL):
    """Holds when ``0 in d<lam, F>(x)`` with ``lam`` in the normal cone forces ``lam = 0``."""
    p.require_orthodisjunctive()
    x = p.require_feasible(x)
    y = p.gamma.snap(p.F.eval(x))
    cone = limiting_normal_cone(p.gamma, y)
    return _decide_abnormal(p, x, cone, None, tol, {"normal_cone": cone.to_list()})


def check_foscms(p, x, d, tol=STAT_TOL):
    """The directional counterpart of :func:`check_nnamcq`."""
    p.require_orthodisjunctive()
    x = p.require_feasible(x)
    d = unit_direction(d, p.n)
    w, T, in_T = linearized_direction(p, x, d)
    details = {"direction": d, "F_prime": w}
    if not in_T:
        return holds(reason="d not in linearization cone; the condition is void", details=details)
    cone = dir_limiting_normal_cone(p.gamma, p.gamma.snap(p.F.eval(x)), w)
    details["normal_cone"] = cone.to_list()
    return _decide_abnormal(p, x, cone, d, tol, details)


# ---------------------------------------------------------------- metric subregularity

def mscq_ratios(p, xbar, points):
    """Rows ``(x, |x - xbar|, dist(x, X), dist(F(x), Gamma), ratio)``; 0/0 rows are dropped."""
    rows = []
    for x in np.atleast_2d(points):
        viol = p.violation(x)
        dist = distance_to_feasible(p, x, anchor=xbar)
        if viol == 0.0:
            if dist == 0.0:
                continue
            ratio = math.inf
        else:
            ratio = dist / viol
        rows.append({"x": np.asarray(x, dtype=float), "radius": float(np.linalg.norm(x - xbar)),
                     "dist_X": dist, "dist_Gamma": viol, "ratio": ratio})
    return rows


def divergence_flag(rows, growth=10.0, slack=0.05):
    """Per-decade maxima of the ratio grow monotonically (up to ``slack``) by ``growth`` overall."""
    by_decade = {}
    for r in rows:
        if r["radius"] <= 0 or not math.isfinite(r["dist_X"]):
            continue
        dec = math.floor(math.log10(r["radius"]))
        by_decade[dec] = max(by_decade.get(dec, 0.0), r["ratio"])
    decades = sorted(by_decade, reverse=True)
    maxima = [by_decade[dd] for dd in decades]
    if len(maxima) < 2:
        return False, list(zip(decades, maxima))
    if any(math.isinf(m) for m in maxima):
        return True, list(zip(decades, maxima))
    monotone = all(b >= a * (1 - slack) for a, b in zip(maxima, maxima[1:]))
    return bool(monotone and maxima[-1] >= growth * maxima[0]), list(zip(decades, maxima))


def estimate_mscq(p, xbar, d=None, eps=0.1, delta=0.5, count=60, seed=0, points=None):
    """Ratios ``dist(x, X) / dist(F(x), Gamma)`` near ``xbar`` and a divergence flag.

    ``dist(x, X)`` comes from local projection and is an upper bound, so the
    result is evidence only.
    """
    p.require_orthodisjunctive()
    xbar = p.require_feasible(xbar)
    if points is None:
        if d is not None:
            d = unit_direction(d, p.n)
            points = dir_nbhd_sample(DirNbhd(tuple(xbar), tuple(d), eps, delta), count, seed)
        else:
            rng = np.random.default_rng(seed)
            g = rng.standard_normal((count, p.n))
            g /= np.linalg.norm(g, axis=1, keepdims=True)
            points = xbar + eps * 10.0 ** (-6.0 * rng.random((count, 1))) * g
    rows = mscq_ratios(p, xbar, points)
    flag, maxima = divergence_flag(rows)
    return {"rows": rows, "divergence": flag, "decade_maxima": maxima, "seed": seed,
            "evidence_only": True}


# ---------------------------------------------------------------- Abadie / Guignard

def _cone_rays(G, E, n, tol=1e-12):
    """Candidate extreme rays of ``{d : G d >= 0, E d = 0}`` from (n-1)-row subsystems."""
    rows = [g for g in G] + [e for e in E]
    out = []
    if n == 1:
        cands = [np.array([1.0]), np.array([-1.0])]
    else:
        cands = []
        for sub in itertools.combinations(range(len(rows)), n - 1):
            A = np.array([rows[i] for i in sub])
            _, s, vt = np.linalg.svd(A)
            if np.sum(s > tol) != n - 1:
                continue
            cands.extend([vt[-1], -vt[-1]])
    for c in cands:
        c = c / np.linalg.norm(c)
        if all(g @ c >= -1e-10 for g in G) and all(abs(e @ c) <= 1e-10 for e in E):
            out.append(c)
    return out


def _linearized_pieces(p, x):
    y = p.gamma.snap(p.F.eval(x))
    T = tangent_cone(p.gamma, y)
    out = []
    for rows, M in p.F.linear_pieces(x):
        for cell in T.cells:
            G = [np.asarray(r, dtype=float) for r in rows]
            E = []
            for i, t in enumerate(cell):
                if t == 0:
                    E.append(M[i])
                elif t == 1:
                    G.append(M[i])
                elif t == 2:
                    G.append(-M[i])
            out.append((np.array(G).reshape(-1, p.n), np.array(E).reshape(-1, p.n)))
    return out


def _in_cone(v, gens, tol=1e-6):
    if not len(gens):
        return False
    _, res = nnls(np.asarray(gens).T, v)
    return res <= tol


def check_gacq_ggcq(p, x, grid=None, seed=0, tested=24):
    """Compare the tangent cone of the feasible set with the linearized cone.

    Piecewise affine data make both cones coincide, so both conditions hold
    exactly.  Otherwise linearized directions are tested for tangency by
    sampling: a direction found outside the tangent cone refutes the Abadie
    condition, and Guignard is judged on the convex cone spanned by the
    directions found tangent.
    """
    p.require_orthodisjunctive()
    x = p.require_feasible(x)
    from .oracle import sample_tangent

    if p.F.is_piecewise_affine():
        v = holds(reason="piecewise affine data: tangent and linearized cones coincide")
        return {"gacq": v, "ggcq": v, "exact": True}
    D = sphere_grid(p.n, grid, seed)
    y = p.gamma.snap(p.F.eval(x))
    T = tangent_cone(p.gamma, y)
    lin = T.contains_batch(p.F.dir_derivative_batch(x, D), FEAS_TOL)
    lin_dirs = D[lin]
    step = max(1, len(lin_dirs) // tested)
    probe = list(lin_dirs[::step])
    for G, E in _linearized_pieces(p, x):
        probe.extend(_cone_rays(G, E, p.n))
    probe = np.array(probe).reshape(-1, p.n)
    results = [sample_tangent(p, x, dd, seed=seed) for dd in probe]
    inside = probe[[r == "in" for r in results]]
    outside = probe[[r == "out" for r in results]]
    unsure = sum(r == "borderline" for r in results)
    evidence = {"grid": len(D), "linearized": int(lin.sum()), "tested": len(probe),
                "tangent": len(inside), "not_tangent": len(outside), "borderline": unsure,
                "seed": seed}
    if len(outside):
        gacq = fails(witness=outside[0], reason="linearized direction is not tangent", details=evidence)
    elif unsure:
        gacq = inconclusive("some linearized directions are borderline", details=evidence)
    else:
        gacq = inconclusive("all tested linearized directions look tangent; sampling cannot certify",
                            details=evidence)
    spanned = [_in_cone(v, inside) for v in probe]
    if all(spanned):
        ggcq = holds(reason="tested linearized directions lie in the cone spanned by tangent ones",
                     details=evidence)
    elif unsure:
        ggcq = inconclusive("borderline tangency samples", details=evidence)
    else:
        bad = probe[spanned.index(False)]
        ggcq = fails(witness=bad, reason="linearized direction outside the convex hull of the tangent cone",
                     details=evidence)
    return {"gacq": gacq, "ggcq": ggcq, "exact": False}


# ---------------------------------------------------------------- AM-regularity

def falsify_am_regularity(p, xbar, seq, xi, mode="plain", d=None, tol=asy.DEFAULT_TOL,
                          slope=asy.DEFAULT_SLOPE):
    """Try to refute AM-regularity with the witness sequence ``seq`` and limit ``xi``.

    ``mode`` is ``"plain"``, ``"dir"`` or ``"strong"``.  The sequence must
    satisfy the defining relations; then ``xi`` is tested against the
    sum-rule outer estimate of the target set.  Being outside it refutes
    regularity; being inside proves nothing.
    """
    if mode not in ("plain", "dir", "strong"):
        raise ValueError("mode must be 'plain', 'dir' or 'strong'")
    p.require_orthodisjunctive()
    _check_dims(p, seq)
    xbar = p.require_feasible(_base_point(p, seq, xbar))
    xi = np.asarray(xi, dtype=float)
    problems = []
    for r in seq.records:
        if r.xi is None:
            raise MalformedSequenceError(f"record k={r.k} has no 'xi'")
        ok_n, _, _ = normal_residual(p, r.x, r.lam, r.delta)
        if not ok_n:
            problems.append(f"k={r.k}: multiplier not in the normal cone")
        dist = exact_scalarized_subdiff(p.F, r.lam, r.x).distance(r.xi)
        if dist > 1e-8 * (1 + np.linalg.norm(r.lam)):
            problems.append(f"k={r.k}: xi is not a subgradient (distance {dist:.3g})")
    ks = seq.ks
    checks = {}
    for name, vals in (("x_to_xbar", [np.linalg.norm(r.x - xbar) for r in seq.records]),
                       ("delta", [np.linalg.norm(r.delta) for r in seq.records]),
                       ("xi_to_limit", [np.linalg.norm(r.xi - xi) for r in seq.records])):
        ok, tr = asy.tends_to_zero(vals, ks, tol, slope)
        checks[name] = {"ok": bool(ok), "tail": tr.tail, "slope": tr.slope}
    ok, tr = asy.diverges([np.linalg.norm(r.lam) for r in seq.records], ks, slope)
    checks["lambda_diverges"] = {"ok": bool(ok), "tail": tr.tail, "slope": tr.slope}
    if mode != "plain":
        if d is None:
            raise ValueError("directional modes need a direction")
        d = unit_direction(d, p.n)
        for name, entry in directional_trends(seq, xbar, d, tol, slope).items():
            checks[name] = entry
    problems += [f"{k} fails" for k, v in checks.items() if not v["ok"]]
    details = {"mode": mode, "checks": checks, "xi": xi}
    if problems:
        return inconclusive("witness sequence does not satisfy the defining relations: " + problems[0],
                            details={**details, "problems": problems})
    y = p.gamma.snap(p.F.eval(xbar))
    if mode == "strong":
        w, _, in_T = linearized_direction(p, xbar, d)
        cone = dir_limiting_normal_cone(p.gamma, y, w)
        dd = d
    else:
        cone = limiting_normal_cone(p.gamma, y)
        dd = None
    cache = SubdiffCache(p.F, xbar, dd)
    for cand in search_multipliers(p.F, xbar, xi, cone_sign_spaces(cone), dd, cache=cache):
        return inconclusive("the limit lies in the (outer estimate of the) target set",
                            details={**details, "lambda": cand.lam})
    details["distance_to_target"] = target_distance(p, xbar, xi, cone, dd, cache)
    return fails(witness=xi, reason="limit of the witness sequence is outside the target set",
                 details=details)


def target_distance(p, x, v, cone, d, cache=None):
    """Distance from ``v`` to the union of cones spanned by the subdifferential branches."""
    cache = cache or SubdiffCache(p.F, x, d)
    best = math.inf
    for _, choices in cone_sign_spaces(cone):
        for signs in itertools.product(*choices):
            active = [i for i, s in enumerate(signs) if s != 0]
            sets = [cache.get(i, signs[i]) for i in active]
            if any(S.is_empty for S in sets):
                continue
            for choice in itertools.product(*(range(len(S)) for S in sets)):
                gens = [S.polytopes[c] for S, c in zip(sets, choice)]
                if not gens:
                    best = min(best, float(np.linalg.norm(v)))
                    continue
                A = np.vstack(gens).T
                _, res = nnls(A, v)
                best = min(best, float(res))
    return best
