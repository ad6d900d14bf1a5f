"""End-to-end acceptance criteria, each timed against its runtime bound.

Every criterion prints one PASS/FAIL line; run with ``python3 tests/test_acceptance.py``
for the lines alone.
"""

import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gen import grid_direction, random_expr, random_orthoset, richardson_slope  # noqa: E402
from odpcalc import asymptotics as asy  # noqa: E402
from odpcalc.amseq import generate_am_sequence, verify_am_sequence, verify_dir_am_sequence  # noqa: E402
from odpcalc.corpus import corpus_manifest, load_corpus_problem, load_corpus_sequence  # noqa: E402
from odpcalc.errors import BoundednessViolationError  # noqa: E402
from odpcalc.oracle import (sample_dir_limiting_normals, sample_limiting_normals,  # noqa: E402
                            sample_subdiff)
from odpcalc.orthogeom import dir_limiting_normal_cone, limiting_normal_cone  # noqa: E402
from odpcalc.polytope import PolyUnion  # noqa: E402
from odpcalc.pwexpr import (dir_derivative, dir_limiting_subdiff, evaluate,  # noqa: E402
                            limiting_subdiff)
from odpcalc.quals import (check_foscms, check_gacq_ggcq, check_nnamcq, divergence_flag,  # noqa: E402
                           estimate_mscq, falsify_am_regularity, mscq_ratios)
from odpcalc.stationarity import (check_dir_m_stationarity, check_m_stationarity, replay,  # noqa: E402
                                  sphere_grid)
from odpcalc.submfc import (check_odp_submfc, check_odp_submfc_dir, cluster_multiplier,  # noqa: E402
                            submfc_consequence)

R2 = 1 / math.sqrt(2)
P = load_corpus_problem
S = load_corpus_sequence


class Checks:
    """Collects named sub-checks so a FAIL line says which one broke."""

    def __init__(self):
        self.failed = []

    def __call__(self, name, ok):
        if not ok:
            self.failed.append(name)
        return ok


def criterion_1(c):
    p = P("ggcq_without_mscq")
    v = check_dir_m_stationarity(p, [0.0, 0.0], [0.0, 1.0])
    lam = v.certificate.lam if v.holds else np.zeros(3)
    c("dir M-stationarity holds", v.holds)
    c("lambda proportional to (1,0,0)", lam[0] > 0 and lam[1] == 0 and lam[2] == 0)
    c("residual", v.holds and v.certificate.residual <= 1e-9)
    ks = np.arange(1, 101)
    rows = mscq_ratios(p, np.zeros(2), np.column_stack([1.0 / ks ** 2, 1.0 / ks]))
    c("ratios equal k", len(rows) == 100 and
      max(abs(r["ratio"] - k) for r, k in zip(rows, ks)) <= 1e-9)
    c("divergence flag", divergence_flag(rows)[0])
    c("GGCQ holds", check_gacq_ggcq(p, [0.0, 0.0])["ggcq"].holds)


def criterion_2(c):
    v = check_m_stationarity(P("how_to_apply"), [0.0])
    c("how_to_apply holds with lambda = -1", v.holds and v.certificate.lam.tolist() == [-1.0])
    c("sum of squares fails", check_m_stationarity(P("akkt_example"), [0.0, 0.0]).fails)


def criterion_3(c):
    p = P("akkt_example")
    d = np.array([-R2, -R2])
    seq = S("akkt_dir")
    rep = verify_dir_am_sequence(p, seq, d, tol=1e-4)
    c("bundled K=50", len(seq) == 50)
    c("bundled sequence verifies", rep.verdict.holds)
    c("four directional conditions", all(rep.trends[k]["ok"] for k in
                                         ("secant_to_d", "delta_over_dist", "alignment", "growth_bounded")))
    gen = generate_am_sequence(p, [0.0, 0.0], K=50, d=d)
    c("generated sequence verifies", verify_am_sequence(p, gen).verdict.holds)
    c("exact alignment", all(asy.alignment_residual(r.lam, r.delta) == 0.0 for r in gen))


def criterion_4(c):
    p = P("mscq_not_enough")
    v = check_nnamcq(p, [0.0, 0.0])
    c("NNAMCQ fails", v.fails)
    c("nonzero witness", v.fails and np.any(np.asarray(v.witness) != 0))
    c("sequence directional", verify_dir_am_sequence(p, S("mscq_not_enough_dir"), [0.0, -1.0]).verdict.holds)
    c("MSCQ evidence bounded", not estimate_mscq(p, [0.0, 0.0])["divergence"])


def criterion_5(c):
    p = P("dirmscq_without_ggcq")
    r = check_gacq_ggcq(p, [0.0, 0.0], grid=3600)
    c("GACQ fails", r["gacq"].fails)
    c("GGCQ fails", r["ggcq"].fails)
    c("FOSCMS((1,1)/sqrt2) holds", check_foscms(p, [0.0, 0.0], [R2, R2]).holds)
    d = np.array([R2, R2])
    g1 = dir_limiting_subdiff(p.F[0], [0.0, 0.0], d)
    g2 = dir_limiting_subdiff(p.F[1], [0.0, 0.0], d)
    c("generators", g1.approx_equal(PolyUnion.point([1.0, -1.0]), 1e-9) and
      g2.approx_equal(PolyUnion.point([-1.0, 1.0]), 1e-9))


def criterion_6(c):
    p = P("normal_but_not_dir")
    c("subMFC holds on I = {1,2}", check_odp_submfc(p, None, S("normal_not_dir"), I=(0, 1)).holds)
    d = np.array([-2.0, -1.0, 0.0]) / math.sqrt(5)
    c("dir M-stationarity fails", check_dir_m_stationarity(p, [1.0, 0.0, 0.0], d).fails)


def criterion_7(c):
    p = P("dir_but_not_normal")
    v = check_odp_submfc(p, None, S("dir_not_normal_plus"))
    c("subMFC fails with u = (1,1)", v.fails and np.allclose(v.witness, [1.0, 1.0]))
    for sign, name in ((1, "dir_not_normal_plus"), (-1, "dir_not_normal_minus")):
        d = sign * np.array([R2, R2])
        seq = S(name)
        c(f"subMFC(d) holds for {name}", check_odp_submfc_dir(p, None, d, seq).holds)
        r = submfc_consequence(p, None, seq, d=d)
        c(f"replay with zero multiplier for {name}",
          r.holds and np.array_equal(r.details["cluster"], [0.0, 0.0]))


def criterion_8(c):
    p = P("odp_cubic")
    xbar = np.array([-2.0, 1.0])
    seq = S("odp_cubic_dir")
    c("subMFC holds, I empty", check_odp_submfc(p, None, seq, I=()).holds)
    c("subMFC(d) holds, I empty", check_odp_submfc_dir(p, None, [R2, R2], seq, I=()).holds)
    taus = 10.0 ** -np.arange(1.0, 5.01, 0.5)
    rows = mscq_ratios(p, xbar, xbar + np.outer(taus, [1.0, 1.0]))
    c("ratio ladder", len(rows) == len(taus) and all(
        abs(r["ratio"] / (t / (t ** 3 + 3 * t ** 2)) - 1.0) <= 1e-6 for r, t in zip(rows, taus)))
    c("divergence flag", divergence_flag(rows)[0])
    v = falsify_am_regularity(p, None, S("odp_amreg_witness"), [0.0, 6.0])
    c("AM-regularity refuted", v.fails)
    c("distance 6", v.fails and abs(v.details["distance_to_target"] - 6.0) <= 1e-9)


def criterion_9(c):
    bad_cones = 0
    for seed in range(200):
        rng = np.random.default_rng(seed)
        G = random_orthoset(rng)
        y = np.zeros(G.dim)
        w = rng.integers(-1, 2, size=G.dim).astype(float)
        if limiting_normal_cone(G, y) != sample_limiting_normals(G, y, grid=300, seed=seed):
            bad_cones += 1
        elif dir_limiting_normal_cone(G, y, w) != sample_dir_limiting_normals(G, y, w, grid=300, seed=seed):
            bad_cones += 1
    c(f"normal cones ({bad_cones} mismatches)", bad_cones == 0)
    bad_dd = bad_sub = 0
    for seed in range(1000):
        rng = np.random.default_rng(10_000 + seed)
        n = int(rng.integers(1, 4))
        e = random_expr(rng, n)
        x = np.zeros(n)
        d = grid_direction(rng, n)
        dd = dir_derivative(e, x, d)
        fd = richardson_slope(lambda z: evaluate(e, z), x, d)
        if abs(dd - fd) > 1e-5 * max(1.0, abs(dd)):
            bad_dd += 1
        _, clusters = sample_subdiff(e, x, grid=100, radii=(1e-6,), seed=seed)
        if clusters.directed_hausdorff(limiting_subdiff(e, x)) > 1e-3:
            bad_sub += 1
    c(f"directional derivatives ({bad_dd} mismatches)", bad_dd == 0)
    c(f"subdifferential clusters ({bad_sub} outside)", bad_sub == 0)


def _directions(n):
    return sphere_grid(n, 72 if n == 2 else 200)


def criterion_10(c):
    entries = [e for e in corpus_manifest() if not e["oracle_only"]]
    violations = []
    for e in entries:
        p = P(e["name"])
        x = np.array(e["xbar"], dtype=float)
        nnamcq = check_nnamcq(p, x).holds
        for d in _directions(p.n):
            if nnamcq and not check_foscms(p, x, d).holds:
                violations.append(f"{e['name']}: NNAMCQ without FOSCMS({d})")
            v = check_dir_m_stationarity(p, x, d)
            if v.holds:
                lam = v.certificate.lam
                y = p.gamma.snap(p.F.eval(x))
                if not (limiting_normal_cone(p.gamma, y).contains(lam, 1e-12) and
                        replay(p.F, lam, x, -p.grad_f(x)) <= 1e-9):
                    violations.append(f"{e['name']}: directional multiplier does not replay at {d}")
        for name in e["sequences"]:
            seq = S(name)
            if seq.records[0].eps is None:
                continue
            v = check_odp_submfc(p, None, seq) if seq.d is None else check_odp_submfc_dir(p, None, seq.d, seq)
            if v.holds and not submfc_consequence(p, None, seq, d=seq.d).holds:
                violations.append(f"{name}: subMFC without stationarity")
            if seq.d is None or not verify_dir_am_sequence(p, seq, seq.d).verdict.holds:
                continue
            try:
                cluster_multiplier(seq)
            except BoundednessViolationError:
                continue
            if not check_dir_m_stationarity(p, seq.xbar, seq.d).holds:
                violations.append(f"{name}: bounded verified sequence without dir M-stationarity")
    c(f"implications ({len(violations)} violations: {violations[:2]})", not violations)


CRITERIA = [
    (1, criterion_1, 2.0), (2, criterion_2, 1.0), (3, criterion_3, 5.0), (4, criterion_4, 2.0),
    (5, criterion_5, 3.0), (6, criterion_6, 2.0), (7, criterion_7, 2.0), (8, criterion_8, 3.0),
    (9, criterion_9, 60.0), (10, criterion_10, 10.0),
]


def run_criterion(num, fn, bound):
    c = Checks()
    t0 = time.perf_counter()
    fn(c)
    elapsed = time.perf_counter() - t0
    if elapsed >= bound:
        c.failed.append(f"runtime {elapsed:.2f} s >= {bound:.0f} s")
    status = "PASS" if not c.failed else "FAIL"
    line = f"criterion {num:2d}: {status} ({elapsed:.2f} s, bound {bound:.0f} s)"
    if c.failed:
        line += " failed: " + "; ".join(c.failed)
    return not c.failed, line


@pytest.mark.parametrize("num, fn, bound", CRITERIA, ids=[f"criterion_{n}" for n, _, _ in CRITERIA])
def test_criterion(num, fn, bound, capsys):
    ok, line = run_criterion(num, fn, bound)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [run_criterion(*args) for args in CRITERIA]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
