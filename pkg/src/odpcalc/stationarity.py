"""M-stationarity checks via multiplier enumeration.

For every sign pattern admitted by the normal cone and every choice of one
polytope per involved component subdifferential, the system

    target = sum_i sum_j theta_ij v_ij,   theta >= 0

is a linear feasibility problem; ``|lam_i| = sum_j theta_ij``.  The sum rule
only gives an outer estimate of the scalarized subdifferential, so a
feasible candidate is accepted outright only when at most one involved
component is nonsmooth, and otherwise replayed on the combined expression.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidDirectionError
from .linprog import solve_lp
from .orthogeom import (FEAS_TOL, CellUnion, dir_limiting_normal_cone, limiting_normal_cone,
                        tag_sign_choices, tangent_cone)
from .pwexpr import dir_limiting_subdiff, exact_scalarized_subdiff, limiting_subdiff, nonsmooth_at
from .verdict import Certificate, fails, holds, inconclusive

STAT_TOL = 1e-9
UNIT_TOL = 1e-8


def unit_direction(d, n):
    d = np.atleast_1d(np.asarray(d, dtype=float))
    if d.shape != (n,):
        raise InvalidDirectionError(f"direction has {d.size} entries, expected {n}")
    nd = float(np.linalg.norm(d))
    if nd == 0.0:
        raise InvalidDirectionError("direction must be nonzero")
    if abs(nd - 1.0) > UNIT_TOL:
        raise InvalidDirectionError(f"direction must have unit length (norm is {nd:.12g})")
    return d


def cone_sign_spaces(cone):
    """Per-cell coordinate sign choices, in cell order."""
    return [(cell, tuple(tag_sign_choices(t) for t in cell)) for cell in cone.cells]


@dataclass
class Candidate:
    lam: np.ndarray
    label: tuple
    signs: tuple
    choice: tuple
    certificate: Certificate


class SubdiffCache:
    """Lazily computed ``d(s F_i)(x[;d])`` keyed by ``(i, s)``."""

    def __init__(self, F, x, d=None):
        self.F, self.x, self.d = F, np.asarray(x, dtype=float), d
        self._sets = {}
        self._kinked = {}

    def get(self, i, s):
        key = (i, s)
        if key not in self._sets:
            c = self.F[i]
            self._sets[key] = (limiting_subdiff(c, self.x, s) if self.d is None
                               else dir_limiting_subdiff(c, self.x, self.d, s))
        return self._sets[key]

    def nonsmooth(self, i):
        if i not in self._kinked:
            self._kinked[i] = nonsmooth_at(self.F[i], self.x, self.d)
        return self._kinked[i]


def search_multipliers(F, x, target, sign_spaces, d=None, normalized=False, cache=None,
                       tol=STAT_TOL):
    """Yield every feasible candidate, in lexicographic space/sign/branch order.

    ``sign_spaces`` is a list of ``(label, choices)`` with ``choices[i]`` a
    tuple drawn from ``(0, 1, -1)``.  With ``normalized`` the multipliers are
    scaled so that ``sum |lam_i| = 1`` (the all-zero sign vector is skipped).
    Each feasible problem is solved minimizing ``sum |lam_i|``.
    """
    n = F.n
    target = np.asarray(target, dtype=float)
    cache = cache or SubdiffCache(F, x, d)
    for label, choices in sign_spaces:
        for signs in itertools.product(*choices):
            active = [i for i, s in enumerate(signs) if s != 0]
            if normalized and not active:
                continue
            sets = [cache.get(i, signs[i]) for i in active]
            if any(S.is_empty for S in sets):
                continue
            for choice in itertools.product(*(range(len(S)) for S in sets)):
                polys = [S.polytopes[c] for S, c in zip(sets, choice)]
                cols = np.vstack(polys).T if polys else np.zeros((n, 0))
                m = cols.shape[1]
                A, b = cols, target
                if normalized:
                    A = np.vstack([cols, np.ones((1, m))])
                    b = np.concatenate([target, [1.0]])
                if m == 0:
                    if np.max(np.abs(target), initial=0.0) <= tol and not normalized:
                        lam = np.zeros(len(signs))
                        cert = Certificate(lam, label, tuple(((), ()) for _ in signs),
                                           float(np.max(np.abs(target), initial=0.0)),
                                           tuple(signs) + ())
                        yield Candidate(lam, label, signs, choice, cert)
                    continue
                res = solve_lp(A, b, np.ones(m), tol=tol)
                if not res.feasible:
                    continue
                theta = np.clip(res.x, 0.0, None)
                lam = np.zeros(len(signs))
                witnesses = [((), ()) for _ in signs]
                pos = 0
                for i, P in zip(active, polys):
                    w = theta[pos:pos + len(P)]
                    lam[i] = signs[i] * float(w.sum())
                    witnesses[i] = (P.copy(), w.copy())
                    pos += len(P)
                resid = float(np.max(np.abs(cols @ theta - target), initial=0.0))
                cert = Certificate(lam, label, tuple(witnesses), resid,
                                   tuple(int(s) for s in signs) + tuple(int(c) for c in choice))
                yield Candidate(lam, label, signs, choice, cert)


def sum_rule_exact(F, lam, cache):
    """True when at most one component in the support of ``lam`` is nonsmooth."""
    return sum(1 for i, li in enumerate(lam) if li != 0 and cache.nonsmooth(i)) <= 1


def replay(F, lam, x, target, d=None):
    """Distance from ``target`` to the exact subdifferential of ``<lam, F>``."""
    S = exact_scalarized_subdiff(F, lam, x, d)
    return S.distance(target)


def _decide_stationarity(p, x, target, cone, d, tol, details):
    cache = SubdiffCache(p.F, x, d)
    found = False
    for cand in search_multipliers(p.F, x, target, cone_sign_spaces(cone), d, cache=cache, tol=tol):
        found = True
        if sum_rule_exact(p.F, cand.lam, cache):
            return holds(certificate=cand.certificate, details=details)
        dist = replay(p.F, cand.lam, x, target, d)
        if dist <= tol:
            return holds(certificate=cand.certificate,
                         details={**details, "replayed": True, "replay_distance": dist})
    if not found:
        return fails(reason="no multiplier in the normal cone solves the stationarity system",
                     details=details)
    return inconclusive("the sum rule is strict here and no candidate multiplier survived the exact replay",
                        details=details)


def check_m_stationarity(p, x, tol=STAT_TOL):
    """Is ``-grad f(x)`` in ``d<lam, F>(x)`` for some ``lam`` in the limiting normal cone?"""
    p.require_orthodisjunctive()
    x = p.require_feasible(x)
    y = p.gamma.snap(p.F.eval(x))
    cone = limiting_normal_cone(p.gamma, y)
    details = {"point": x, "normal_cone": cone.to_list()}
    return _decide_stationarity(p, x, -p.grad_f(x), cone, None, tol, details)


def linearized_direction(p, x, d):
    """``(w, T, in_T)`` with ``w = F'(x; d)`` and ``T`` the tangent cone at ``F(x)``."""
    y = p.gamma.snap(p.F.eval(x))
    w = p.F.dir_derivative(x, d)
    T = tangent_cone(p.gamma, y)
    return w, T, T.contains(w, FEAS_TOL)


def check_dir_m_stationarity(p, x, d, tol=STAT_TOL):
    """M-stationarity with directional normal cone and subdifferentials along ``d``."""
    p.require_orthodisjunctive()
    x = p.require_feasible(x)
    d = unit_direction(d, p.n)
    y = p.gamma.snap(p.F.eval(x))
    w, T, in_T = linearized_direction(p, x, d)
    details = {"point": x, "direction": d, "F_prime": w}
    if not in_T:
        return fails(reason="d not in linearization cone", details=details)
    cone = dir_limiting_normal_cone(p.gamma, y, w)
    details["normal_cone"] = cone.to_list()
    return _decide_stationarity(p, x, -p.grad_f(x), cone, d, tol, details)


# ---------------------------------------------------------------- critical cones

def critical_cone_membership(p, x, d, tol=STAT_TOL, seed=0):
    """Membership of ``d`` in the explicit, linearized and implicit critical cones."""
    from .oracle import sample_tangent

    p.require_orthodisjunctive()
    x = p.require_feasible(x)
    d = np.atleast_1d(np.asarray(d, dtype=float))
    descent = float(p.grad_f(x) @ d) <= tol
    _, _, in_T = linearized_direction(p, x, d)
    tangent = sample_tangent(p, x, d, seed=seed)
    implicit = {"in": "Holds", "out": "Fails", "borderline": "Inconclusive"}[tangent]
    if not descent:
        implicit = "Fails"
    return {"in_explicit": bool(descent and in_T), "in_linearization": bool(in_T),
            "in_implicit": implicit}


def sphere_grid(n, count=None, seed=0):
    """Deterministic near-uniform unit directions (circle grid, Fibonacci sphere, or Gaussian)."""
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        m = count or 3600
        t = 2.0 * math.pi * np.arange(m) / m
        return np.column_stack([np.cos(t), np.sin(t)])
    m = count or 10_000
    if n == 3:
        i = np.arange(m) + 0.5
        z = 1.0 - 2.0 * i / m
        r = np.sqrt(1.0 - z * z)
        phi = math.pi * (3.0 - math.sqrt(5.0)) * i
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    g = np.random.default_rng(seed).standard_normal((m, n))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def explicit_critical_batch(p, x, D, tol=STAT_TOL):
    D = np.atleast_2d(D)
    y = p.gamma.snap(p.F.eval(x))
    T = tangent_cone(p.gamma, y)
    W = p.F.dir_derivative_batch(x, D)
    return (D @ p.grad_f(x) <= tol) & T.contains_batch(W, FEAS_TOL)


def _nonzero_in_cone(G, E, n, tol):
    """A nonzero ``d`` with ``G d >= 0`` and ``E d = 0``, or None."""
    G = np.asarray(G, dtype=float).reshape(-1, n)
    E = np.asarray(E, dtype=float).reshape(-1, n)
    ng, ne = len(G), len(E)
    for i in range(n):
        for s in (1.0, -1.0):
            # variables d+ (n), d- (n), slack (ng)
            A = np.zeros((ng + ne + 1, 2 * n + ng))
            A[:ng, :n], A[:ng, n:2 * n] = G, -G
            A[:ng, 2 * n:] = -np.eye(ng)
            A[ng:ng + ne, :n], A[ng:ng + ne, n:2 * n] = E, -E
            A[-1, i], A[-1, n + i] = 1.0, -1.0
            b = np.zeros(ng + ne + 1)
            b[-1] = s
            res = solve_lp(A, b, tol=tol)
            if res.feasible:
                z = res.x
                return z[:n] - z[n:2 * n]
    return None


def critical_cone_pieces(p, x):
    """The explicit critical cone as a list of polyhedral cones ``(G, E)``."""
    y = p.gamma.snap(p.F.eval(x))
    T = tangent_cone(p.gamma, y)
    g = p.grad_f(x)
    out = []
    for rows, M in p.F.linear_pieces(x):
        for cell in T.cells:
            G = [np.asarray(r, dtype=float) for r in rows] + [-g]
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


def strict_local_min_by_trivial_cone(p, x, tol=STAT_TOL, grid=None):
    """Holds when the explicit critical cone is ``{0}``, which forces a strict local minimum."""
    p.require_orthodisjunctive()
    x = p.require_feasible(x)
    for G, E in critical_cone_pieces(p, x):
        d = _nonzero_in_cone(G, E, p.n, tol)
        if d is not None:
            d = d / np.linalg.norm(d)
            return fails(witness=d, reason="nonzero critical direction",
                         details={"direction": d})
    D = sphere_grid(p.n, grid)
    hits = explicit_critical_batch(p, x, D, 1e-12)
    if np.any(hits):
        return inconclusive("grid direction looks critical although the exact test found none",
                            witness=D[int(np.argmax(hits))])
    return holds(details={"grid_size": len(D)})
