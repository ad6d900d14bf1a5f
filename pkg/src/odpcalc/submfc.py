"""Subset Mangasarian-Fromovitz type conditions for box-union constraints.

The condition needs an approximately stationary sequence whose endpoint
index set ``I`` is stable, and asks that no nonnegative ``u`` supported on
``I`` with ``sum u = 1`` gives ``0 in sum u_i d(sgn(lam_i) F_i)(xbar)``.
"""

from __future__ import annotations

import numpy as np

from . import asymptotics as asy
from .amseq import (_base_point, tail_normalize, verify_am_sequence, verify_dir_am_sequence)
from .errors import BoundednessViolationError, DirectionNotCriticalError
from .orthogeom import FREE, NONNEG, NONPOS, ZERO, dir_limiting_normal_cone, limiting_normal_cone
from .stationarity import (STAT_TOL, SubdiffCache, check_dir_m_stationarity, check_m_stationarity,
                           linearized_direction, replay, search_multipliers, unit_direction)
from .verdict import fails, holds, inconclusive


def _sign_space(I, signs, ell):
    choices, cell = [], []
    for i in range(ell):
        if i not in I:
            choices.append((0,))
            cell.append(ZERO)
        elif signs[i] == 0:
            choices.append((1, -1))
            cell.append(FREE)
        else:
            choices.append((int(signs[i]),))
            cell.append(NONNEG if signs[i] > 0 else NONPOS)
    return [(tuple(cell), tuple(choices))]


def _check(p, xbar, seq, I, d, tol, seq_tol):
    p.require_orthodisjunctive()
    xbar = p.require_feasible(_base_point(p, seq, xbar))
    tail, (J, I_seq, signs) = tail_normalize(p, seq)
    if I is None:
        I = I_seq
    I = tuple(sorted(int(i) for i in I))
    if any(i < 0 or i >= p.ell for i in I):
        raise ValueError(f"index set {list(I)} out of range for {p.ell} components")
    if d is None:
        report = verify_am_sequence(p, tail, seq_tol, xbar)
    else:
        report = verify_dir_am_sequence(p, tail, d, seq_tol, xbar)
    details = {"I": list(I), "I_sequence": list(I_seq), "J": list(J), "signs": list(signs),
               "tail_length": len(tail), "sequence": report.verdict.status.value}
    if d is not None:
        details["direction"] = d
    if I:
        cands = search_multipliers(p.F, xbar, np.zeros(p.n), _sign_space(I, signs, p.ell), d,
                                   normalized=True, tol=tol)
        for cand in cands:
            u = np.abs(cand.lam)
            u = u / u.max()
            return fails(witness=u, certificate=cand.certificate,
                         reason="nonzero u on I with a zero combination of subgradients",
                         details=details)
    if not report.verdict.holds:
        return inconclusive("no degenerate combination, but the sequence does not verify: "
                            + report.verdict.reason, details=details)
    return holds(details=details)


def check_odp_submfc(p, xbar, seq, I=None, tol=STAT_TOL, seq_tol=asy.DEFAULT_TOL):
    return _check(p, xbar, seq, I, None, tol, seq_tol)


def check_odp_submfc_dir(p, xbar, d, seq, I=None, tol=STAT_TOL, seq_tol=asy.DEFAULT_TOL):
    p.require_orthodisjunctive()
    x = p.require_feasible(_base_point(p, seq, xbar))
    d = unit_direction(d, p.n)
    _, _, in_T = linearized_direction(p, x, d)
    if not in_T or float(p.grad_f(x) @ d) > tol:
        raise DirectionNotCriticalError("direction is not in the explicit critical cone")
    return _check(p, x, seq, I, d, tol, seq_tol)


def cluster_multiplier(seq, tol=asy.DEFAULT_TOL, slope=asy.DEFAULT_SLOPE):
    """Limit guess for the multipliers: vanishing components become 0, others keep the last value."""
    L = seq.column("lam")
    ks = seq.ks
    bounded, tr = asy.is_bounded(np.linalg.norm(L, axis=1), ks, slope)
    if not bounded:
        raise BoundednessViolationError(f"multipliers grow (log-log slope {tr.slope:.3g})")
    lam = L[-1].copy()
    for i in range(L.shape[1]):
        if asy.tends_to_zero(L[:, i], ks, tol, slope)[0]:
            lam[i] = 0.0
    return lam


def submfc_consequence(p, xbar, seq, d=None, tol=1e-8):
    """Replay stationarity at ``xbar`` with the multiplier limit of a verified sequence."""
    p.require_orthodisjunctive()
    xbar = p.require_feasible(_base_point(p, seq, xbar))
    tail, _ = tail_normalize(p, seq)
    lam = cluster_multiplier(tail)
    target = -p.grad_f(xbar)
    y = p.gamma.snap(p.F.eval(xbar))
    if d is None:
        cone = limiting_normal_cone(p.gamma, y)
    else:
        d = unit_direction(d, p.n)
        w, _, in_T = linearized_direction(p, xbar, d)
        cone = dir_limiting_normal_cone(p.gamma, y, w)
    details = {"cluster": lam}
    if cone.contains(lam, tol):
        dist = replay(p.F, lam, xbar, target, d)
        if dist <= tol:
            return holds(details={**details, "replay_distance": dist, "search": False})
    v = check_m_stationarity(p, xbar, tol) if d is None else check_dir_m_stationarity(p, xbar, d, tol)
    details["search"] = True
    return type(v)(v.status, v.certificate, v.witness, v.reason, {**v.details, **details})
