"""Finite-sample stand-ins for limits along a sequence.

A quantity tends to zero when its tail is below ``tol`` or its log-log slope
against ``k`` is at most ``-slope``; it is bounded when the slope is at most
``slope``; it diverges when the slope is at least ``slope``.  Regression uses
the second half of the records.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_TOL = 1e-4
DEFAULT_SLOPE = 0.1
TINY = 1e-300


@dataclass(frozen=True)
class Trend:
    tail: float
    slope: float
    first: float

    def to_dict(self):
        return {"tail": self.tail, "slope": self.slope}


def _tail_indices(m):
    return slice(m // 2, m) if m >= 4 else slice(0, m)


def trend(values, ks=None):
    v = np.abs(np.asarray(values, dtype=float))
    m = len(v)
    if m == 0:
        return Trend(0.0, 0.0, 0.0)
    ks = np.arange(1, m + 1, dtype=float) if ks is None else np.asarray(ks, dtype=float)
    tail = float(v[-1])
    sl = _tail_indices(m)
    vv, kk = v[sl], ks[sl]
    if np.all(vv <= TINY) or len(vv) < 2:
        return Trend(tail, 0.0 if np.all(vv <= TINY) else float("nan"), float(v[0]))
    if np.any(vv <= TINY):
        # a vanishing entry in the tail: treat it as a drop to zero
        pos = vv > TINY
        if pos[-1]:
            vv, kk = vv[pos], kk[pos]
        else:
            return Trend(tail, -np.inf, float(v[0]))
        if len(vv) < 2:
            return Trend(tail, 0.0, float(v[0]))
    slope = float(np.polyfit(np.log(kk), np.log(vv), 1)[0])
    return Trend(tail, slope, float(v[0]))


def tends_to_zero(values, ks=None, tol=DEFAULT_TOL, slope=DEFAULT_SLOPE):
    t = trend(values, ks)
    return t.tail <= tol or t.slope <= -slope, t


def is_bounded(values, ks=None, slope=DEFAULT_SLOPE):
    t = trend(values, ks)
    return not (t.slope >= slope), t


def diverges(values, ks=None, slope=DEFAULT_SLOPE):
    t = trend(values, ks)
    return t.slope >= slope and t.tail > t.first, t


def alignment_residual(lam, delta):
    """``|lam/|lam| - delta/|delta||``, zero when either vector vanishes."""
    lam = np.asarray(lam, dtype=float)
    delta = np.asarray(delta, dtype=float)
    nl, nd = np.linalg.norm(lam), np.linalg.norm(delta)
    if nl == 0.0 or nd == 0.0:
        return 0.0
    return float(np.linalg.norm(lam / nl - delta / nd))
