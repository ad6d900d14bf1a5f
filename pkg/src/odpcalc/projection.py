"""Nearest feasible points by linearize-and-project iterations.

For a box ``[lo, hi]`` the step from ``z`` solves the linearized problem

    min |z + h - x|   s.t.   lo <= F(z) + J h <= hi

exactly, by trying every assignment of the finite bounds to "at lower",
"at upper" or "free" and keeping the best feasible one.  When the
linearization is inconsistent a least-squares step on the violation is
taken instead.  Results are local, so several starts are used; the
returned distance is an upper bound on the true one.
"""

from __future__ import annotations

import itertools

import numpy as np

from .orthogeom import OrthoSet

MAX_ITER = 200
STEP_TOL = 1e-15
ACCEPT_TOL = 1e-12
_LIN_TOL = 1e-12


def _box_violation(v, lo, hi):
    return float(np.linalg.norm(v - np.clip(v, lo, hi)))


def _qp_step(z, x, Fz, J, lo, hi):
    """Exact solution of the linearized projection, or None if inconsistent."""
    ell = len(Fz)
    options = []
    for i in range(ell):
        opts = [None]
        if np.isfinite(lo[i]):
            opts.append("lo")
        if np.isfinite(hi[i]) and hi[i] != lo[i]:
            opts.append("hi")
        if lo[i] == hi[i]:
            opts = ["lo"]
        options.append(opts)
    base = x - z
    best, best_val = None, np.inf
    for pattern in itertools.product(*options):
        rows = [i for i, o in enumerate(pattern) if o is not None]
        if rows:
            E = J[rows]
            r = np.array([(lo[i] if pattern[i] == "lo" else hi[i]) - Fz[i] for i in rows])
            h = base + np.linalg.pinv(E) @ (r - E @ base)
            if np.max(np.abs(E @ h - r)) > _LIN_TOL * (1.0 + np.max(np.abs(r))):
                continue
        else:
            h = base
        lin = Fz + J @ h
        # relative slack only: near a degenerate root the values themselves are tiny
        slack = _LIN_TOL * np.maximum(np.abs(Fz), np.abs(J) @ np.abs(h))
        # rows fixed by the pattern already passed the residual test above
        free = np.array([o is None for o in pattern], dtype=bool)
        if np.any((lin < lo - slack) & free) or np.any((lin > hi + slack) & free):
            continue
        val = float(np.linalg.norm(h - base))
        if val < best_val - 1e-15:
            best, best_val = h, val
    return best


def _refine_double_root(F, z, h, lo, hi):
    """Root of the violated component's slope along ``h`` beyond ``z``.

    Near a double root the values of ``F`` drown in rounding error while
    their slope does not, so the touching point is located as a zero of the
    directional derivative instead.
    """
    from scipy.optimize import brentq

    Fz = F.eval(z)
    viol = Fz - np.clip(Fz, lo, hi)
    i = int(np.argmax(np.abs(viol)))
    u = h / np.linalg.norm(h)

    def slope(s):
        return float(F.jacobian(z + s * u)[i] @ u)

    a, b = 0.0, 4.0 * float(np.linalg.norm(h))
    sa, sb = slope(a), slope(b)
    if sa == 0.0:
        return z
    if sa * sb > 0:
        return None
    return z + brentq(slope, a, b, xtol=1e-300, rtol=1e-15, maxiter=200) * u


def project_to_box(F, lo, hi, x, start):
    """Local nearest point to ``x`` of ``{z : lo <= F(z) <= hi}`` from ``start``; None on failure."""
    z = np.array(start, dtype=float)
    best = None
    prev = None
    linear = 0
    for _ in range(MAX_ITER):
        Fz, J = F.value_and_jacobian(z)
        viol = _box_violation(Fz, lo, hi)
        if best is None or viol < best[0]:
            best = (viol, z.copy())
        h = _qp_step(z, x, Fz, J, lo, hi)
        if h is None:
            h = -np.linalg.pinv(J) @ (Fz - np.clip(Fz, lo, hi))
        nh = float(np.linalg.norm(h))
        if nh <= STEP_TOL * (1.0 + np.linalg.norm(z)):
            break
        linear = linear + 1 if prev is not None and 0.3 <= nh / prev <= 0.7 else 0
        prev = nh
        if linear >= 3 and viol > 0.0:
            zr = _refine_double_root(F, z, h, lo, hi)
            if zr is not None and _box_violation(F.eval(zr), lo, hi) <= ACCEPT_TOL:
                return zr
        z = z + h
    Fz = F.eval(z)
    viol = _box_violation(Fz, lo, hi)
    if viol > ACCEPT_TOL and viol > best[0]:
        viol, z = best
    if viol <= ACCEPT_TOL:
        return z
    return None


def nearest_feasible(p, x, anchor=None, starts=3, seed=0):
    """``(distance, point)`` for the best local projection found; ``(inf, None)`` if none."""
    x = np.asarray(x, dtype=float)
    gamma = p.gamma
    if not isinstance(gamma, OrthoSet):
        raise TypeError("projection needs an orthodisjunctive constraint set")
    if gamma.distance(p.F.eval(x)) == 0.0:
        return 0.0, x.copy()
    rng = np.random.default_rng(seed)
    inits = [x]
    if anchor is not None:
        inits.append(np.asarray(anchor, dtype=float))
    scale = 1e-3 * (1.0 + np.linalg.norm(x - inits[-1]))
    for _ in range(max(0, starts - len(inits))):
        inits.append(x + scale * rng.standard_normal(len(x)))
    best = (np.inf, None)
    for j in range(gamma.nboxes):
        for s in inits:
            z = project_to_box(p.F, gamma.lo[j], gamma.hi[j], x, s)
            if z is None:
                continue
            dist = float(np.linalg.norm(z - x))
            if dist < best[0]:
                best = (dist, z)
    return best


def distance_to_feasible(p, x, anchor=None, starts=3, seed=0):
    return nearest_feasible(p, x, anchor, starts, seed)[0]
