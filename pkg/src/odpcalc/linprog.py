"""Dense two-phase simplex for the tiny feasibility problems in this package.

Solves ``min c.z  s.t.  A z = b, z >= 0`` with Bland's rule.  When every input
entry is a short dyadic rational (the usual case for hand-made examples) the
tableau is carried in exact :class:`fractions.Fraction` arithmetic; otherwise
floats are used with an absolute pivot tolerance.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kernels

FLOAT_TOL = 1e-9
_MAX_DENOMINATOR = 2 ** 20


@dataclass
class LPResult:
    status: str  # "optimal", "infeasible" or "unbounded"
    x: np.ndarray | None = None
    value: float | None = None
    exact: bool = False

    @property
    def feasible(self):
        return self.status != "infeasible"


def _is_simple(v):
    v = float(v)
    if not np.isfinite(v):
        return False
    return Fraction(v).denominator <= _MAX_DENOMINATOR


def wants_exact(*arrays):
    for arr in arrays:
        if arr is None:
            continue
        for v in np.asarray(arr, dtype=float).ravel():
            if not _is_simple(v):
                return False
    return True


def _to_fraction_array(arr):
    arr = np.asarray(arr, dtype=float)
    out = np.empty(arr.shape, dtype=object)
    for idx, v in np.ndenumerate(arr):
        out[idx] = Fraction(float(v))
    return out


def _pivot(T, r, c, exact):
    if exact:
        T[r] = T[r] / T[r, c]
        col = T[:, c].copy()
        col[r] = 0
        T -= np.outer(col, T[r])
    else:
        kernels.pivot(T, r, c)


def _run(T, basis, ncols, tol, exact, max_iter):
    """Simplex iterations on tableau ``T`` whose last row holds reduced costs."""
    m = T.shape[0] - 1
    for _ in range(max_iter):
        enter = -1
        for j in range(ncols):
            if T[m, j] < -tol:
                enter = j
                break
        if enter < 0:
            return "optimal"
        cands = []
        for i in range(m):
            a = T[i, enter]
            if a > tol:
                cands.append((T[i, -1] / a, i))
        if not cands:
            return "unbounded"
        best = min(r for r, _ in cands)
        slack = 0 if exact else tol * 1e-3
        leave = min((i for r, i in cands if r <= best + slack), key=lambda i: basis[i])
        _pivot(T, leave, enter, exact)
        basis[leave] = enter
    raise RuntimeError("simplex iteration limit reached")


def solve_lp(A, b, c=None, exact=None, tol=FLOAT_TOL, max_iter=5000):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    m, n = A.shape
    if c is None:
        c = np.zeros(n)
    c = np.asarray(c, dtype=float).ravel()
    if exact is None:
        exact = m * n <= 600 and wants_exact(A, b, c)
    if m == 0:
        if np.any(c < -tol):
            return LPResult("unbounded", exact=exact)
        return LPResult("optimal", np.zeros(n), 0.0, exact)
    if exact:
        Af, bf, cf = _to_fraction_array(A), _to_fraction_array(b), _to_fraction_array(c)
        zero, one, tol = Fraction(0), Fraction(1), Fraction(0)
        T = np.empty((m + 1, n + m + 1), dtype=object)
        T[:] = zero
    else:
        Af, bf, cf = A.copy(), b.copy(), c.copy()
        zero, one = 0.0, 1.0
        T = np.zeros((m + 1, n + m + 1))
    for i in range(m):
        if bf[i] < 0:
            Af[i] = -Af[i]
            bf[i] = -bf[i]
    T[:m, :n] = Af
    for i in range(m):
        T[i, n + i] = one
    T[:m, -1] = bf
    T[m, :n] = -Af.sum(axis=0)
    T[m, -1] = -bf.sum()
    basis = list(range(n, n + m))
    _run(T, basis, n + m, tol, exact, max_iter)
    infeas = -T[m, -1]
    if (exact and infeas != 0) or (not exact and infeas > tol * (1.0 + float(np.abs(b).sum()))):
        return LPResult("infeasible", exact=exact)
    # drive artificial variables out of the basis, dropping redundant rows
    keep_rows = []
    for i in range(m):
        if basis[i] >= n:
            for j in range(n):
                if (T[i, j] != 0) if exact else abs(T[i, j]) > tol:
                    _pivot(T, i, j, exact)
                    basis[i] = j
                    break
        if basis[i] < n:
            keep_rows.append(i)
    rows = keep_rows + [m]
    T2 = T[np.ix_(rows, list(range(n)) + [n + m])].copy()
    if not exact:
        T2 = np.ascontiguousarray(T2)
    basis = [basis[i] for i in keep_rows]
    k = len(keep_rows)
    T2[k, :] = zero
    T2[k, :n] = cf
    for i, bi in enumerate(basis):
        coef = cf[bi]
        if coef != 0:
            T2[k] = T2[k] - coef * T2[i]
    status = _run(T2, basis, n, tol, exact, max_iter)
    if status == "unbounded":
        return LPResult("unbounded", exact=exact)
    x = np.zeros(n, dtype=object if exact else float)
    x[:] = zero
    for i, bi in enumerate(basis):
        x[bi] = T2[i, -1]
    value = -T2[k, -1]
    return LPResult("optimal", np.array([float(v) for v in x]), float(value), exact)


def find_nonneg(A, b, c=None, exact=None, tol=FLOAT_TOL):
    """Return a vertex solution of ``A z = b, z >= 0`` (minimizing ``c.z``) or None."""
    res = solve_lp(A, b, c, exact=exact, tol=tol)
    if res.status == "infeasible":
        return None
    if res.status == "unbounded":
        res = solve_lp(A, b, None, exact=exact, tol=tol)
    return res.x
