"""Geometry of finite unions of boxes.

Cones to such sets are finite unions of sign cells: products whose factors
are one of ``{0}``, ``R+``, ``R-`` or ``R``.  Factors are encoded as two-bit
tags so that intersection is bitwise AND and containment is a mask test.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasiblePointError, SchemaError
from .kernels import box_distances

ZERO, NONNEG, NONPOS, FREE = 0, 1, 2, 3
TAG_NAMES = {ZERO: "Zero", NONNEG: "NonNeg", NONPOS: "NonPos", FREE: "Free"}
TAG_SYMBOLS = {ZERO: "0", NONNEG: "R+", NONPOS: "R-", FREE: "R"}
_TAG_FROM_NAME = {v.lower(): k for k, v in TAG_NAMES.items()}
_TAG_FROM_NAME.update({"0": ZERO, "r+": NONNEG, "r-": NONPOS, "r": FREE})

FEAS_TOL = 1e-10


# ---------------------------------------------------------------- sign cells

def tag_polar(t):
    return 3 - t


def tag_subset(a, b):
    return a & ~b & 3 == 0


def cell_subset(a, b):
    return all(tag_subset(x, y) for x, y in zip(a, b))


def cell_meet(a, b):
    return tuple(x & y for x, y in zip(a, b))


def cell_polar(cell):
    return tuple(tag_polar(t) for t in cell)


def cell_contains(cell, v, tol=0.0):
    for t, vi in zip(cell, v):
        if t == ZERO and abs(vi) > tol:
            return False
        if t == NONNEG and vi < -tol:
            return False
        if t == NONPOS and vi > tol:
            return False
    return True


def cell_str(cell):
    return "x".join(TAG_SYMBOLS[t] for t in cell) if len(cell) else "()"


def parse_cell(text):
    parts = [p.strip().lower() for p in text.replace("×", "x").split("x")]
    try:
        return tuple(_TAG_FROM_NAME[p] for p in parts)
    except KeyError as exc:
        raise SchemaError(f"unknown sign tag {exc.args[0]!r}") from None


def tag_sign_choices(t):
    """Signs a coordinate with tag ``t`` may take: subsets of ``(0, 1, -1)``."""
    return {ZERO: (0,), NONNEG: (1,), NONPOS: (-1,), FREE: (1, -1)}[t]


class CellUnion:
    """Canonical finite union of sign cells (no cell inside another)."""

    __slots__ = ("cells", "dim")

    def __init__(self, cells, dim=None):
        cells = [tuple(int(t) for t in c) for c in cells]
        if dim is None:
            if not cells:
                raise ValueError("dimension required for an empty CellUnion")
            dim = len(cells[0])
        self.dim = int(dim)
        uniq = sorted(set(cells))
        keep = [c for c in uniq
                if not any(d != c and cell_subset(c, d) for d in uniq)]
        self.cells = tuple(sorted(keep, key=lambda c: (-sum(bin(t).count("1") for t in c), c)))

    @classmethod
    def empty(cls, dim):
        return cls([], dim)

    @property
    def is_empty(self):
        return not self.cells

    def __iter__(self):
        return iter(self.cells)

    def __len__(self):
        return len(self.cells)

    def __eq__(self, other):
        return isinstance(other, CellUnion) and self.dim == other.dim and set(self.cells) == set(other.cells)

    def __hash__(self):
        return hash((self.dim, frozenset(self.cells)))

    def __repr__(self):
        return "CellUnion{" + ", ".join(cell_str(c) for c in self.cells) + "}"

    def contains(self, v, tol=0.0):
        return any(cell_contains(c, v, tol) for c in self.cells)

    def contains_batch(self, W, tol=0.0):
        W = np.atleast_2d(np.asarray(W, dtype=float))
        out = np.zeros(len(W), dtype=bool)
        for c in self.cells:
            ok = np.ones(len(W), dtype=bool)
            for i, t in enumerate(c):
                col = W[:, i]
                if t == ZERO:
                    ok &= np.abs(col) <= tol
                elif t == NONNEG:
                    ok &= col >= -tol
                elif t == NONPOS:
                    ok &= col <= tol
            out |= ok
        return out

    def union(self, other):
        return CellUnion(self.cells + other.cells, self.dim)

    def is_subset(self, other):
        return all(any(cell_subset(c, d) for d in other.cells) for c in self.cells)

    def polar(self):
        if len(self.cells) != 1:
            raise ValueError("polar is only defined here for a single cell")
        return CellUnion([cell_polar(self.cells[0])], self.dim)

    def meet(self, other):
        return CellUnion([cell_meet(a, b) for a in self.cells for b in other.cells], self.dim)

    def intersect_with_hyperplane(self, w, tol=0.0):
        """Intersection with ``{v : v.w = 0}``, cell by cell.

        Exact when every cell is sign-compatible with ``w`` (``v.w <= 0``
        throughout the cell, as for normal cones at a point in direction of
        a tangent ``w``); other cells raise ``ValueError``.
        """
        out = []
        for c in self.cells:
            if not _sign_compatible(c, w, tol):
                raise ValueError(f"cell {cell_str(c)} is not sign-compatible with w")
            out.append(tuple(ZERO if abs(wi) > tol else t for t, wi in zip(c, w)))
        return CellUnion(out, self.dim)

    def to_list(self):
        return [cell_str(c) for c in self.cells]

    def as_boxes(self):
        """The union viewed as a box union with endpoints in ``{0, ±inf}``."""
        rng = {ZERO: (0.0, 0.0), NONNEG: (0.0, math.inf), NONPOS: (-math.inf, 0.0),
               FREE: (-math.inf, math.inf)}
        boxes = [[rng[t] for t in c] for c in self.cells]
        return OrthoSet.from_intervals(boxes, self.dim)


def _sign_compatible(cell, w, tol):
    for t, wi in zip(cell, w):
        if abs(wi) <= tol:
            continue
        if t == FREE:
            return False
        if t == NONNEG and wi > 0:
            return False
        if t == NONPOS and wi < 0:
            return False
    return True


def canonicalize(cells, dim):
    return CellUnion(cells, dim)


# ---------------------------------------------------------------- box unions

def _parse_bound(v, where):
    if isinstance(v, str):
        s = v.strip().lower()
        if s in ("-inf", "-infinity"):
            return -math.inf
        if s in ("inf", "+inf", "infinity"):
            return math.inf
        raise SchemaError(f"{where}: bad bound {v!r}")
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(f"{where}: bad bound {v!r}")
    return float(v)


def _bound_json(v):
    if v == math.inf:
        return "inf"
    if v == -math.inf:
        return "-inf"
    return v


class OrthoSet:
    """Union of boxes ``prod_i [lo_ji, hi_ji]`` with possibly infinite ends."""

    def __init__(self, lo, hi):
        lo = np.atleast_2d(np.asarray(lo, dtype=float))
        hi = np.atleast_2d(np.asarray(hi, dtype=float))
        if lo.shape != hi.shape:
            raise SchemaError("lower and upper bound arrays differ in shape")
        if lo.shape[0] == 0:
            raise SchemaError("an orthodisjunctive set needs at least one box")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise SchemaError("NaN bound")
        if np.any(lo > hi):
            j, i = np.argwhere(lo > hi)[0]
            raise SchemaError(f"box {j}, coordinate {i}: lower bound exceeds upper bound")
        if np.any(lo == math.inf) or np.any(hi == -math.inf):
            raise SchemaError("interval endpoints must admit a real point")
        self.lo = lo
        self.hi = hi
        self.lo.flags.writeable = False
        self.hi.flags.writeable = False

    @classmethod
    def from_intervals(cls, boxes, dim=None):
        if not boxes:
            raise SchemaError("an orthodisjunctive set needs at least one box")
        lo = [[_parse_bound(iv[0], f"box {j}") for iv in box] for j, box in enumerate(boxes)]
        hi = [[_parse_bound(iv[1], f"box {j}") for iv in box] for j, box in enumerate(boxes)]
        widths = {len(b) for b in lo}
        if len(widths) != 1:
            raise SchemaError("all boxes must have the same number of coordinates")
        if dim is not None and widths != {dim}:
            raise SchemaError(f"boxes have {widths.pop()} coordinates, expected {dim}")
        return cls(lo, hi)

    @classmethod
    def from_json(cls, obj):
        if not isinstance(obj, dict) or "boxes" not in obj:
            raise SchemaError("Gamma must be an object with a 'boxes' list")
        boxes = obj["boxes"]
        if not isinstance(boxes, list):
            raise SchemaError("Gamma.boxes must be a list")
        for j, box in enumerate(boxes):
            if not isinstance(box, list) or any(not isinstance(iv, list) or len(iv) != 2 for iv in box):
                raise SchemaError(f"Gamma.boxes[{j}] must be a list of [lo, hi] pairs")
        return cls.from_intervals(boxes)

    def to_json(self):
        return {"boxes": [[[_bound_json(a), _bound_json(b)] for a, b in zip(lo, hi)]
                          for lo, hi in zip(self.lo.tolist(), self.hi.tolist())]}

    @property
    def dim(self):
        return self.lo.shape[1]

    @property
    def nboxes(self):
        return self.lo.shape[0]

    def __repr__(self):
        return f"OrthoSet({self.to_json()['boxes']})"

    def distances(self, y):
        return box_distances(np.atleast_2d(np.asarray(y, dtype=float)), self.lo, self.hi)[0]

    def distance(self, y):
        return float(np.min(self.distances(y)))

    def distance_batch(self, Y):
        return np.min(box_distances(np.atleast_2d(np.asarray(Y, dtype=float)), self.lo, self.hi), axis=1)

    def contains(self, y, tol=FEAS_TOL):
        return self.distance(y) <= tol

    def project(self, y):
        """Nearest point of the set and the box it lies in (lowest index on ties)."""
        y = np.asarray(y, dtype=float)
        dist = self.distances(y)
        j = int(np.argmin(dist))
        return np.clip(y, self.lo[j], self.hi[j]), j

    def snap(self, y, tol=FEAS_TOL):
        """Move ``y`` onto nearby box endpoints; raises when ``y`` is not in the set."""
        y = np.asarray(y, dtype=float)
        if not self.contains(y, tol):
            raise InfeasiblePointError(f"point {y.tolist()} is not in the set (distance {self.distance(y):.3g})")
        out = y.copy()
        ends = np.concatenate([self.lo, self.hi])
        for i in range(self.dim):
            col = ends[:, i]
            col = col[np.isfinite(col)]
            if len(col):
                k = np.argmin(np.abs(col - y[i]))
                if abs(col[k] - y[i]) <= tol:
                    out[i] = col[k]
        return out


def active_boxes(gamma, y, tol=FEAS_TOL):
    y = np.asarray(y, dtype=float)
    dist = gamma.distances(y)
    return tuple(int(j) for j in np.flatnonzero(dist <= tol))


def active_sets(gamma, y, tol=FEAS_TOL):
    """``(J, I)``: boxes containing ``y`` and coordinates sitting at an end of one of them."""
    y = np.asarray(y, dtype=float)
    J = active_boxes(gamma, y, tol)
    if not J:
        raise InfeasiblePointError(
            f"point {y.tolist()} is not in the set (distance {gamma.distance(y):.3g})")
    I = set()
    for j in J:
        at_end = (np.abs(y - gamma.lo[j]) <= tol) | (np.abs(y - gamma.hi[j]) <= tol)
        I.update(int(i) for i in np.flatnonzero(at_end))
    return J, tuple(sorted(I))


def _position(lo, hi, yi, tol):
    """0 point interval, 1 at lower end, 2 at upper end, 3 interior."""
    at_lo = abs(yi - lo) <= tol
    at_hi = abs(yi - hi) <= tol
    if at_lo and at_hi:
        return 0
    if at_lo:
        return 1
    if at_hi:
        return 2
    return 3


_NORMAL_TAG = {0: FREE, 1: NONPOS, 2: NONNEG, 3: ZERO}
_TANGENT_TAG = {0: ZERO, 1: NONNEG, 2: NONPOS, 3: FREE}


def _box_cell(gamma, j, y, table, tol):
    return tuple(table[_position(gamma.lo[j, i], gamma.hi[j, i], y[i], tol)] for i in range(gamma.dim))


def tangent_cone(gamma, y, tol=FEAS_TOL):
    y = np.asarray(y, dtype=float)
    J, _ = active_sets(gamma, y, tol)
    return CellUnion([_box_cell(gamma, j, y, _TANGENT_TAG, tol) for j in J], gamma.dim)


def regular_normal_cone(gamma, y, tol=FEAS_TOL):
    y = np.asarray(y, dtype=float)
    J, _ = active_sets(gamma, y, tol)
    cell = (FREE,) * gamma.dim
    for j in J:
        cell = cell_meet(cell, _box_cell(gamma, j, y, _NORMAL_TAG, tol))
    return CellUnion([cell], gamma.dim)


def limiting_normal_cone(gamma, y, tol=FEAS_TOL):
    """Union of regular normal cones over all activity patterns met arbitrarily close to ``y``.

    A nearby point is described by moving each endpoint coordinate up, down
    or not at all.  Boxes active at ``y`` stay active exactly when no
    coordinate leaves them, and the others stay inactive, so the patterns
    and their regular cones are enumerated exactly.
    """
    y = np.asarray(y, dtype=float)
    J, I = active_sets(gamma, y, tol)
    ell = gamma.dim
    pos = {j: [_position(gamma.lo[j, i], gamma.hi[j, i], y[i], tol) for i in range(ell)] for j in J}
    cells = []
    for moves in itertools.product((0, 1, -1), repeat=len(I)):
        move = dict(zip(I, moves))
        stay = []
        for j in J:
            ok = True
            for i, m in move.items():
                p = pos[j][i]
                if (m == 1 and p in (0, 2)) or (m == -1 and p in (0, 1)):
                    ok = False
                    break
            if ok:
                stay.append(j)
        if not stay:
            continue
        cell = [FREE] * ell
        for j in stay:
            for i in range(ell):
                p = 3 if move.get(i, 0) != 0 else pos[j][i]
                cell[i] &= _NORMAL_TAG[p]
        cells.append(tuple(cell))
    return CellUnion(cells, ell)


def dir_limiting_normal_cone(gamma, y, w, tol=FEAS_TOL):
    """Limiting normals at ``y`` collected along ``w``; empty when ``w`` is not tangent.

    Uses the identity that, for a finite union of polyhedra, the directional
    normal cone equals the normal cone to the tangent cone at ``w``.
    """
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    T = tangent_cone(gamma, y, tol)
    if not T.contains(w, tol):
        return CellUnion.empty(gamma.dim)
    return limiting_normal_cone(T.as_boxes(), np.where(np.abs(w) <= tol, 0.0, w), tol)


# ---------------------------------------------------------------- directional neighbourhoods

@dataclass(frozen=True)
class DirNbhd:
    """Points ``x`` with ``|x - center| <= eps`` whose direction from ``center`` is within ``delta`` of ``d``."""

    center: tuple
    direction: tuple
    eps: float
    delta: float

    def __post_init__(self):
        if self.eps <= 0 or self.delta <= 0:
            raise ValueError("eps and delta must be positive")

    def contains(self, x, tol=1e-12):
        c = np.asarray(self.center, dtype=float)
        d = np.asarray(self.direction, dtype=float)
        y = np.asarray(x, dtype=float) - c
        ny, nd = np.linalg.norm(y), np.linalg.norm(d)
        if ny > self.eps * (1 + tol):
            return False
        return np.linalg.norm(nd * y - ny * d) <= self.delta * ny * nd * (1 + tol) + tol * ny


def dir_nbhd_sample(nbhd, count, seed=0):
    """Deterministic quasi-random points of the neighbourhood.

    Radii are spread geometrically over ``(eps * 1e-6, eps]`` and directions
    fill the admissible cap around ``d`` via a scrambled Halton sequence.
    """
    from scipy.stats import qmc

    c = np.asarray(nbhd.center, dtype=float)
    d = np.asarray(nbhd.direction, dtype=float)
    nd = np.linalg.norm(d)
    if abs(nd - 1.0) > 1e-8:
        raise ValueError("direction must have unit length")
    n = len(d)
    if count <= 0:
        return np.zeros((0, n))
    # angle whose chord equals delta, kept strictly inside
    theta_max = 2.0 * math.asin(min(nbhd.delta / 2.0, 1.0)) * 0.999
    basis = np.linalg.svd(d[None, :])[2][1:] if n > 1 else np.zeros((0, 1))
    sampler = qmc.Halton(d=max(n, 2), scramble=True, seed=seed)
    U = sampler.random(count)
    radii = nbhd.eps * 10.0 ** (-6.0 * U[:, 0])
    pts = np.empty((count, n))
    for p in range(count):
        if n == 1:
            u = d
        else:
            z = 2.0 * U[p, 1:n] - 1.0 if n > 2 else np.array([2.0 * U[p, 1] - 1.0])
            z = z[: n - 1]
            nz = np.linalg.norm(z)
            v = basis.T @ (z / nz) if nz > 0 else np.zeros(n)
            ang = theta_max * min(nz, 1.0)
            u = math.cos(ang) * d + math.sin(ang) * v
        pts[p] = c + radii[p] * u
    return pts
