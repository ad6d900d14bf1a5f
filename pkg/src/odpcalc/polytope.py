"""Finite unions of vertex-given convex polytopes."""

import itertools

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .kernels import min_norm_point

VERTEX_TOL = 1e-12
SET_TOL = 1e-9


def hull_distance(p, V):
    """Distance from ``p`` to the convex hull of the rows of ``V``."""
    V = np.atleast_2d(np.asarray(V, dtype=float))
    p = np.asarray(p, dtype=float)
    if len(V) == 1:
        return float(np.linalg.norm(V[0] - p))
    x, _ = min_norm_point(V - p)
    return float(np.linalg.norm(x))


def nearest_in_hull(p, V):
    """Nearest point of conv(V) to ``p`` and its convex weights."""
    V = np.atleast_2d(np.asarray(V, dtype=float))
    p = np.asarray(p, dtype=float)
    x, w = min_norm_point(V - p)
    return x + p, w


def dedupe(V, tol=VERTEX_TOL):
    V = np.atleast_2d(np.asarray(V, dtype=float))
    out = []
    for v in V:
        if not any(np.max(np.abs(v - u)) <= tol for u in out):
            out.append(v)
    return np.array(out)


def reduce_vertices(V, tol=VERTEX_TOL):
    """Drop duplicates and points lying in the hull of the remaining ones."""
    V = dedupe(V, tol) + 0.0
    if len(V) <= 2:
        return _sorted_rows(V)
    scale = max(1.0, float(np.max(np.abs(V))))
    keep = list(range(len(V)))
    for i in range(len(V)):
        others = [j for j in keep if j != i]
        if not others:
            continue
        if hull_distance(V[i], V[others]) <= tol * scale * 10:
            keep = others
    return _sorted_rows(V[keep])


def _sorted_rows(V):
    if len(V) == 0:
        return V
    order = np.lexsort(V.T[::-1])
    return V[order]


def _affine_frame(V, tol):
    c = V.mean(axis=0)
    D = V - c
    if len(V) == 1:
        return c, np.zeros((V.shape[1], 0))
    _, s, vt = np.linalg.svd(D, full_matrices=True)
    rank = int(np.sum(s > tol * max(1.0, float(s[0]) if len(s) else 1.0)))
    return c, vt[:rank].T


def halfspaces(V, tol=1e-10):
    """H-representation of conv(V): ``(E, e, G, h)`` with ``E z = e`` and ``G z <= h``."""
    V = np.atleast_2d(np.asarray(V, dtype=float))
    n = V.shape[1]
    c, B = _affine_frame(V, tol)
    k = B.shape[1]
    if k < n:
        N = np.linalg.svd(B.T, full_matrices=True)[2][k:].T if k else np.eye(n)
        E = N.T
        e = N.T @ c
    else:
        E = np.zeros((0, n))
        e = np.zeros(0)
    G, h = [], []
    if k == 1:
        u = (V - c) @ B[:, 0]
        G.append(B[:, 0]); h.append(u.max() + B[:, 0] @ c)
        G.append(-B[:, 0]); h.append(-u.min() - B[:, 0] @ c)
    elif k >= 2:
        U = (V - c) @ B
        try:
            hull = ConvexHull(U)
        except QhullError:
            hull = ConvexHull(U, qhull_options="QJ")
        for eq in hull.equations:
            a, b0 = eq[:-1], eq[-1]
            g = B @ a
            G.append(g)
            h.append(-b0 + g @ c)
    return E, e, np.array(G).reshape(-1, n), np.array(h)


def intersect_polytopes(polys, tol=1e-10):
    """Vertices of the intersection of the given polytopes, or None when empty."""
    polys = [np.atleast_2d(np.asarray(P, dtype=float)) for P in polys]
    n = polys[0].shape[1]
    Es, es, Gs, hs = [], [], [], []
    for P in polys:
        E, e, G, h = halfspaces(P, tol)
        Es.append(E); es.append(e); Gs.append(G); hs.append(h)
    E = np.vstack(Es); e = np.concatenate(es)
    G = np.vstack(Gs); h = np.concatenate(hs)
    scale = max(1.0, max(float(np.max(np.abs(P))) for P in polys))
    feas_tol = 1e-9 * scale

    def feasible(z):
        if len(E) and np.max(np.abs(E @ z - e)) > feas_tol:
            return False
        return not (len(G) and np.max(G @ z - h) > feas_tol)

    verts = []
    rank_E = np.linalg.matrix_rank(E, tol=1e-10) if len(E) else 0
    need = n - rank_E
    if need == 0:
        z = np.linalg.lstsq(E, e, rcond=None)[0]
        return np.array([z]) if feasible(z) else None
    for rows in itertools.combinations(range(len(G)), need):
        M = np.vstack([E, G[list(rows)]])
        r = np.concatenate([e, h[list(rows)]])
        if np.linalg.matrix_rank(M, tol=1e-10) < n:
            continue
        z = np.linalg.lstsq(M, r, rcond=None)[0]
        if feasible(z):
            verts.append(z)
    if not verts:
        return None
    return reduce_vertices(np.array(verts), tol=1e-10)


class PolyUnion:
    """A finite union of convex polytopes, each stored by its vertices."""

    __slots__ = ("polytopes", "dim")

    def __init__(self, polytopes, dim=None):
        polys = []
        for P in polytopes:
            P = np.atleast_2d(np.asarray(P, dtype=float))
            if P.size == 0:
                continue
            polys.append(reduce_vertices(P))
        if dim is None:
            if not polys:
                raise ValueError("dimension required for an empty PolyUnion")
            dim = polys[0].shape[1]
        self.dim = int(dim)
        self.polytopes = tuple(polys)

    @classmethod
    def point(cls, v):
        v = np.asarray(v, dtype=float)
        return cls([v[None, :]], len(v))

    @classmethod
    def empty(cls, dim):
        return cls([], dim)

    @property
    def is_empty(self):
        return not self.polytopes

    def __len__(self):
        return len(self.polytopes)

    def __iter__(self):
        return iter(self.polytopes)

    def __repr__(self):
        return f"PolyUnion({self.to_list()})"

    def vertices(self):
        if self.is_empty:
            return np.zeros((0, self.dim))
        return dedupe(np.vstack(self.polytopes))

    def to_list(self):
        return [P.tolist() for P in self.polytopes]

    def scale(self, c):
        return PolyUnion([c * P for P in self.polytopes], self.dim)

    def translate(self, v):
        v = np.asarray(v, dtype=float)
        return PolyUnion([P + v for P in self.polytopes], self.dim)

    def union(self, other):
        return PolyUnion(self.polytopes + other.polytopes, self.dim).canonical()

    def minkowski_sum(self, other):
        out = []
        for P in self.polytopes:
            for Q in other.polytopes:
                out.append((P[:, None, :] + Q[None, :, :]).reshape(-1, self.dim))
        return PolyUnion(out, self.dim).canonical()

    def canonical(self, tol=SET_TOL):
        """Drop polytopes contained in another one and sort the rest."""
        polys = list(self.polytopes)
        keep = []
        for i, P in enumerate(polys):
            dominated = False
            for j, Q in enumerate(polys):
                if i == j:
                    continue
                if _poly_in_poly(P, Q, tol):
                    # equal polytopes: keep the lower index only
                    if _poly_in_poly(Q, P, tol) and j > i:
                        continue
                    dominated = True
                    break
            if not dominated:
                keep.append(P)
        keep.sort(key=lambda P: (len(P), P.ravel().tolist()))
        return PolyUnion(keep, self.dim)

    def distance(self, p):
        if self.is_empty:
            return float("inf")
        return min(hull_distance(p, P) for P in self.polytopes)

    def nearest(self, p):
        """Closest point over the union: ``(distance, polytope index, weights)``."""
        best = (float("inf"), -1, None)
        for i, P in enumerate(self.polytopes):
            x, w = nearest_in_hull(p, P)
            dist = float(np.linalg.norm(x - np.asarray(p, dtype=float)))
            if dist < best[0]:
                best = (dist, i, w)
        return best

    def contains(self, p, tol=SET_TOL):
        return self.distance(p) <= tol

    def directed_hausdorff(self, other):
        """Upper bound on sup over self of the distance to ``other``.

        Exact when each polytope of ``self`` lies in a single polytope of
        ``other`` up to the returned value.
        """
        if self.is_empty:
            return 0.0
        if other.is_empty:
            return float("inf")
        worst = 0.0
        for P in self.polytopes:
            best = min(max(hull_distance(v, Q) for v in P) for Q in other.polytopes)
            worst = max(worst, best)
        return worst

    def hausdorff(self, other):
        return max(self.directed_hausdorff(other), other.directed_hausdorff(self))

    def is_subset(self, other, tol=SET_TOL):
        return self.directed_hausdorff(other) <= tol

    def approx_equal(self, other, tol=SET_TOL):
        return self.hausdorff(other) <= tol


def _poly_in_poly(P, Q, tol):
    return all(hull_distance(v, Q) <= tol for v in P)
