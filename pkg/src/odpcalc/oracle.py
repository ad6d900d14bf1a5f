"""Sampling estimates of limit-defined objects.

These are deliberately naive: they look at many nearby points and collect
what they see.  They serve as an independent check on the exact calculus.
"""

from __future__ import annotations

import math

import numpy as np

from .asymptotics import trend
from .orthogeom import FEAS_TOL, CellUnion, regular_normal_cone, tangent_cone
from .polytope import PolyUnion, dedupe
from .pwexpr import grad_batch, nonsmooth_at


def _cap_directions(d, count, half_angle, rng):
    """Unit vectors within ``half_angle`` of the unit vector ``d``."""
    n = len(d)
    if n == 1:
        return np.tile(d, (count, 1))
    g = rng.standard_normal((count, n))
    g -= np.outer(g @ d, d)
    g /= np.maximum(np.linalg.norm(g, axis=1, keepdims=True), 1e-300)
    ang = half_angle * rng.random((count, 1))
    out = np.cos(ang) * d + np.sin(ang) * g
    out[0] = d
    return out


def sample_tangent(target, x, d, radii=None, seed=0, count=64):
    """Estimate whether ``d`` is tangent to a set at ``x``: ``"in"``, ``"out"`` or ``"borderline"``.

    ``target`` is either a problem (the set is its feasible region) or an
    :class:`OrthoSet`.  For each radius ``t`` the value ``dist(x + t d', S) / t``
    is recorded, minimized over directions ``d'`` in a cap around ``d``
    shrinking with ``t``.  For feasible regions the cap is just ``d``: the
    ratio along ``d`` alone already tends to zero exactly for tangent ``d``,
    and each distance costs a projection.
    """
    from .projection import distance_to_feasible

    x = np.asarray(x, dtype=float)
    d = np.atleast_1d(np.asarray(d, dtype=float))
    nd = float(np.linalg.norm(d))
    if nd == 0.0:
        return "in"
    d = d / nd
    box = hasattr(target, "distance_batch")
    if radii is None:
        radii = 10.0 ** -np.arange(2, 7) if box else 10.0 ** -np.arange(2, 6)
    radii = np.asarray(radii, dtype=float)
    rng = np.random.default_rng(seed)
    best = []
    for t in radii:
        if box:
            caps = _cap_directions(d, count, math.sqrt(t), rng)
            best.append(float(np.min(target.distance_batch(x + t * caps))) / t)
        else:
            best.append(distance_to_feasible(target, x + t * d, anchor=x) / t)
    best = np.array(best)
    tail = best[-1]
    if tail <= 1e-6:
        return "in"
    tr = trend(best, 1.0 / radii)
    if tr.slope <= -0.5:
        return "in"
    if tail >= 1e-2 and tr.slope > -0.1:
        return "out"
    return "borderline"


def _feasible_nearby(gamma, y, radius, count, rng, w=None):
    """Points of ``gamma`` within ``radius`` of ``y`` (along a cap around ``w`` if given)."""
    ell = gamma.dim
    if w is None:
        steps = rng.standard_normal((count, ell))
        steps /= np.linalg.norm(steps, axis=1, keepdims=True)
        steps *= radius * rng.random((count, 1))
        # also exact sign patterns so that boundary strata get hit
        signs = rng.integers(-1, 2, size=(count, ell)) * radius * rng.random((count, 1))
        cand = np.vstack([y + steps, y + signs])
    else:
        nw = np.linalg.norm(w)
        u = w / nw
        caps = _cap_directions(u, count, math.sqrt(radius), rng)
        wiggle = rng.integers(-1, 2, size=(count, ell)) * radius ** 1.5 * rng.random((count, 1))
        cand = y + radius * caps + wiggle
        cand = np.vstack([cand, y + radius * caps])
    out = []
    for z in cand:
        p, _ = gamma.project(z)
        if np.linalg.norm(p - y) <= 2 * radius + 1e-15:
            out.append(p)
    return np.array(out).reshape(-1, ell)


def sample_limiting_normals(gamma, y, radii=(1e-2, 1e-4, 1e-6), grid=2000, seed=0, w=None):
    """Union of regular normal cones at sampled points of ``gamma`` near ``y``."""
    y = np.asarray(y, dtype=float)
    rng = np.random.default_rng(seed)
    cells = []
    if w is not None:
        w = np.asarray(w, dtype=float)
        if np.linalg.norm(w) == 0.0:
            w = None
        elif not tangent_cone(gamma, y).contains(w, FEAS_TOL):
            return CellUnion.empty(gamma.dim)
    if w is None:
        cells.extend(regular_normal_cone(gamma, y).cells)
    for r in radii:
        pts = _feasible_nearby(gamma, y, r, grid, rng, w)
        if w is not None and len(pts):
            v = pts - y
            nv = np.linalg.norm(v, axis=1)
            u = v / np.maximum(nv, 1e-300)[:, None]
            keep = (nv > 0) & (np.linalg.norm(u - w / np.linalg.norm(w), axis=1) <= 4 * math.sqrt(r))
            pts = pts[keep]
        for z in _distinct_patterns(gamma, pts):
            cells.extend(regular_normal_cone(gamma, z, tol=PATTERN_TOL).cells)
    return CellUnion(cells, gamma.dim)


PATTERN_TOL = 1e-13


def _distinct_patterns(gamma, pts):
    """One representative per activity pattern (active boxes, coordinates at ends)."""
    if not len(pts):
        return pts
    from .kernels import box_distances

    act = box_distances(pts, gamma.lo, gamma.hi) <= PATTERN_TOL
    at_lo = np.abs(pts[:, None, :] - gamma.lo[None]) <= PATTERN_TOL
    at_hi = np.abs(pts[:, None, :] - gamma.hi[None]) <= PATTERN_TOL
    keys = np.concatenate([act, at_lo.reshape(len(pts), -1), at_hi.reshape(len(pts), -1)], axis=1)
    _, idx = np.unique(keys, axis=0, return_index=True)
    return pts[np.sort(idx)]


def sample_normal_rays(gamma, y, radii=(1e-2, 1e-4, 1e-6), grid=2000, seed=0):
    """Unit proximal normals ``(z - proj z) / |z - proj z|`` at projections near ``y``.

    Works for any set with a projection, so it also covers constraint sets
    without an exact cone calculus.
    """
    y = np.asarray(y, dtype=float)
    rng = np.random.default_rng(seed)
    rays = []
    for r in radii:
        steps = rng.standard_normal((grid, len(y)))
        steps *= r / np.linalg.norm(steps, axis=1, keepdims=True)
        for z in y + steps:
            q, _ = gamma.project(z)
            v = z - q
            nv = np.linalg.norm(v)
            if nv > 1e-14 * r and np.linalg.norm(q - y) <= r:
                rays.append(v / nv)
    return np.array(rays).reshape(-1, len(y))


def sample_dir_limiting_normals(gamma, y, w, radii=(1e-2, 1e-4, 1e-6), grid=2000, seed=0):
    return sample_limiting_normals(gamma, y, radii, grid, seed, w=w)


def sample_subdiff(e, x, sign=1, radii=(1e-3, 1e-5, 1e-7), grid=400, seed=0, d=None, n=None):
    """Gradient clusters of ``sign * e`` at differentiable points near ``x``.

    Returns ``(cloud, clusters)``: all sampled gradients at the smallest
    radius and their distinct values as a :class:`PolyUnion` of points.
    """
    x = np.asarray(x, dtype=float)
    n = n or len(x)
    rng = np.random.default_rng(seed)
    clouds = []
    for r in radii:
        if d is None:
            steps = rng.standard_normal((grid, n))
            steps /= np.linalg.norm(steps, axis=1, keepdims=True)
            pts = x + r * rng.random((grid, 1)) * steps
        else:
            u = np.asarray(d, dtype=float) / np.linalg.norm(d)
            caps = _cap_directions(u, grid, math.sqrt(r), rng)
            pts = x + r * caps
        keep = np.array([not nonsmooth_at(e, z) for z in pts])
        G = sign * grad_batch(e, pts[keep])[1]
        clouds.append(G)
    cloud = clouds[-1]
    clusters = dedupe(np.round(cloud, 6), 1e-4) if len(cloud) else np.zeros((0, n))
    return cloud, PolyUnion([row[None, :] for row in clusters], n)
