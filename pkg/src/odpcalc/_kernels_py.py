"""Pure numpy implementations of the hot numeric kernels.

These mirror ``_kernels.pyx`` one to one and are used whenever the compiled
module is unavailable (or when ``ODPCALC_PURE=1`` is set).
"""

import numpy as np

ZERO, NONNEG, NONPOS, FREE = 0, 1, 2, 3


def box_distances(Y, lo, hi):
    """Euclidean distance of every row of ``Y`` to every box ``[lo[j], hi[j]]``.

    Returns an array of shape ``(len(Y), len(lo))``.
    """
    Y = np.asarray(Y, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    below = np.maximum(lo[None, :, :] - Y[:, None, :], 0.0)
    above = np.maximum(Y[:, None, :] - hi[None, :, :], 0.0)
    gap = below + above
    return np.sqrt(np.einsum("ijk,ijk->ij", gap, gap))


def normal_codes(Y, lo, hi, atol):
    """Regular normal cell of the union of boxes at each row of ``Y``.

    Row entries are tag codes (0 Zero, 1 NonNeg, 2 NonPos, 3 Free); a row of
    ``-1`` marks a point outside every box.
    """
    Y = np.asarray(Y, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    N, ell = Y.shape
    out = np.full((N, ell), FREE, dtype=np.int8)
    found = np.zeros(N, dtype=bool)
    for j in range(lo.shape[0]):
        a, b = lo[j], hi[j]
        inside = np.all((Y >= a - atol) & (Y <= b + atol), axis=1)
        if not inside.any():
            continue
        at_lo = np.abs(Y - a) <= atol
        at_hi = np.abs(Y - b) <= atol
        point = (a == b)[None, :]
        code = np.where(point, FREE,
                        np.where(at_lo & at_hi, FREE,
                                 np.where(at_lo, NONPOS,
                                          np.where(at_hi, NONNEG, ZERO))))
        code = code.astype(np.int8)
        out[inside] &= code[inside]
        found |= inside
    out[~found] = -1
    return out


def min_norm_point(V, tol=1e-14, max_iter=500):
    """Nearest point to the origin in the convex hull of the rows of ``V``.

    Wolfe's algorithm.  Returns ``(point, weights)``.
    """
    V = np.asarray(V, dtype=float)
    m, n = V.shape
    scale = max(1.0, float(np.max(np.einsum("ij,ij->i", V, V))))
    i0 = int(np.argmin(np.einsum("ij,ij->i", V, V)))
    S = [i0]
    w = np.array([1.0])
    x = V[i0].copy()
    for _ in range(max_iter):
        j = int(np.argmin(V @ x))
        if x @ x - V[j] @ x <= tol * scale or j in S:
            break
        S.append(j)
        w = np.append(w, 0.0)
        while True:
            P = V[S]
            k = len(S)
            A = np.zeros((k + 1, k + 1))
            A[:k, :k] = P @ P.T
            A[:k, k] = 1.0
            A[k, :k] = 1.0
            rhs = np.zeros(k + 1)
            rhs[k] = 1.0
            sol = np.linalg.lstsq(A, rhs, rcond=None)[0]
            alpha = sol[:k]
            if np.all(alpha > tol):
                w = alpha
                x = alpha @ P
                break
            neg = alpha <= tol
            denom = w[neg] - alpha[neg]
            ratios = np.where(denom > 0, w[neg] / np.where(denom > 0, denom, 1.0), 1.0)
            theta = min(1.0, float(np.min(ratios)))
            w = theta * alpha + (1.0 - theta) * w
            keep = w > tol
            if not keep.any():
                keep[int(np.argmax(w))] = True
            S = [s for s, kp in zip(S, keep) if kp]
            w = w[keep]
            w = w / w.sum()
            x = w @ V[S]
    weights = np.zeros(m)
    weights[S] = w
    return x, weights


def pivot(T, r, c):
    """In-place Gauss-Jordan pivot of the dense tableau ``T`` on ``(r, c)``."""
    T[r] /= T[r, c]
    col = T[:, c].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])
