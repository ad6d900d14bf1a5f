# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot numeric kernels (see ``_kernels_py``)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, INFINITY

cnp.import_array()


def box_distances(Y, lo, hi):
    cdef const double[:, ::1] y = np.ascontiguousarray(Y, dtype=np.float64)
    cdef const double[:, ::1] a = np.ascontiguousarray(lo, dtype=np.float64)
    cdef const double[:, ::1] b = np.ascontiguousarray(hi, dtype=np.float64)
    cdef Py_ssize_t N = y.shape[0], t = a.shape[0], ell = y.shape[1]
    out = np.empty((N, t), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t p, j, i
    cdef double acc, g
    for p in range(N):
        for j in range(t):
            acc = 0.0
            for i in range(ell):
                if y[p, i] < a[j, i]:
                    g = a[j, i] - y[p, i]
                elif y[p, i] > b[j, i]:
                    g = y[p, i] - b[j, i]
                else:
                    g = 0.0
                acc += g * g
            o[p, j] = sqrt(acc)
    return out


def normal_codes(Y, lo, hi, double atol):
    cdef const double[:, ::1] y = np.ascontiguousarray(Y, dtype=np.float64)
    cdef const double[:, ::1] a = np.ascontiguousarray(lo, dtype=np.float64)
    cdef const double[:, ::1] b = np.ascontiguousarray(hi, dtype=np.float64)
    cdef Py_ssize_t N = y.shape[0], t = a.shape[0], ell = y.shape[1]
    out = np.full((N, ell), 3, dtype=np.int8)
    cdef cnp.int8_t[:, ::1] o = out
    cdef Py_ssize_t p, j, i
    cdef bint inside, found, at_lo, at_hi
    cdef cnp.int8_t code
    for p in range(N):
        found = False
        for j in range(t):
            inside = True
            for i in range(ell):
                if y[p, i] < a[j, i] - atol or y[p, i] > b[j, i] + atol:
                    inside = False
                    break
            if not inside:
                continue
            found = True
            for i in range(ell):
                at_lo = fabs(y[p, i] - a[j, i]) <= atol
                at_hi = fabs(y[p, i] - b[j, i]) <= atol
                if a[j, i] == b[j, i] or (at_lo and at_hi):
                    code = 3
                elif at_lo:
                    code = 2
                elif at_hi:
                    code = 1
                else:
                    code = 0
                o[p, i] = o[p, i] & code
        if not found:
            for i in range(ell):
                o[p, i] = -1
    return out


cdef int _solve(double[:, ::1] A, double[::1] x, Py_ssize_t k):
    # Gaussian elimination with partial pivoting on the augmented (k, k+1) block
    cdef Py_ssize_t r, c, piv, cc
    cdef double best, f, tmp
    for c in range(k):
        piv = c
        best = fabs(A[c, c])
        for r in range(c + 1, k):
            if fabs(A[r, c]) > best:
                best = fabs(A[r, c])
                piv = r
        if best < 1e-300:
            return 1
        if piv != c:
            for cc in range(k + 1):
                tmp = A[c, cc]
                A[c, cc] = A[piv, cc]
                A[piv, cc] = tmp
        for r in range(c + 1, k):
            f = A[r, c] / A[c, c]
            for cc in range(c, k + 1):
                A[r, cc] -= f * A[c, cc]
    for r in range(k - 1, -1, -1):
        tmp = A[r, k]
        for cc in range(r + 1, k):
            tmp -= A[r, cc] * x[cc]
        x[r] = tmp / A[r, r]
    return 0


def min_norm_point(V, double tol=1e-14, int max_iter=500):
    cdef const double[:, ::1] v = np.ascontiguousarray(V, dtype=np.float64)
    cdef Py_ssize_t m = v.shape[0], n = v.shape[1]
    cdef Py_ssize_t cap = n + 2
    S_arr = np.zeros(cap + 1, dtype=np.intp)
    cdef Py_ssize_t[::1] S = S_arr
    w_arr = np.zeros(cap + 1)
    cdef double[::1] w = w_arr
    alpha_arr = np.zeros(cap + 2)
    cdef double[::1] alpha = alpha_arr
    x_arr = np.zeros(n)
    cdef double[::1] x = x_arr
    M_arr = np.zeros((cap + 2, cap + 3))
    cdef double[:, ::1] M = M_arr
    cdef Py_ssize_t i, j, q, r, k = 1, it, kk, jmin
    cdef double nrm, best, scale = 1.0, xx, vx, theta, ratio, s
    cdef bint member, allpos
    best = INFINITY
    jmin = 0
    for i in range(m):
        nrm = 0.0
        for q in range(n):
            nrm += v[i, q] * v[i, q]
        if nrm > scale:
            scale = nrm
        if nrm < best:
            best = nrm
            jmin = i
    S[0] = jmin
    w[0] = 1.0
    for q in range(n):
        x[q] = v[jmin, q]
    for it in range(max_iter):
        xx = 0.0
        for q in range(n):
            xx += x[q] * x[q]
        best = INFINITY
        jmin = 0
        for i in range(m):
            vx = 0.0
            for q in range(n):
                vx += v[i, q] * x[q]
            if vx < best:
                best = vx
                jmin = i
        if xx - best <= tol * scale:
            break
        member = False
        for r in range(k):
            if S[r] == jmin:
                member = True
        if member or k >= cap:
            break
        S[k] = jmin
        w[k] = 0.0
        k += 1
        while True:
            kk = k + 1
            for r in range(kk):
                for q in range(kk + 1):
                    M[r, q] = 0.0
            for r in range(k):
                for q in range(k):
                    s = 0.0
                    for i in range(n):
                        s += v[S[r], i] * v[S[q], i]
                    M[r, q] = s
                M[r, k] = 1.0
                M[k, r] = 1.0
            M[k, kk] = 1.0
            if _solve(M, alpha, kk):
                # affinely dependent set: fall back to dropping the newest point
                k -= 1
                break
            allpos = True
            for r in range(k):
                if alpha[r] <= tol:
                    allpos = False
            if allpos:
                for r in range(k):
                    w[r] = alpha[r]
                break
            theta = 1.0
            for r in range(k):
                if alpha[r] <= tol and w[r] - alpha[r] > 0:
                    ratio = w[r] / (w[r] - alpha[r])
                    if ratio < theta:
                        theta = ratio
            for r in range(k):
                w[r] = theta * alpha[r] + (1.0 - theta) * w[r]
            q = 0
            best = -1.0
            jmin = 0
            for r in range(k):
                if w[r] > best:
                    best = w[r]
                    jmin = r
            for r in range(k):
                if w[r] > tol or r == jmin:
                    S[q] = S[r]
                    w[q] = w[r]
                    q += 1
            k = q
            s = 0.0
            for r in range(k):
                s += w[r]
            for r in range(k):
                w[r] /= s
            for i in range(n):
                x[i] = 0.0
                for r in range(k):
                    x[i] += w[r] * v[S[r], i]
        for i in range(n):
            x[i] = 0.0
            for r in range(k):
                x[i] += w[r] * v[S[r], i]
    weights = np.zeros(m)
    for r in range(k):
        weights[S[r]] += w[r]
    return x_arr.copy(), weights


def pivot(double[:, ::1] T, Py_ssize_t r, Py_ssize_t c):
    cdef Py_ssize_t rows = T.shape[0], cols = T.shape[1], i, j
    cdef double p = T[r, c], f
    for j in range(cols):
        T[r, j] /= p
    for i in range(rows):
        if i == r:
            continue
        f = T[i, c]
        if f != 0.0:
            for j in range(cols):
                T[i, j] -= f * T[r, j]
