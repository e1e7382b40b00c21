# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the Jacobi and SMO kernels (see ``_pure.py``)."""

import numpy as np
from libc.math cimport fabs, sqrt, INFINITY

cdef double ETA_FLOOR = 1e-12


def jacobi_eigh(a_in, double tol=1e-12, int max_sweeps=100):
    cdef double[:, ::1] a = np.array(a_in, dtype=np.float64, copy=True, order="C")
    cdef Py_ssize_t n = a.shape[0]
    v_arr = np.eye(n)
    cdef double[:, ::1] v = v_arr
    cdef Py_ssize_t p, q, r
    cdef int sweep
    cdef double off, scale, apq, app, aqq, theta, t, c, s, x, z
    with nogil:
        for sweep in range(max_sweeps + 1):
            off = 0.0
            scale = 0.0
            for p in range(n):
                if fabs(a[p, p]) > scale:
                    scale = fabs(a[p, p])
                for q in range(p + 1, n):
                    if fabs(a[p, q]) > off:
                        off = fabs(a[p, q])
            if off <= tol * scale:
                with gil:
                    return np.diag(np.asarray(a)).copy(), v_arr, sweep
            if sweep == max_sweeps:
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = a[p, q]
                    if apq == 0.0:
                        continue
                    app = a[p, p]
                    aqq = a[q, q]
                    theta = (aqq - app) / (2.0 * apq)
                    if fabs(theta) > 1e150:
                        t = 1.0 / (2.0 * theta)
                    else:
                        t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                        if theta < 0.0:
                            t = -t
                    c = 1.0 / sqrt(t * t + 1.0)
                    s = t * c
                    for r in range(n):
                        x = a[r, p]
                        z = a[r, q]
                        a[r, p] = c * x - s * z
                        a[r, q] = s * x + c * z
                    for r in range(n):
                        a[p, r] = a[r, p]
                        a[q, r] = a[r, q]
                    a[p, p] = app - t * apq
                    a[q, q] = aqq + t * apq
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    for r in range(n):
                        x = v[r, p]
                        z = v[r, q]
                        v[r, p] = c * x - s * z
                        v[r, q] = s * x + c * z
    return np.diag(np.asarray(a)).copy(), v_arr, -1


def smo_solve(gram, y_in, double C, double tol, long max_iter):
    """Same contract as ``_pure.smo_solve`` but takes the full Gram matrix."""
    cdef double[:, ::1] K = np.ascontiguousarray(gram, dtype=np.float64)
    cdef double[::1] y = np.ascontiguousarray(y_in, dtype=np.float64)
    cdef Py_ssize_t p = y.shape[0]
    alpha_arr = np.zeros(p)
    grad_arr = -np.ones(p)
    cdef double[::1] alpha = alpha_arr
    cdef double[::1] grad = grad_arr
    cdef Py_ssize_t i, j, t
    cdef long it = 0
    cdef double vt, vi, vj, low_min, gap = INFINITY, eta, bound_i, bound_j, lam, diff, curv, gain, best
    cdef bint in_up, in_low
    with nogil:
        while True:
            i = -1
            vi = -INFINITY
            low_min = INFINITY
            for t in range(p):
                vt = -y[t] * grad[t]
                if y[t] > 0:
                    in_up = alpha[t] < C
                    in_low = alpha[t] > 0.0
                else:
                    in_up = alpha[t] > 0.0
                    in_low = alpha[t] < C
                if in_up and vt > vi:
                    vi = vt
                    i = t
                if in_low and vt < low_min:
                    low_min = vt
            if i < 0 or low_min == INFINITY:
                gap = 0.0
            else:
                gap = vi - low_min
            if gap <= tol or it >= max_iter:
                break
            j = -1
            best = -INFINITY
            for t in range(p):
                if y[t] > 0:
                    in_low = alpha[t] > 0.0
                else:
                    in_low = alpha[t] < C
                if not in_low:
                    continue
                diff = vi - (-y[t] * grad[t])
                if diff <= 0.0:
                    continue
                curv = K[i, i] + K[t, t] - 2.0 * K[i, t]
                if curv <= ETA_FLOOR:
                    curv = ETA_FLOOR
                gain = diff * diff / curv
                if gain > best:
                    best = gain
                    j = t
            vj = -y[j] * grad[j]
            eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
            if eta < ETA_FLOOR:
                eta = ETA_FLOOR
            bound_i = C - alpha[i] if y[i] > 0 else alpha[i]
            bound_j = alpha[j] if y[j] > 0 else C - alpha[j]
            lam = (vi - vj) / eta
            if bound_i < lam:
                lam = bound_i
            if bound_j < lam:
                lam = bound_j
            if lam == bound_i:
                alpha[i] = C if y[i] > 0 else 0.0
            else:
                alpha[i] += y[i] * lam
            if lam == bound_j:
                alpha[j] = 0.0 if y[j] > 0 else C
            else:
                alpha[j] -= y[j] * lam
            for t in range(p):
                grad[t] += lam * y[t] * (K[i, t] - K[j, t])
            it += 1
    return alpha_arr, grad_arr, it, gap
