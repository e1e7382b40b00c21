"""Pure-Python/numpy versions of the numerical kernels.

These mirror ``_core.pyx`` operation for operation and are used whenever
the compiled extension is unavailable (or ``PCASVM_PURE_PYTHON=1``).
"""

import math

import numpy as np

# curvature floor for non positive-definite pairs
ETA_FLOOR = 1e-12


def jacobi_eigh(a, tol=1e-12, max_sweeps=100):
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Returns ``(eigenvalues, eigenvectors, sweeps)`` in the order the
    rotations leave them; sorting is the caller's job. ``sweeps`` is -1
    when the sweep cap is hit before convergence.
    """
    a = np.array(a, dtype=np.float64, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    for sweep in range(max_sweeps + 1):
        off = np.abs(np.triu(a, 1)).max() if n > 1 else 0.0
        scale = np.abs(np.diag(a)).max() if n else 0.0
        if off <= tol * scale:
            return np.diag(a).copy(), v, sweep
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
                if abs(theta) > 1e150:
                    t = 1.0 / (2.0 * theta)
                else:
                    t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                new_p = c * col_p - s * col_q
                new_q = s * col_p + c * col_q
                a[:, p] = new_p
                a[:, q] = new_q
                a[p, :] = new_p
                a[q, :] = new_q
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    return np.diag(a).copy(), v, -1


def smo_solve(rows, diag, y, C, tol, max_iter):
    """SMO on the C-SVM dual ``min 1/2 a'Qa - e'a``, ``0 <= a <= C``, ``y'a = 0``.

    ``rows(i)`` returns row ``i`` of the kernel matrix and ``diag`` its
    diagonal. Each step takes the maximal violator ``i`` from the
    up-set and the partner ``j`` in the low-set with the largest
    guaranteed decrease ``(v_i - v_j)^2 / eta_ij``, then solves the two-variable subproblem analytically.

    Returns ``(alpha, grad, n_iter, gap)``; ``gap`` above ``tol`` means
    the iteration cap was hit.
    """
    y = np.asarray(y, dtype=np.float64)
    p = y.shape[0]
    alpha = np.zeros(p)
    grad = -np.ones(p)
    pos = y > 0
    neg = ~pos
    it = 0
    gap = math.inf
    while True:
        v = -y * grad
        up = (pos & (alpha < C)) | (neg & (alpha > 0.0))
        low = (pos & (alpha > 0.0)) | (neg & (alpha < C))
        i = int(np.where(up, v, -np.inf).argmax())
        low_min = np.where(low, v, np.inf).min()
        gap = v[i] - low_min if up[i] and np.isfinite(low_min) else 0.0
        if gap <= tol or it >= max_iter:
            break
        ki = rows(i)
        # partner: largest guaranteed decrease (v_i - v_t)^2 / eta_it over violating t
        b = v[i] - v
        curv = diag[i] + diag - 2.0 * ki
        curv = np.where(curv > ETA_FLOOR, curv, ETA_FLOOR)
        gain = np.where(low & (b > 0.0), b * b / curv, -np.inf)
        j = int(gain.argmax())
        kj = rows(j)
        eta = diag[i] + diag[j] - 2.0 * ki[j]
        if eta < ETA_FLOOR:
            eta = ETA_FLOOR
        bound_i = C - alpha[i] if y[i] > 0 else alpha[i]
        bound_j = alpha[j] if y[j] > 0 else C - alpha[j]
        lam = (v[i] - v[j]) / eta
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
        grad += lam * y * (ki - kj)
        it += 1
    return alpha, grad, it, gap
