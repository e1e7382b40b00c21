"""Slow, independent reference solvers used only by the tests."""

import math

import numpy as np


# ---------------------------------------------------------------- eigen

def _poly_roots_symmetric(a):
    """Eigenvalues of a small symmetric matrix from its characteristic polynomial."""
    n = a.shape[0]
    if n == 1:
        return np.array([a[0, 0]])
    if n == 2:
        tr = a[0, 0] + a[1, 1]
        det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
        disc = math.sqrt(max(tr * tr / 4 - det, 0.0))
        return np.array([tr / 2 + disc, tr / 2 - disc])
    if n == 3:
        # trigonometric solution of the depressed cubic
        q = np.trace(a) / 3
        b = a - q * np.eye(3)
        p = math.sqrt(max(np.sum(b * b) / 6, 0.0))
        if p == 0:
            return np.array([q, q, q])
        r = np.linalg.det(b / p) / 2
        phi = math.acos(min(1.0, max(-1.0, r))) / 3
        l1 = q + 2 * p * math.cos(phi)
        l3 = q + 2 * p * math.cos(phi + 2 * math.pi / 3)
        return np.array([l1, 3 * q - l1 - l3, l3])
    # Faddeev-LeVerrier coefficients, then polynomial roots
    coeffs = [1.0]
    m = np.zeros_like(a)
    for k in range(1, n + 1):
        m = a @ m + coeffs[-1] * np.eye(n)
        coeffs.append(-np.trace(a @ m) / k)
    return np.sort(np.real(np.roots(coeffs)))[::-1]


def _inverse_iteration(a, lam, found, rng, steps=8):
    n = a.shape[0]
    v = rng.normal(size=n)
    shift = lam + 1e-10 * max(1.0, abs(lam))
    for _ in range(steps):
        for u in found:
            v -= (u @ v) * u
        try:
            v = np.linalg.solve(a - shift * np.eye(n), v)
        except np.linalg.LinAlgError:
            pass
        for u in found:
            v -= (u @ v) * u
        v /= np.linalg.norm(v)
    return v


def eig_oracle_charpoly(a, seed=0):
    """Roots of the characteristic polynomial refined by inverse iteration (n <= 4)."""
    a = np.asarray(a, dtype=np.float64)
    rng = np.random.default_rng(seed)
    roots = _poly_roots_symmetric(a)
    found, lams = [], []
    for lam in sorted(roots, reverse=True):
        v = _inverse_iteration(a, lam, found, rng)
        found.append(v)
        lams.append(float(v @ a @ v))
    return np.array(lams), np.column_stack(found)


def eig_oracle_power(a, seed=0, max_iter=20000, rtol=1e-15):
    """Power iteration with deflation, each pair polished by shifted inverse iteration."""
    a = np.asarray(a, dtype=np.float64)
    n = a.shape[0]
    rng = np.random.default_rng(seed)
    found, lams = [], []
    deflated = a.copy()
    for _ in range(n):
        v = rng.normal(size=n)
        for u in found:
            v -= (u @ v) * u
        v /= np.linalg.norm(v)
        lam = v @ deflated @ v
        for _ in range(max_iter):
            w = deflated @ v
            for u in found:
                w -= (u @ w) * u
            norm = np.linalg.norm(w)
            if norm == 0:
                break
            w /= norm
            new = w @ deflated @ w
            v = w
            if abs(new - lam) <= rtol * max(1.0, abs(new)):
                lam = new
                break
            lam = new
        v = _inverse_iteration(a, lam, found, rng, steps=3)
        lam = float(v @ a @ v)
        found.append(v)
        lams.append(lam)
        deflated = deflated - lam * np.outer(v, v)
    order = np.argsort(lams)[::-1]
    return np.array(lams)[order], np.column_stack(found)[:, order]


def max_subspace_sine(v1, v2):
    """Sine of the largest principal angle between two column spaces."""
    q1, _ = np.linalg.qr(v1)
    q2, _ = np.linalg.qr(v2)
    resid = q2 - q1 @ (q1.T @ q2)
    return float(np.linalg.norm(resid, 2))


def eigen_clusters(values, gap):
    """Index groups of eigenvalues closer than ``gap`` to a neighbour."""
    groups = [[0]]
    for k in range(1, len(values)):
        if abs(values[k - 1] - values[k]) < gap:
            groups[-1].append(k)
        else:
            groups.append([k])
    return groups


# ---------------------------------------------------------------- SVM dual

def gram_direct(kind, x, gamma=None, degree=3, coef0=1.0):
    x = np.asarray(x, dtype=np.float64)
    n, d = x.shape
    out = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            if kind == "linear":
                out[i, j] = sum(x[i, k] * x[j, k] for k in range(d))
            elif kind == "polynomial":
                out[i, j] = (sum(x[i, k] * x[j, k] for k in range(d)) + coef0) ** degree
            else:
                out[i, j] = math.exp(-gamma * sum((x[i, k] - x[j, k]) ** 2 for k in range(d)))
    return out


def dual_value(a, q):
    return float(a.sum() - 0.5 * a @ q @ a)


def dual_qp_oracle(gram, y, C, max_iter=200, sigma=0.1):
    """Primal-dual interior-point solve of the dense C-SVM dual.

    Maximises ``e'a - a'Qa/2`` over ``0 <= a <= C``, ``y'a = 0`` by
    Newton steps on the perturbed KKT system, with multipliers ``z`` for
    ``a >= 0`` and ``w`` for ``a <= C``. Returns ``(value, alpha)``.
    """
    y = np.asarray(y, dtype=np.float64)
    q = np.asarray(gram, dtype=np.float64) * np.outer(y, y)
    p = len(y)
    a = np.full(p, C / 2)
    s = np.full(p, C / 2)  # slack of the upper bound, kept separate to avoid C - a cancellation
    z = np.ones(p)
    w = np.ones(p)
    b = 0.0
    scale = max(1.0, C, np.abs(q).max())
    for _ in range(max_iter):
        mu = (a @ z + s @ w) / (2 * p)
        r_d = q @ a - 1.0 + b * y - z + w
        r_p = y @ a
        r_b = a + s - C
        if mu < 1e-14 * scale and np.abs(r_d).max() < 1e-11 * scale and abs(r_p) < 1e-11 * C:
            break
        t = sigma * mu
        lhs = np.zeros((p + 1, p + 1))
        lhs[:p, :p] = q + np.diag(z / a + w / s)
        lhs[:p, p] = y
        lhs[p, :p] = y
        rhs = np.concatenate([-r_d + (t / a - z) - (t / s - w + w * r_b / s), [-r_p]])
        sol = np.linalg.solve(lhs, rhs)
        da, db = sol[:p], sol[p]
        ds = -r_b - da
        dz = (t - z * a - z * da) / a
        dw = (t - w * s - w * ds) / s
        step = 1.0
        for v, dv in ((a, da), (s, ds), (z, dz), (w, dw)):
            neg = dv < 0
            if np.any(neg):
                step = min(step, 0.995 * float(np.min(-v[neg] / dv[neg])))
        a = a + step * da
        s = s + step * ds
        z = z + step * dz
        w = w + step * dw
        b = b + step * db
    a = np.clip(a, 0.0, C)
    return dual_value(a, q), a


# ---------------------------------------------------------------- MLP

def finite_difference_grad(loss_fn, params, step=1e-6):
    """Central differences for every entry of every parameter (arrays or floats)."""
    grads = []
    params = [np.array(p, dtype=np.float64) for p in params]
    for k, p in enumerate(params):
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            plus = [q.copy() for q in params]
            minus = [q.copy() for q in params]
            plus[k][idx] += step
            minus[k][idx] -= step
            g[idx] = (loss_fn(plus) - loss_fn(minus)) / (2 * step)
        grads.append(g)
    return grads
