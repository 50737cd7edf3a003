"""Independent reference computations used by the tests.

Nothing here calls into the package's closed forms; every oracle is a plain
iterative method or an exhaustive enumeration.
"""

import itertools

import numpy as np

GOLDEN = 0.5 * (np.sqrt(5.0) - 1.0)


# ---------------------------------------------------------------------------
# dual problems  min_y 0.5 sum(y^2 / D) + g*(y) - a^T y,  batched over rows
# ---------------------------------------------------------------------------

def _soc_project(y, t):
    """Projection of (y, t) onto {||y|| <= t}, rows of a batch."""
    ny = np.sqrt(np.einsum("ij,ij->i", y, y))
    scale = np.clip(0.5 * (ny + t), 0.0, None)
    inside = ny <= t
    factor = np.where(inside, 1.0, scale / np.where(ny > 0, ny, 1.0))
    return y * factor[:, None], np.where(inside, t, scale)


def dual_pg(kind, a, D, param=None, index=None, steps=100_000):
    """Projected (proximal) gradient on the dual, ``steps`` iterations.

    ``kind`` is one of ``l1`` (param = lam), ``simplex`` (index), ``capped``
    (param = s, index), ``ball`` (param = radius, D a per-row scalar).
    ``a`` and ``D`` have shape (B, m); ``index`` has shape (B,).
    The step is ``min(D)`` per row, the inverse Lipschitz constant of the
    smooth part.
    """
    a = np.asarray(a, float)
    D = np.asarray(D, float)
    B, m = a.shape
    tau = D.min(axis=1, keepdims=True)
    rows = np.arange(B)
    lin = -a.copy()
    lo = np.full_like(a, -np.inf)
    hi = np.full_like(a, np.inf)
    if kind == "l1":
        lam = np.asarray(param, float).reshape(B, 1)
        lo[:] = -lam
        hi[:] = lam
    elif kind == "simplex":
        lin[rows, index] += 1.0
        lo[:] = 0.0
        lo[rows, index] = -np.inf
    elif kind == "capped":
        # off-index: prox of tau*max(y, 0) is z - clip(z, 0, tau)
        # at the index: projection onto y >= 0 is z - clip(z, -inf, 0)
        lin[rows, index] += np.asarray(param, float)
        lo[:] = 0.0
        hi[:] = tau
        lo[rows, index] = -np.inf
        hi[rows, index] = 0.0
    elif kind != "ball":
        raise ValueError(kind)
    keep = 1.0 - tau / D
    shift = -tau * lin
    y = np.zeros_like(a)
    z = np.empty_like(a)
    if kind == "ball":
        step_t = tau[:, 0] * np.asarray(param, float)
        t = np.zeros(B)
        for _ in range(steps):
            np.multiply(y, keep, out=z)
            z += shift
            y, t = _soc_project(z, t - step_t)
        return y
    w = np.empty_like(a)
    for _ in range(steps):
        np.multiply(y, keep, out=z)
        z += shift
        if kind == "capped":
            np.clip(z, lo, hi, out=w)
            np.subtract(z, w, out=y)
        elif kind == "simplex":
            np.maximum(z, lo, out=y)
        else:
            np.clip(z, lo, hi, out=y)
    return y


def dual_objective(kind, y, a, D, param=None, index=None):
    y = np.asarray(y, float)
    val = 0.5 * np.sum(y * y / D) - a @ y
    if kind == "l1":
        return val if np.all(np.abs(y) <= param + 1e-12) else np.inf
    if kind == "ball":
        return val + param * np.linalg.norm(y)
    off = np.ones(y.size, bool)
    off[index] = False
    if kind == "simplex":
        return val + y[index] if np.all(y[off] >= -1e-12) else np.inf
    if kind == "capped":
        return val + np.maximum(y[off], 0).sum() + param * y[index] if y[index] >= -1e-12 else np.inf
    raise ValueError(kind)


def dual_inclusion_residual(kind, y, a, D, param=None, index=None):
    """Distance of ``a - y/D`` from ``dg*(y)`` (componentwise, sup norm)."""
    r = a - y / D
    if kind == "l1":
        lam = param
        at_hi = np.isclose(y, lam, rtol=0, atol=1e-14 * (1 + lam))
        at_lo = np.isclose(y, -lam, rtol=0, atol=1e-14 * (1 + lam))
        if np.any(np.abs(y) > lam * (1 + 1e-14)):
            return np.inf
        res = np.where(at_hi, np.maximum(-r, 0), np.where(at_lo, np.maximum(r, 0), np.abs(r)))
        return float(res.max())
    if kind == "ball":
        ny = np.linalg.norm(y)
        if ny == 0:
            return max(float(np.linalg.norm(r)) - param, 0.0)
        return float(np.abs(r - param * y / ny).max())
    off = np.ones(y.size, bool)
    off[index] = False
    if kind == "simplex":
        if np.any(y[off] < 0):
            return np.inf
        res_off = np.where(y[off] > 0, np.abs(r[off]), np.maximum(r[off], 0))
        return float(max(res_off.max(initial=0.0), abs(r[index] - 1.0)))
    if kind == "capped":
        yo, ro = y[off], r[off]
        res_off = np.where(yo > 0, np.abs(ro - 1), np.where(yo < 0, np.abs(ro), np.maximum(np.maximum(-ro, ro - 1), 0)))
        ri = r[index] - param
        if y[index] < 0:
            return np.inf
        res_i = abs(ri) if y[index] > 0 else max(ri, 0.0)
        return float(max(res_off.max(initial=0.0), res_i))
    raise ValueError(kind)


# ---------------------------------------------------------------------------
# small convex QPs by exhaustive enumeration
# ---------------------------------------------------------------------------

def simplex_qp_enumerate(H, c):
    """Exact minimizer of ``0.5 w^T H w + c^T w`` over the unit simplex.

    Every face of the simplex is tried; the minimizer over the affine hull of
    the face is kept when it is feasible.  Exponential in n, fine for n <= 6.
    """
    H = np.asarray(H, float)
    c = np.asarray(c, float)
    n = c.size
    best, best_val = None, np.inf
    for size in range(1, n + 1):
        for face in itertools.combinations(range(n), size):
            idx = list(face)
            k = len(idx)
            kkt = np.zeros((k + 1, k + 1))
            kkt[:k, :k] = H[np.ix_(idx, idx)]
            kkt[:k, k] = 1.0
            kkt[k, :k] = 1.0
            rhs = np.concatenate([-c[idx], [1.0]])
            try:
                sol = np.linalg.solve(kkt, rhs)
            except np.linalg.LinAlgError:
                continue
            w = np.zeros(n)
            w[idx] = sol[:k]
            if np.any(w < -1e-13):
                continue
            w = np.maximum(w, 0.0)
            w /= w.sum()
            val = 0.5 * w @ H @ w + c @ w
            if val < best_val:
                best, best_val = w, val
    return best


def box_qp_enumerate(H, c, lo, hi, sum_cap=None):
    """Exact minimizer of ``0.5 w^T H w + c^T w`` over ``lo <= w <= hi``
    (optionally ``sum(w) <= sum_cap``) by enumerating active sets."""
    H = np.asarray(H, float)
    c = np.asarray(c, float)
    n = c.size
    best, best_val = None, np.inf
    caps = [False, True] if sum_cap is not None else [False]
    for state in itertools.product((0, 1, 2), repeat=n):  # free, at lo, at hi
        free = [j for j in range(n) if state[j] == 0]
        fixed = np.array([lo if s == 1 else hi for s in state], float)
        for cap in caps:
            w = np.where(np.array(state) == 0, 0.0, fixed)
            k = len(free)
            if k == 0 and cap:
                continue
            if k:
                rest = [j for j in range(n) if state[j] != 0]
                g = c[free] + H[np.ix_(free, rest)] @ w[rest]
                if cap:
                    kkt = np.zeros((k + 1, k + 1))
                    kkt[:k, :k] = H[np.ix_(free, free)]
                    kkt[:k, k] = 1.0
                    kkt[k, :k] = 1.0
                    rhs = np.concatenate([-g, [sum_cap - w[rest].sum()]])
                    try:
                        sol = np.linalg.solve(kkt, rhs)
                    except np.linalg.LinAlgError:
                        continue
                    w[free] = sol[:k]
                else:
                    w[free] = np.linalg.solve(H[np.ix_(free, free)], -g)
            tol = 1e-12
            if np.any(w < lo - tol) or np.any(w > hi + tol):
                continue
            if sum_cap is not None and w.sum() > sum_cap + tol:
                continue
            val = 0.5 * w @ H @ w + c @ w
            if val < best_val:
                best, best_val = w.copy(), val
    return best


# ---------------------------------------------------------------------------
# one-dimensional minimization
# ---------------------------------------------------------------------------

def golden_section(h, lo, hi, grid=401, iters=200):
    """Global-ish minimizer of a convex 1-D function: dense grid, then golden section."""
    ts = np.linspace(lo, hi, grid)
    vals = np.array([h(t) for t in ts])
    j = int(np.argmin(vals))
    a, b = ts[max(j - 1, 0)], ts[min(j + 1, grid - 1)]
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = h(c), h(d)
    for _ in range(iters):
        if b - a <= 1e-15 * (1.0 + abs(a) + abs(b)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = h(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = h(d)
    cands = [a, b, c, d, ts[j]]
    return min(cands, key=h)
