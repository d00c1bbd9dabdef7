"""Pure-Python reference kernels for the relaxation hot loops.

The compiled extension (``npcharm._kernels.core``) implements the same
functions with identical signatures and semantics; either backend may be
active at runtime (see ``npcharm._kernels``).  Keep the two in sync.

Conventions shared by both backends:

* hyperbolic points are upper half-plane pairs ``(x, y)`` with ``y > 0``;
  tangent vectors are chart 2-vectors at their base point.
* spd2 points are real symmetric positive-definite 2x2 matrices of
  determinant one; tangents are symmetric 2x2 matrices.
* Sweep kernels take a directed neighbor structure in CSR form: vertex
  ``v`` sees neighbors ``nbr[indptr[v]:indptr[v+1]]`` with weights ``wts``
  and a per-slot 2x2/dxd transform applied to the neighbor value before
  averaging.  Transform semantics per kind:
    - euclidean: ``x -> Q @ x + t``
    - hyperbolic: Mobius action of a det-1 2x2 real matrix
    - spd2: ``h -> M.T @ h @ M`` (``M`` is ``g^{-1}`` for the action
      ``h -> g^{-*} h g^{-1}``)
  Sweeps update ``values`` in place over ``order`` and return the max
  per-vertex displacement in the target metric.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND = "pure"


# ---------------------------------------------------------------------------
# hyperbolic upper half-plane
# ---------------------------------------------------------------------------

def hyp_distance(p, q):
    dx = q[0] - p[0]
    dy = q[1] - p[1]
    arg = 1.0 + (dx * dx + dy * dy) / (2.0 * p[1] * q[1])
    return math.acosh(max(arg, 1.0))


def _hyp_exp_normalized(v1, v2):
    """Geodesic from i with chart velocity (v1, v2); returns (x, y).

    All intermediates are sums of positive terms, so the result is
    accurate even for long geodesics.
    """
    n = math.hypot(v1, v2)
    if n < 1e-300:
        return 0.0, 1.0
    w1 = v1 / n
    w2 = v2 / n
    en = math.exp(n)
    emn = 1.0 / en
    sh = 0.5 * (en - emn)
    # Z0 - Z2 = cosh(n) - w2*sinh(n), rearranged cancellation-free
    s = 0.5 * (en * (1.0 - w2) + emn * (1.0 + w2))
    return sh * w1 / s, 1.0 / s


def hyp_exp(base, v):
    x0, y0 = base[0], base[1]
    qx, qy = _hyp_exp_normalized(v[0] / y0, v[1] / y0)
    return np.array([y0 * qx + x0, y0 * qy])


def hyp_log(base, p):
    x0, y0 = base[0], base[1]
    # normalize base to i; q' lives at (u, w)
    u = (p[0] - x0) / y0
    w = p[1] / y0
    # hyperboloid lift of q'; base lift is (1, 0, 0)
    Y0 = (u * u + w * w + 1.0) / (2.0 * w)
    Y1 = u / w
    Y2 = (u * u + w * w - 1.0) / (2.0 * w)
    d = math.acosh(max(Y0, 1.0))
    sn = math.sqrt(Y1 * Y1 + Y2 * Y2)  # = sinh(d)
    if sn < 1e-300:
        return np.zeros(2)
    f = d / sn
    # tangent at i has chart components (Y1, Y2); scale back to base
    return np.array([Y1 * f * y0, Y2 * f * y0])


def hyp_interpolate(p, q, t):
    x0, y0 = p[0], p[1]
    u = (q[0] - x0) / y0
    w = q[1] / y0
    Y0 = (u * u + w * w + 1.0) / (2.0 * w)
    Y1 = u / w
    Y2 = (u * u + w * w - 1.0) / (2.0 * w)
    d = math.acosh(max(Y0, 1.0))
    if d < 1e-300:
        return np.array([p[0], p[1]])
    sd = math.sinh(d)
    a = math.sinh((1.0 - t) * d) / sd
    b = math.sinh(t * d) / sd
    # blend of (1,0,0) and Y; Z0 - Z2 = a + b*(Y0 - Y2) is positive-sum
    s = a + b * (Y0 - Y2)
    return np.array([y0 * b * Y1 / s + x0, y0 / s])


def _mobius(m, x, y):
    # z -> (a z + b) / (c z + d) on z = x + i y
    a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    nr = a * x + b
    ni = a * y
    dr = c * x + d
    di = c * y
    den = dr * dr + di * di
    return (nr * dr + ni * di) / den, (ni * dr - nr * di) / den


def hyp_karcher(pts, wts, tol, max_iter):
    """Weighted Karcher mean; returns (point, final_tangent_norm, iters).

    Weights are normalized internally: the unit fixed-point step is only
    contractive for convex combinations.
    """
    pts = np.asarray(pts, dtype=float)
    wts = np.asarray(wts, dtype=float)
    wts = wts / wts.sum()
    m = len(pts)
    qx, qy = pts[0, 0], pts[0, 1]
    if m == 1:
        return np.array([qx, qy]), 0.0, 0
    disp = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        gx = 0.0
        gy = 0.0
        for i in range(m):
            u = (pts[i, 0] - qx) / qy
            w = pts[i, 1] / qy
            Y0 = (u * u + w * w + 1.0) / (2.0 * w)
            Y1 = u / w
            Y2 = (u * u + w * w - 1.0) / (2.0 * w)
            sn = math.sqrt(Y1 * Y1 + Y2 * Y2)
            if sn > 1e-300:
                f = math.acosh(max(Y0, 1.0)) / sn
                gx += wts[i] * Y1 * f
                gy += wts[i] * Y2 * f
        disp = math.hypot(gx, gy)  # metric norm at i is euclidean
        if disp <= tol:
            break
        nqx, nqy = _hyp_exp_normalized(gx, gy)
        qx, qy = qy * nqx + qx, qy * nqy
    return np.array([qx, qy]), disp, it


def hyp_sweep(values, indptr, nbr, wts, mob, order, tol, max_iter):
    maxd = 0.0
    for v in order:
        lo, hi = indptr[v], indptr[v + 1]
        k = hi - lo
        pts = np.empty((k, 2))
        for s in range(k):
            j = lo + s
            pts[s, 0], pts[s, 1] = _mobius(mob[j], values[nbr[j], 0], values[nbr[j], 1])
        new, _, _ = hyp_karcher(pts, wts[lo:hi], tol, max_iter)
        d = hyp_distance(values[v], new)
        if d > maxd:
            maxd = d
        values[v, 0] = new[0]
        values[v, 1] = new[1]
    return maxd


def hyp_energy(values, eu, ev, ew, mob):
    e = 0.0
    for j in range(len(eu)):
        x, y = _mobius(mob[j], values[ev[j], 0], values[ev[j], 1])
        d = hyp_distance(values[eu[j]], (x, y))
        e += 0.5 * ew[j] * d * d
    return e


# ---------------------------------------------------------------------------
# spd2: real symmetric positive definite 2x2, det 1
# ---------------------------------------------------------------------------

def _sym2_eig(a, b, d):
    """Eigensystem of [[a, b], [b, d]]: (l1, l2, c, s) with rotation
    [[c, -s], [s, c]]; l1 >= l2."""
    tr = a + d
    df = a - d
    disc = math.hypot(df, 2.0 * b)
    l1 = 0.5 * (tr + disc)
    l2 = 0.5 * (tr - disc)
    if disc < 1e-300:
        return l1, l2, 1.0, 0.0
    if abs(b) > 1e-300:
        if df >= 0.0:
            vx, vy = l1 - d, b
        else:
            vx, vy = b, l1 - a
        n = math.hypot(vx, vy)
        return l1, l2, vx / n, vy / n
    if a >= d:
        return l1, l2, 1.0, 0.0
    return l1, l2, 0.0, 1.0


def _sym2_fn(h, fn):
    l1, l2, c, s = _sym2_eig(h[0, 0], h[0, 1], h[1, 1])
    f1, f2 = fn(l1), fn(l2)
    return np.array([
        [f1 * c * c + f2 * s * s, (f1 - f2) * c * s],
        [(f1 - f2) * c * s, f1 * s * s + f2 * c * c],
    ])


def spd2_distance(p, q):
    # sqrt(n/2) = 1 at n = 2
    isq = _sym2_fn(np.asarray(p, float), lambda t: t ** -0.5)
    w = isq @ np.asarray(q, float) @ isq
    l1, l2, _, _ = _sym2_eig(w[0, 0], w[0, 1], w[1, 1])
    return math.hypot(math.log(l1), math.log(l2))


def spd2_interpolate(p, q, t):
    p = np.asarray(p, float)
    sq = _sym2_fn(p, math.sqrt)
    isq = _sym2_fn(p, lambda v: v ** -0.5)
    w = isq @ np.asarray(q, float) @ isq
    mid = _sym2_fn(w, lambda v: v ** t)
    return sq @ mid @ sq


def spd2_log(base, p):
    base = np.asarray(base, float)
    sq = _sym2_fn(base, math.sqrt)
    isq = _sym2_fn(base, lambda v: v ** -0.5)
    w = isq @ np.asarray(p, float) @ isq
    return sq @ _sym2_fn(w, math.log) @ sq


def spd2_exp(base, v):
    base = np.asarray(base, float)
    sq = _sym2_fn(base, math.sqrt)
    isq = _sym2_fn(base, lambda v_: v_ ** -0.5)
    w = isq @ np.asarray(v, float) @ isq
    out = sq @ _sym2_fn(w, math.exp) @ sq
    # guard determinant drift from roundoff
    det = out[0, 0] * out[1, 1] - out[0, 1] * out[1, 0]
    out /= math.sqrt(det)
    return out


def _spd2_tangent_norm(base, v):
    # |v|_g = sqrt(n/2) * ||base^{-1/2} v base^{-1/2}||_F, n = 2
    isq = _sym2_fn(base, lambda t: t ** -0.5)
    w = isq @ v @ isq
    return math.sqrt(w[0, 0] ** 2 + 2.0 * w[0, 1] ** 2 + w[1, 1] ** 2)


def spd2_karcher(pts, wts, tol, max_iter):
    pts = np.asarray(pts, dtype=float)
    wts = np.asarray(wts, dtype=float)
    wts = wts / wts.sum()
    m = len(pts)
    q = pts[0].copy()
    if m == 1:
        return q, 0.0, 0
    disp = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        sq = _sym2_fn(q, math.sqrt)
        isq = _sym2_fn(q, lambda t: t ** -0.5)
        g = np.zeros((2, 2))
        for i in range(m):
            w = isq @ pts[i] @ isq
            g += wts[i] * _sym2_fn(w, math.log)
        disp = math.sqrt(g[0, 0] ** 2 + 2.0 * g[0, 1] ** 2 + g[1, 1] ** 2)
        if disp <= tol:
            break
        q = sq @ _sym2_fn(g, math.exp) @ sq
        det = q[0, 0] * q[1, 1] - q[0, 1] * q[1, 0]
        q /= math.sqrt(det)
    return q, disp, it


def spd2_sweep(values, indptr, nbr, wts, gm, order, tol, max_iter):
    maxd = 0.0
    for v in order:
        lo, hi = indptr[v], indptr[v + 1]
        k = hi - lo
        pts = np.empty((k, 2, 2))
        for s in range(k):
            j = lo + s
            pts[s] = gm[j].T @ values[nbr[j]] @ gm[j]
        new, _, _ = spd2_karcher(pts, wts[lo:hi], tol, max_iter)
        d = spd2_distance(values[v], new)
        if d > maxd:
            maxd = d
        values[v] = new
    return maxd


def spd2_energy(values, eu, ev, ew, gm):
    e = 0.0
    for j in range(len(eu)):
        seen = gm[j].T @ values[ev[j]] @ gm[j]
        d = spd2_distance(values[eu[j]], seen)
        e += 0.5 * ew[j] * d * d
    return e


# ---------------------------------------------------------------------------
# euclidean
# ---------------------------------------------------------------------------

def euc_sweep(values, indptr, nbr, wts, rot, shift, order):
    """Exact star minimization: weighted average of transformed neighbors."""
    maxd = 0.0
    for v in order:
        lo, hi = indptr[v], indptr[v + 1]
        acc = np.zeros(values.shape[1])
        tw = 0.0
        for j in range(lo, hi):
            acc += wts[j] * (rot[j] @ values[nbr[j]] + shift[j])
            tw += wts[j]
        acc /= tw
        d = float(np.linalg.norm(values[v] - acc))
        if d > maxd:
            maxd = d
        values[v] = acc
    return maxd


def euc_energy(values, eu, ev, ew, rot, shift):
    e = 0.0
    for j in range(len(eu)):
        seen = rot[j] @ values[ev[j]] + shift[j]
        d = values[eu[j]] - seen
        e += 0.5 * ew[j] * float(d @ d)
    return e
