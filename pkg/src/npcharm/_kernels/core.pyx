# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for the relaxation hot loops.

Mirror of ``npcharm._kernels.pure``; keep semantics identical.
"""

from libc.math cimport acosh, exp, fabs, hypot, log, sinh, sqrt

import numpy as np
cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"


# ---------------------------------------------------------------------------
# hyperbolic upper half-plane
# ---------------------------------------------------------------------------

cdef inline double _acosh1(double x) nogil:
    return acosh(x) if x > 1.0 else 0.0


cdef inline double _hyp_dist(double px, double py, double qx, double qy) nogil:
    cdef double dx = qx - px
    cdef double dy = qy - py
    return _acosh1(1.0 + (dx * dx + dy * dy) / (2.0 * py * qy))


cdef inline void _hyp_exp_norm(double v1, double v2, double* ox, double* oy) nogil:
    cdef double n = hypot(v1, v2)
    cdef double w1, w2, en, emn, sh, s
    if n < 1e-300:
        ox[0] = 0.0
        oy[0] = 1.0
        return
    w1 = v1 / n
    w2 = v2 / n
    en = exp(n)
    emn = 1.0 / en
    sh = 0.5 * (en - emn)
    s = 0.5 * (en * (1.0 - w2) + emn * (1.0 + w2))
    ox[0] = sh * w1 / s
    oy[0] = 1.0 / s


cdef inline void _hyp_log_grad(double qx, double qy, double px, double py,
                               double* gx, double* gy) nogil:
    # log_q(p) in the chart of the normalized frame at i, scaled by 1 (at i)
    cdef double u = (px - qx) / qy
    cdef double w = py / qy
    cdef double Y0 = (u * u + w * w + 1.0) / (2.0 * w)
    cdef double Y1 = u / w
    cdef double Y2 = (u * u + w * w - 1.0) / (2.0 * w)
    cdef double sn = sqrt(Y1 * Y1 + Y2 * Y2)
    cdef double f
    if sn < 1e-300:
        gx[0] = 0.0
        gy[0] = 0.0
        return
    f = _acosh1(Y0) / sn
    gx[0] = Y1 * f
    gy[0] = Y2 * f


def hyp_distance(p, q):
    return _hyp_dist(p[0], p[1], q[0], q[1])


def hyp_exp(base, v):
    cdef double x0 = base[0], y0 = base[1]
    cdef double qx, qy
    _hyp_exp_norm(v[0] / y0, v[1] / y0, &qx, &qy)
    return np.array([y0 * qx + x0, y0 * qy])


def hyp_log(base, p):
    cdef double gx, gy
    _hyp_log_grad(base[0], base[1], p[0], p[1], &gx, &gy)
    return np.array([gx * base[1], gy * base[1]])


def hyp_interpolate(p, q, double t):
    cdef double x0 = p[0], y0 = p[1]
    cdef double u = (q[0] - x0) / y0
    cdef double w = q[1] / y0
    cdef double Y0 = (u * u + w * w + 1.0) / (2.0 * w)
    cdef double Y1 = u / w
    cdef double Y2 = (u * u + w * w - 1.0) / (2.0 * w)
    cdef double d = _acosh1(Y0)
    cdef double sd, a, b, s
    if d < 1e-300:
        return np.array([x0, y0])
    sd = sinh(d)
    a = sinh((1.0 - t) * d) / sd
    b = sinh(t * d) / sd
    s = a + b * (Y0 - Y2)
    return np.array([y0 * b * Y1 / s + x0, y0 / s])


cdef double _hyp_karcher_c(double[:, :] pts, double[:] wts, Py_ssize_t m,
                           double tol, int max_iter,
                           double* oqx, double* oqy) nogil:
    # weights normalized internally: the unit step contracts only for
    # convex combinations
    cdef double qx = pts[0, 0]
    cdef double qy = pts[0, 1]
    cdef double gx, gy, lx, ly, disp, ex, ey
    cdef double wsum = 0.0
    cdef Py_ssize_t i
    cdef int it
    if m == 1:
        oqx[0] = qx
        oqy[0] = qy
        return 0.0
    for i in range(m):
        wsum += wts[i]
    disp = 1e300
    for it in range(max_iter):
        gx = 0.0
        gy = 0.0
        for i in range(m):
            _hyp_log_grad(qx, qy, pts[i, 0], pts[i, 1], &lx, &ly)
            gx += wts[i] * lx
            gy += wts[i] * ly
        gx /= wsum
        gy /= wsum
        disp = hypot(gx, gy)
        if disp <= tol:
            break
        _hyp_exp_norm(gx, gy, &ex, &ey)
        qx = qy * ex + qx
        qy = qy * ey
    oqx[0] = qx
    oqy[0] = qy
    return disp


def hyp_karcher(pts, wts, double tol, int max_iter):
    cdef double[:, :] p = np.ascontiguousarray(pts, dtype=np.float64)
    cdef double[:] w = np.ascontiguousarray(wts, dtype=np.float64)
    cdef double qx, qy, disp
    disp = _hyp_karcher_c(p, w, p.shape[0], tol, max_iter, &qx, &qy)
    return np.array([qx, qy]), disp, 0


cdef inline void _mobius_c(double a, double b, double c, double d,
                           double x, double y, double* ox, double* oy) nogil:
    cdef double nr = a * x + b
    cdef double ni = a * y
    cdef double dr = c * x + d
    cdef double di = c * y
    cdef double den = dr * dr + di * di
    ox[0] = (nr * dr + ni * di) / den
    oy[0] = (ni * dr - nr * di) / den


def hyp_sweep(double[:, :] values, long long[:] indptr, long long[:] nbr,
              double[:] wts, double[:, :, :] mob, long long[:] order,
              double tol, int max_iter):
    cdef Py_ssize_t nv = order.shape[0]
    cdef Py_ssize_t deg_max = 0, v, lo, hi, s, j, k
    cdef double maxd = 0.0, d, qx, qy
    for v in range(values.shape[0]):
        if indptr[v + 1] - indptr[v] > deg_max:
            deg_max = indptr[v + 1] - indptr[v]
    buf = np.empty((deg_max, 2), dtype=np.float64)
    cdef double[:, :] pts = buf
    with nogil:
        for s in range(nv):
            v = order[s]
            lo = indptr[v]
            hi = indptr[v + 1]
            k = hi - lo
            for j in range(k):
                _mobius_c(mob[lo + j, 0, 0], mob[lo + j, 0, 1],
                          mob[lo + j, 1, 0], mob[lo + j, 1, 1],
                          values[nbr[lo + j], 0], values[nbr[lo + j], 1],
                          &pts[j, 0], &pts[j, 1])
            _hyp_karcher_c(pts[:k], wts[lo:hi], k, tol, max_iter, &qx, &qy)
            d = _hyp_dist(values[v, 0], values[v, 1], qx, qy)
            if d > maxd:
                maxd = d
            values[v, 0] = qx
            values[v, 1] = qy
    return maxd


def hyp_energy(double[:, :] values, long long[:] eu, long long[:] ev,
               double[:] ew, double[:, :, :] mob):
    cdef double e = 0.0, x, y, d
    cdef Py_ssize_t j
    with nogil:
        for j in range(eu.shape[0]):
            _mobius_c(mob[j, 0, 0], mob[j, 0, 1], mob[j, 1, 0], mob[j, 1, 1],
                      values[ev[j], 0], values[ev[j], 1], &x, &y)
            d = _hyp_dist(values[eu[j], 0], values[eu[j], 1], x, y)
            e += 0.5 * ew[j] * d * d
    return e


# ---------------------------------------------------------------------------
# spd2 real symmetric det-1
# ---------------------------------------------------------------------------

cdef inline void _sym2_eig_c(double a, double b, double d,
                             double* l1, double* l2, double* c, double* s) nogil:
    cdef double tr = a + d
    cdef double df = a - d
    cdef double disc = hypot(df, 2.0 * b)
    cdef double vx, vy, n
    l1[0] = 0.5 * (tr + disc)
    l2[0] = 0.5 * (tr - disc)
    if disc < 1e-300:
        c[0] = 1.0
        s[0] = 0.0
        return
    if fabs(b) > 1e-300:
        if df >= 0.0:
            vx = l1[0] - d
            vy = b
        else:
            vx = b
            vy = l1[0] - a
        n = hypot(vx, vy)
        c[0] = vx / n
        s[0] = vy / n
        return
    if a >= d:
        c[0] = 1.0
        s[0] = 0.0
    else:
        c[0] = 0.0
        s[0] = 1.0


ctypedef struct Sym2:
    double a
    double b
    double d


cdef inline Sym2 _mk(double a, double b, double d) nogil:
    cdef Sym2 m
    m.a = a
    m.b = b
    m.d = d
    return m


cdef inline Sym2 _sym2_pow(Sym2 h, double p) nogil:
    cdef double l1, l2, c, s, f1, f2
    _sym2_eig_c(h.a, h.b, h.d, &l1, &l2, &c, &s)
    f1 = l1 ** p
    f2 = l2 ** p
    return _mk(f1 * c * c + f2 * s * s, (f1 - f2) * c * s, f1 * s * s + f2 * c * c)


cdef inline Sym2 _sym2_log(Sym2 h) nogil:
    cdef double l1, l2, c, s, f1, f2
    _sym2_eig_c(h.a, h.b, h.d, &l1, &l2, &c, &s)
    f1 = log(l1)
    f2 = log(l2)
    return _mk(f1 * c * c + f2 * s * s, (f1 - f2) * c * s, f1 * s * s + f2 * c * c)


cdef inline Sym2 _sym2_exp(Sym2 h) nogil:
    cdef double l1, l2, c, s, f1, f2
    _sym2_eig_c(h.a, h.b, h.d, &l1, &l2, &c, &s)
    f1 = exp(l1)
    f2 = exp(l2)
    return _mk(f1 * c * c + f2 * s * s, (f1 - f2) * c * s, f1 * s * s + f2 * c * c)


cdef inline Sym2 _sandwich(Sym2 m, Sym2 h) nogil:
    # m @ h @ m for symmetric m, h
    cdef double x00 = m.a * h.a + m.b * h.b
    cdef double x01 = m.a * h.b + m.b * h.d
    cdef double x10 = m.b * h.a + m.d * h.b
    cdef double x11 = m.b * h.b + m.d * h.d
    return _mk(x00 * m.a + x01 * m.b, x00 * m.b + x01 * m.d, x10 * m.b + x11 * m.d)


cdef inline double _spd2_dist_c(Sym2 p, Sym2 q) nogil:
    cdef Sym2 isq = _sym2_pow(p, -0.5)
    cdef Sym2 w = _sandwich(isq, q)
    cdef double l1, l2, c, s
    _sym2_eig_c(w.a, w.b, w.d, &l1, &l2, &c, &s)
    return hypot(log(l1), log(l2))


cdef inline double _spd2_karcher_c(double[:, :, :] pts, double[:] wts, Py_ssize_t m,
                                   double tol, int max_iter, Sym2* out) nogil:
    cdef Sym2 q = _mk(pts[0, 0, 0], pts[0, 0, 1], pts[0, 1, 1])
    cdef Sym2 sq, isq, g, w
    cdef double disp, det
    cdef double wsum = 0.0
    cdef Py_ssize_t i
    cdef int it
    if m == 1:
        out[0] = q
        return 0.0
    for i in range(m):
        wsum += wts[i]
    disp = 1e300
    for it in range(max_iter):
        sq = _sym2_pow(q, 0.5)
        isq = _sym2_pow(q, -0.5)
        g = _mk(0.0, 0.0, 0.0)
        for i in range(m):
            w = _sandwich(isq, _mk(pts[i, 0, 0], pts[i, 0, 1], pts[i, 1, 1]))
            w = _sym2_log(w)
            g.a += wts[i] * w.a
            g.b += wts[i] * w.b
            g.d += wts[i] * w.d
        g.a /= wsum
        g.b /= wsum
        g.d /= wsum
        disp = sqrt(g.a * g.a + 2.0 * g.b * g.b + g.d * g.d)
        if disp <= tol:
            break
        q = _sandwich(sq, _sym2_exp(g))
        det = q.a * q.d - q.b * q.b
        det = sqrt(det)
        q.a /= det
        q.b /= det
        q.d /= det
    out[0] = q
    return disp


def spd2_distance(p, q):
    cdef double[:, :] pm = np.ascontiguousarray(p, dtype=np.float64)
    cdef double[:, :] qm = np.ascontiguousarray(q, dtype=np.float64)
    return _spd2_dist_c(_mk(pm[0, 0], pm[0, 1], pm[1, 1]),
                        _mk(qm[0, 0], qm[0, 1], qm[1, 1]))


cdef inline object _sym2_np(Sym2 m):
    return np.array([[m.a, m.b], [m.b, m.d]])


def spd2_interpolate(p, q, double t):
    cdef double[:, :] pm = np.ascontiguousarray(p, dtype=np.float64)
    cdef double[:, :] qm = np.ascontiguousarray(q, dtype=np.float64)
    cdef Sym2 pp = _mk(pm[0, 0], pm[0, 1], pm[1, 1])
    cdef Sym2 sq = _sym2_pow(pp, 0.5)
    cdef Sym2 isq = _sym2_pow(pp, -0.5)
    cdef Sym2 w = _sandwich(isq, _mk(qm[0, 0], qm[0, 1], qm[1, 1]))
    return _sym2_np(_sandwich(sq, _sym2_pow(w, t)))


def spd2_log(base, p):
    cdef double[:, :] bm = np.ascontiguousarray(base, dtype=np.float64)
    cdef double[:, :] pm = np.ascontiguousarray(p, dtype=np.float64)
    cdef Sym2 bb = _mk(bm[0, 0], bm[0, 1], bm[1, 1])
    cdef Sym2 sq = _sym2_pow(bb, 0.5)
    cdef Sym2 isq = _sym2_pow(bb, -0.5)
    cdef Sym2 w = _sandwich(isq, _mk(pm[0, 0], pm[0, 1], pm[1, 1]))
    return _sym2_np(_sandwich(sq, _sym2_log(w)))


def spd2_exp(base, v):
    cdef double[:, :] bm = np.ascontiguousarray(base, dtype=np.float64)
    cdef double[:, :] vm = np.ascontiguousarray(v, dtype=np.float64)
    cdef Sym2 bb = _mk(bm[0, 0], bm[0, 1], bm[1, 1])
    cdef Sym2 sq = _sym2_pow(bb, 0.5)
    cdef Sym2 isq = _sym2_pow(bb, -0.5)
    cdef Sym2 w = _sandwich(isq, _mk(vm[0, 0], vm[0, 1], vm[1, 1]))
    cdef Sym2 out = _sandwich(sq, _sym2_exp(w))
    cdef double det = sqrt(out.a * out.d - out.b * out.b)
    out.a /= det
    out.b /= det
    out.d /= det
    return _sym2_np(out)


def spd2_karcher(pts, wts, double tol, int max_iter):
    cdef double[:, :, :] p = np.ascontiguousarray(pts, dtype=np.float64)
    cdef double[:] w = np.ascontiguousarray(wts, dtype=np.float64)
    cdef Sym2 q
    cdef double disp = _spd2_karcher_c(p, w, p.shape[0], tol, max_iter, &q)
    return _sym2_np(q), disp, 0


cdef inline Sym2 _congr(double[:, :] m, Sym2 h) nogil:
    # m.T @ h @ m for general 2x2 m
    cdef double h00 = h.a, h01 = h.b, h11 = h.d
    cdef double t00 = h00 * m[0, 0] + h01 * m[1, 0]
    cdef double t01 = h00 * m[0, 1] + h01 * m[1, 1]
    cdef double t10 = h01 * m[0, 0] + h11 * m[1, 0]
    cdef double t11 = h01 * m[0, 1] + h11 * m[1, 1]
    return _mk(m[0, 0] * t00 + m[1, 0] * t10,
               m[0, 0] * t01 + m[1, 0] * t11,
               m[0, 1] * t01 + m[1, 1] * t11)


def spd2_sweep(double[:, :, :] values, long long[:] indptr, long long[:] nbr,
               double[:] wts, double[:, :, :] gm, long long[:] order,
               double tol, int max_iter):
    cdef Py_ssize_t nv = order.shape[0]
    cdef Py_ssize_t deg_max = 0, v, lo, hi, j, k, s
    cdef double maxd = 0.0, d
    cdef Sym2 cur, new, t
    for v in range(values.shape[0]):
        if indptr[v + 1] - indptr[v] > deg_max:
            deg_max = indptr[v + 1] - indptr[v]
    buf = np.empty((deg_max, 2, 2), dtype=np.float64)
    cdef double[:, :, :] pts = buf
    with nogil:
        for s in range(nv):
            v = order[s]
            lo = indptr[v]
            hi = indptr[v + 1]
            k = hi - lo
            for j in range(k):
                t = _congr(gm[lo + j],
                           _mk(values[nbr[lo + j], 0, 0], values[nbr[lo + j], 0, 1],
                               values[nbr[lo + j], 1, 1]))
                pts[j, 0, 0] = t.a
                pts[j, 0, 1] = t.b
                pts[j, 1, 0] = t.b
                pts[j, 1, 1] = t.d
            _spd2_karcher_c(pts[:k], wts[lo:hi], k, tol, max_iter, &new)
            cur = _mk(values[v, 0, 0], values[v, 0, 1], values[v, 1, 1])
            d = _spd2_dist_c(cur, new)
            if d > maxd:
                maxd = d
            values[v, 0, 0] = new.a
            values[v, 0, 1] = new.b
            values[v, 1, 0] = new.b
            values[v, 1, 1] = new.d
    return maxd


def spd2_energy(double[:, :, :] values, long long[:] eu, long long[:] ev,
                double[:] ew, double[:, :, :] gm):
    cdef double e = 0.0, d
    cdef Py_ssize_t j
    cdef Sym2 seen
    with nogil:
        for j in range(eu.shape[0]):
            seen = _congr(gm[j], _mk(values[ev[j], 0, 0], values[ev[j], 0, 1],
                                     values[ev[j], 1, 1]))
            d = _spd2_dist_c(_mk(values[eu[j], 0, 0], values[eu[j], 0, 1],
                                 values[eu[j], 1, 1]), seen)
            e += 0.5 * ew[j] * d * d
    return e


# ---------------------------------------------------------------------------
# euclidean
# ---------------------------------------------------------------------------

def euc_sweep(double[:, :] values, long long[:] indptr, long long[:] nbr,
              double[:] wts, double[:, :, :] rot, double[:, :] shift,
              long long[:] order):
    cdef Py_ssize_t nv = order.shape[0]
    cdef Py_ssize_t dim = values.shape[1]
    cdef Py_ssize_t v, lo, hi, j, s, a, b
    cdef double maxd = 0.0, d, tw, x
    buf = np.empty(dim, dtype=np.float64)
    cdef double[:] acc = buf
    with nogil:
        for s in range(nv):
            v = order[s]
            lo = indptr[v]
            hi = indptr[v + 1]
            for a in range(dim):
                acc[a] = 0.0
            tw = 0.0
            for j in range(lo, hi):
                for a in range(dim):
                    x = shift[j, a]
                    for b in range(dim):
                        x += rot[j, a, b] * values[nbr[j], b]
                    acc[a] += wts[j] * x
                tw += wts[j]
            d = 0.0
            for a in range(dim):
                acc[a] /= tw
                x = values[v, a] - acc[a]
                d += x * x
                values[v, a] = acc[a]
            d = sqrt(d)
            if d > maxd:
                maxd = d
    return maxd


def euc_energy(double[:, :] values, long long[:] eu, long long[:] ev,
               double[:] ew, double[:, :, :] rot, double[:, :] shift):
    cdef double e = 0.0, d2, x
    cdef Py_ssize_t j, a, b
    cdef Py_ssize_t dim = values.shape[1]
    with nogil:
        for j in range(eu.shape[0]):
            d2 = 0.0
            for a in range(dim):
                x = shift[j, a]
                for b in range(dim):
                    x += rot[j, a, b] * values[ev[j], b]
                x = values[eu[j], a] - x
                d2 += x * x
            e += 0.5 * ew[j] * d2
    return e
