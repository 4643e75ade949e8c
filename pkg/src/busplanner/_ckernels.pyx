# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: path interpolation, point projection, arc-circle edge rows.

Mirrors ``_pykernels`` one-to-one; results agree to floating-point roundoff.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, sqrt, floor, hypot, fabs, NAN

cnp.import_array()

cdef double NEWTON_TOL = 1e-14
cdef int MAX_NEWTON = 60

PROJ_OK = 0
PROJ_BEFORE_START = 1
PROJ_BEYOND_END = 2
PROJ_BEYOND_CENTER = 3

ARC_OK = 0
ARC_OUT_OF_REACH = 1


cdef struct SegEval:
    double px
    double py
    double dx
    double dy
    double ddx
    double ddy


cdef inline SegEval _segment(const double[::1] xs, const double[::1] ys,
                             const double[::1] cpsi, const double[::1] spsi,
                             double ds, Py_ssize_t k, double tau) noexcept nogil:
    cdef SegEval r
    cdef double t2 = tau * tau
    cdef double t3 = t2 * tau
    cdef double h00 = 2 * t3 - 3 * t2 + 1
    cdef double h10 = t3 - 2 * t2 + tau
    cdef double h01 = -2 * t3 + 3 * t2
    cdef double h11 = t3 - t2
    cdef double d00 = 6 * t2 - 6 * tau
    cdef double d10 = 3 * t2 - 4 * tau + 1
    cdef double d01 = -6 * t2 + 6 * tau
    cdef double d11 = 3 * t2 - 2 * tau
    cdef double e00 = 12 * tau - 6
    cdef double e10 = 6 * tau - 4
    cdef double e01 = -12 * tau + 6
    cdef double e11 = 6 * tau - 2
    cdef double mx0 = ds * cpsi[k]
    cdef double my0 = ds * spsi[k]
    cdef double mx1 = ds * cpsi[k + 1]
    cdef double my1 = ds * spsi[k + 1]
    r.px = h00 * xs[k] + h10 * mx0 + h01 * xs[k + 1] + h11 * mx1
    r.py = h00 * ys[k] + h10 * my0 + h01 * ys[k + 1] + h11 * my1
    r.dx = d00 * xs[k] + d10 * mx0 + d01 * xs[k + 1] + d11 * mx1
    r.dy = d00 * ys[k] + d10 * my0 + d01 * ys[k + 1] + d11 * my1
    r.ddx = e00 * xs[k] + e10 * mx0 + e01 * xs[k + 1] + e11 * mx1
    r.ddy = e00 * ys[k] + e10 * my0 + e01 * ys[k + 1] + e11 * my1
    return r


cdef inline void _g(const double[::1] xs, const double[::1] ys,
                    const double[::1] cpsi, const double[::1] spsi,
                    double ds, Py_ssize_t k, double tau, double qx, double qy,
                    double* g, double* dg) noexcept nogil:
    cdef SegEval r = _segment(xs, ys, cpsi, spsi, ds, k, tau)
    cdef double rx = r.px - qx
    cdef double ry = r.py - qy
    g[0] = rx * r.dx + ry * r.dy
    dg[0] = r.dx * r.dx + r.dy * r.dy + rx * r.ddx + ry * r.ddy


cdef double _root(const double[::1] xs, const double[::1] ys,
                  const double[::1] cpsi, const double[::1] spsi,
                  double ds, Py_ssize_t k, double qx, double qy,
                  double g_lo, double g_hi) noexcept nogil:
    cdef double lo = 0.0, hi = 1.0, tau, g, dg, step, new
    cdef int it
    tau = g_lo / (g_lo - g_hi) if g_lo != g_hi else 0.5
    for it in range(MAX_NEWTON):
        _g(xs, ys, cpsi, spsi, ds, k, tau, qx, qy, &g, &dg)
        if g == 0.0:
            return tau
        if g < 0.0:
            lo = tau
        else:
            hi = tau
        step = g / dg if dg > 0.0 else 0.0
        new = tau - step
        if dg <= 0.0 or new <= lo or new >= hi:
            new = 0.5 * (lo + hi)
        if fabs(new - tau) < NEWTON_TOL or hi - lo < NEWTON_TOL:
            return new
        tau = new
    return tau


cdef inline void _locate(Py_ssize_t n_seg, double ds, double s,
                         Py_ssize_t* k, double* tau) noexcept nogil:
    cdef Py_ssize_t kk = <Py_ssize_t>floor(s / ds)
    if kk >= n_seg:
        kk = n_seg - 1
    if kk < 0:
        kk = 0
    k[0] = kk
    tau[0] = s / ds - kk


def hermite_eval(xs, ys, psis, double ds, s_query):
    cdef const double[::1] xv = np.ascontiguousarray(xs, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(ys, dtype=np.float64)
    cdef const double[::1] cpsi = np.ascontiguousarray(np.cos(psis), dtype=np.float64)
    cdef const double[::1] spsi = np.ascontiguousarray(np.sin(psis), dtype=np.float64)
    cdef const double[::1] sq = np.ascontiguousarray(np.ravel(s_query), dtype=np.float64)
    cdef Py_ssize_t n_seg = xv.shape[0] - 1
    cdef Py_ssize_t m = sq.shape[0], j, k
    cdef double tau, norm
    cdef SegEval r
    out = np.empty((m, 4))
    cdef double[:, ::1] ov = out
    with nogil:
        for j in range(m):
            _locate(n_seg, ds, sq[j], &k, &tau)
            r = _segment(xv, yv, cpsi, spsi, ds, k, tau)
            norm = hypot(r.dx, r.dy)
            ov[j, 0] = r.px
            ov[j, 1] = r.py
            ov[j, 2] = r.dx / norm
            ov[j, 3] = r.dy / norm
    return out


cdef int _project(const double[::1] xs, const double[::1] ys,
                  const double[::1] cpsi, const double[::1] spsi,
                  const double[::1] kappas, double ds, double qx, double qy,
                  double* s_out, double* e_out) noexcept nogil:
    cdef Py_ssize_t n = xs.shape[0]
    cdef Py_ssize_t n_seg = n - 1
    cdef Py_ssize_t i, j = 0, k
    cdef double best = 1e300, d2, gj, g0, g1, dg, tau, norm, e_y, kappa
    cdef SegEval r
    for i in range(n):
        d2 = (xs[i] - qx) * (xs[i] - qx) + (ys[i] - qy) * (ys[i] - qy)
        if d2 < best:
            best = d2
            j = i
    gj = ((xs[j] - qx) * cpsi[j] + (ys[j] - qy) * spsi[j]) * ds
    if gj == 0.0:
        if j > 0:
            k = j - 1
            tau = 1.0
        else:
            k = 0
            tau = 0.0
    elif gj > 0.0:
        k = j - 1
        if k < 0:
            return 1
        while True:
            _g(xs, ys, cpsi, spsi, ds, k, 0.0, qx, qy, &g0, &dg)
            if g0 <= 0.0:
                _g(xs, ys, cpsi, spsi, ds, k, 1.0, qx, qy, &g1, &dg)
                tau = _root(xs, ys, cpsi, spsi, ds, k, qx, qy, g0, g1)
                break
            k -= 1
            if k < 0:
                return 1
    else:
        k = j
        if k >= n_seg:
            return 2
        while True:
            _g(xs, ys, cpsi, spsi, ds, k, 1.0, qx, qy, &g1, &dg)
            if g1 >= 0.0:
                _g(xs, ys, cpsi, spsi, ds, k, 0.0, qx, qy, &g0, &dg)
                tau = _root(xs, ys, cpsi, spsi, ds, k, qx, qy, g0, g1)
                break
            k += 1
            if k >= n_seg:
                return 2
    r = _segment(xs, ys, cpsi, spsi, ds, k, tau)
    norm = hypot(r.dx, r.dy)
    e_y = (r.dx * (qy - r.py) - r.dy * (qx - r.px)) / norm
    s_out[0] = (k + tau) * ds
    e_out[0] = e_y
    kappa = (1.0 - tau) * kappas[k] + tau * kappas[k + 1]
    if kappa * e_y >= 1.0:
        return 3
    return 0


def project_point(xs, ys, psis, kappas, double ds, double qx, double qy):
    s, e, st = project_points(xs, ys, psis, kappas, ds, [qx], [qy])
    return float(s[0]), float(e[0]), int(st[0])


def project_points(xs, ys, psis, kappas, double ds, qx, qy):
    cdef const double[::1] xv = np.ascontiguousarray(xs, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(ys, dtype=np.float64)
    cdef const double[::1] cpsi = np.ascontiguousarray(np.cos(psis), dtype=np.float64)
    cdef const double[::1] spsi = np.ascontiguousarray(np.sin(psis), dtype=np.float64)
    cdef const double[::1] kv = np.ascontiguousarray(kappas, dtype=np.float64)
    cdef const double[::1] qxv = np.ascontiguousarray(np.ravel(qx), dtype=np.float64)
    cdef const double[::1] qyv = np.ascontiguousarray(np.ravel(qy), dtype=np.float64)
    cdef Py_ssize_t m = qxv.shape[0], i
    s_arr = np.zeros(m)
    e_arr = np.zeros(m)
    st_arr = np.zeros(m, dtype=np.int64)
    cdef double[::1] sv = s_arr
    cdef double[::1] ev = e_arr
    cdef cnp.int64_t[::1] stv = st_arr
    with nogil:
        for i in range(m):
            stv[i] = _project(xv, yv, cpsi, spsi, kv, ds, qxv[i], qyv[i], &sv[i], &ev[i])
    return s_arr, e_arr, st_arr


def arc_edge(s, e_y, e_psi, kappa, s_hat, lateral):
    bs = np.broadcast_arrays(*(np.asarray(a, dtype=np.float64) for a in (s, e_y, e_psi, kappa, s_hat, lateral)))
    shape = bs[0].shape
    cdef const double[::1] sv = np.ascontiguousarray(bs[0]).ravel()
    cdef const double[::1] eyv = np.ascontiguousarray(bs[1]).ravel()
    cdef const double[::1] epv = np.ascontiguousarray(bs[2]).ravel()
    cdef const double[::1] kv = np.ascontiguousarray(bs[3]).ravel()
    cdef const double[::1] shv = np.ascontiguousarray(bs[4]).ravel()
    cdef const double[::1] latv = np.ascontiguousarray(bs[5]).ravel()
    cdef Py_ssize_t m = sv.shape[0], i
    e_hat = np.empty(m)
    d_ey = np.ones(m)
    d_epsi = np.empty(m)
    status = np.zeros(m, dtype=np.int64)
    cdef double[::1] eh = e_hat
    cdef double[::1] dp = d_epsi
    cdef cnp.int64_t[::1] st = status
    cdef double se, ce, scale, k, x, q, root, num, den, dx, dnum, dq, dden
    with nogil:
        for i in range(m):
            se = sin(epv[i])
            ce = cos(epv[i])
            scale = 1.0 + kv[i] * latv[i]
            if scale <= 0.0:
                st[i] = 1
                eh[i] = NAN
                dp[i] = NAN
                continue
            k = kv[i] / scale
            x = shv[i] - sv[i] + latv[i] * se
            q = ce * ce - k * k * x * x + 2.0 * k * x * se
            if q <= 0.0:
                st[i] = 1
                eh[i] = NAN
                dp[i] = NAN
                continue
            root = sqrt(q)
            num = k * x * x - 2.0 * x * se
            den = ce + root
            dx = latv[i] * ce
            dnum = (2.0 * k * x - 2.0 * se) * dx - 2.0 * x * ce
            dq = -2.0 * ce * se - 2.0 * k * k * x * dx + 2.0 * k * (dx * se + x * ce)
            dden = -se + dq / (2.0 * root)
            eh[i] = eyv[i] + latv[i] * ce - num / den
            dp[i] = -latv[i] * se - (dnum * den - num * dden) / (den * den)
    return e_hat.reshape(shape), d_ey.reshape(shape), d_epsi.reshape(shape), status.reshape(shape)
