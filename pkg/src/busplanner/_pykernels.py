"""Pure-Python kernels. Used when the compiled ``_ckernels`` extension is absent.

Signatures and status codes mirror ``_ckernels.pyx`` exactly.
"""
import math

import numpy as np

PROJ_OK = 0
PROJ_BEFORE_START = 1
PROJ_BEYOND_END = 2
PROJ_BEYOND_CENTER = 3

ARC_OK = 0
ARC_OUT_OF_REACH = 1

_NEWTON_TOL = 1e-14
_MAX_NEWTON = 60


def _segment(xs, ys, psis, ds, k, tau):
    """Position, first and second tau-derivative of the Hermite segment ``k``."""
    t2 = tau * tau
    t3 = t2 * tau
    h00 = 2 * t3 - 3 * t2 + 1
    h10 = t3 - 2 * t2 + tau
    h01 = -2 * t3 + 3 * t2
    h11 = t3 - t2
    d00 = 6 * t2 - 6 * tau
    d10 = 3 * t2 - 4 * tau + 1
    d01 = -6 * t2 + 6 * tau
    d11 = 3 * t2 - 2 * tau
    e00 = 12 * tau - 6
    e10 = 6 * tau - 4
    e01 = -12 * tau + 6
    e11 = 6 * tau - 2
    x0 = xs[k]
    y0 = ys[k]
    x1 = xs[k + 1]
    y1 = ys[k + 1]
    mx0 = ds * math.cos(psis[k])
    my0 = ds * math.sin(psis[k])
    mx1 = ds * math.cos(psis[k + 1])
    my1 = ds * math.sin(psis[k + 1])
    px = h00 * x0 + h10 * mx0 + h01 * x1 + h11 * mx1
    py = h00 * y0 + h10 * my0 + h01 * y1 + h11 * my1
    dx = d00 * x0 + d10 * mx0 + d01 * x1 + d11 * mx1
    dy = d00 * y0 + d10 * my0 + d01 * y1 + d11 * my1
    ddx = e00 * x0 + e10 * mx0 + e01 * x1 + e11 * mx1
    ddy = e00 * y0 + e10 * my0 + e01 * y1 + e11 * my1
    return px, py, dx, dy, ddx, ddy


def _locate(n_seg, ds, s):
    k = int(math.floor(s / ds))
    if k >= n_seg:
        k = n_seg - 1
    if k < 0:
        k = 0
    tau = s / ds - k
    return k, tau


def hermite_eval(xs, ys, psis, ds, s_query):
    """Evaluate position and unit tangent of the interpolated path at stations ``s_query``."""
    s_query = np.asarray(s_query, dtype=float)
    n_seg = len(xs) - 1
    out = np.empty((s_query.size, 4))
    for j, s in enumerate(s_query.ravel()):
        k, tau = _locate(n_seg, ds, s)
        px, py, dx, dy, _, _ = _segment(xs, ys, psis, ds, k, tau)
        norm = math.hypot(dx, dy)
        out[j, 0] = px
        out[j, 1] = py
        out[j, 2] = dx / norm
        out[j, 3] = dy / norm
    return out


def _g(xs, ys, psis, ds, k, tau, qx, qy):
    px, py, dx, dy, ddx, ddy = _segment(xs, ys, psis, ds, k, tau)
    rx = px - qx
    ry = py - qy
    g = rx * dx + ry * dy
    dg = dx * dx + dy * dy + rx * ddx + ry * ddy
    return g, dg


def _root(xs, ys, psis, ds, k, qx, qy, g_lo, g_hi):
    # g is increasing through the foot point; keep a sign bracket for safety.
    lo, hi = 0.0, 1.0
    tau = g_lo / (g_lo - g_hi) if g_lo != g_hi else 0.5
    for _ in range(_MAX_NEWTON):
        g, dg = _g(xs, ys, psis, ds, k, tau, qx, qy)
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
        if abs(new - tau) < _NEWTON_TOL or hi - lo < _NEWTON_TOL:
            return new
        tau = new
    return tau


def project_point(xs, ys, psis, kappas, ds, qx, qy):
    """Orthogonal projection of one point onto the path. Returns ``(s, e_y, status)``."""
    n = len(xs)
    n_seg = n - 1
    d2 = (np.asarray(xs) - qx) ** 2 + (np.asarray(ys) - qy) ** 2
    j = int(np.argmin(d2))
    # g at station j, using the unit tangent scaled by ds (the segment tangent there)
    gj = ((xs[j] - qx) * math.cos(psis[j]) + (ys[j] - qy) * math.sin(psis[j])) * ds
    if gj == 0.0:
        k, tau = (j - 1, 1.0) if j > 0 else (0, 0.0)
    elif gj > 0.0:
        k = j - 1
        if k < 0:
            return 0.0, 0.0, PROJ_BEFORE_START
        while True:
            g0, _ = _g(xs, ys, psis, ds, k, 0.0, qx, qy)
            if g0 <= 0.0:
                g1, _ = _g(xs, ys, psis, ds, k, 1.0, qx, qy)
                tau = _root(xs, ys, psis, ds, k, qx, qy, g0, g1)
                break
            k -= 1
            if k < 0:
                return 0.0, 0.0, PROJ_BEFORE_START
    else:
        k = j
        if k >= n_seg:
            return 0.0, 0.0, PROJ_BEYOND_END
        while True:
            g1, _ = _g(xs, ys, psis, ds, k, 1.0, qx, qy)
            if g1 >= 0.0:
                g0, _ = _g(xs, ys, psis, ds, k, 0.0, qx, qy)
                tau = _root(xs, ys, psis, ds, k, qx, qy, g0, g1)
                break
            k += 1
            if k >= n_seg:
                return 0.0, 0.0, PROJ_BEYOND_END
    px, py, dx, dy, _, _ = _segment(xs, ys, psis, ds, k, tau)
    norm = math.hypot(dx, dy)
    e_y = (dx * (qy - py) - dy * (qx - px)) / norm
    s = (k + tau) * ds
    kappa = (1.0 - tau) * kappas[k] + tau * kappas[k + 1]
    if kappa * e_y >= 1.0:
        return s, e_y, PROJ_BEYOND_CENTER
    return s, e_y, PROJ_OK


def project_points(xs, ys, psis, kappas, ds, qx, qy):
    qx = np.asarray(qx, dtype=float).ravel()
    qy = np.asarray(qy, dtype=float).ravel()
    s_out = np.empty(qx.size)
    e_out = np.empty(qx.size)
    status = np.empty(qx.size, dtype=np.int64)
    for i in range(qx.size):
        s_out[i], e_out[i], status[i] = project_point(xs, ys, psis, kappas, ds, qx[i], qy[i])
    return s_out, e_out, status


def arc_edge(s, e_y, e_psi, kappa, s_hat, lateral):
    """Arc-circle edge offset at fixed ``s_hat`` and its partials in (e_y, e_psi).

    Uses a cancellation-free form that is smooth in ``kappa`` and reduces to the
    straight-body line at ``kappa == 0``. Returns ``(e_hat, d_ey, d_epsi, status)``.
    """
    s, e_y, e_psi, kappa, s_hat, lateral = np.broadcast_arrays(
        *(np.asarray(a, dtype=float) for a in (s, e_y, e_psi, kappa, s_hat, lateral))
    )
    sin_e = np.sin(e_psi)
    cos_e = np.cos(e_psi)
    scale = 1.0 + kappa * lateral
    with np.errstate(divide="ignore", invalid="ignore"):
        k = np.where(scale > 0.0, kappa / scale, 0.0)
        x = s_hat - s + lateral * sin_e
        q = cos_e * cos_e - k * k * x * x + 2.0 * k * x * sin_e
        bad = (scale <= 0.0) | (q <= 0.0)
        root = np.sqrt(np.where(bad, 1.0, q))
        num = k * x * x - 2.0 * x * sin_e
        den = cos_e + root
        y = -num / den
        dx = lateral * cos_e
        dnum = (2.0 * k * x - 2.0 * sin_e) * dx - 2.0 * x * cos_e
        dq = -2.0 * cos_e * sin_e - 2.0 * k * k * x * dx + 2.0 * k * (dx * sin_e + x * cos_e)
        dden = -sin_e + dq / (2.0 * root)
        dy = -(dnum * den - num * dden) / (den * den)
    e_hat = e_y + lateral * cos_e + y
    d_epsi = -lateral * sin_e + dy
    status = np.where(bad, ARC_OUT_OF_REACH, 0).astype(np.int64)
    e_hat = np.where(bad, np.nan, e_hat)
    d_epsi = np.where(bad, np.nan, d_epsi)
    return e_hat, np.ones(s.shape), d_epsi, status
