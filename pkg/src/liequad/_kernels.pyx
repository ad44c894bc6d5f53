# cython: language_level=3
"""Compiled integration kernels.

Same algorithms and calling conventions as ``_pykernels``; see that module
for the reference implementation.
"""

import numpy as np
from libc.math cimport sqrt, sin, cos, ceil, fabs, pow

cdef enum:
    NMAX = 9

cdef enum:
    COMPLEX = 0
    POLAR = 1
    ALGEBRA = 2
    RIEMANNIAN = 3

cdef enum:
    RK4_FIXED = 0
    RK45_ADAPTIVE = 1

cdef enum:
    OK = 0
    STEP_UNDERFLOW = 1
    BUDGET = 2
    RADIAL_UNDERFLOW = 3

cdef double A21 = 1.0 / 5
cdef double A31 = 3.0 / 40, A32 = 9.0 / 40
cdef double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9
cdef double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561, A54 = -212.0 / 729
cdef double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176
cdef double A65 = -5103.0 / 18656
cdef double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784
cdef double B6 = 11.0 / 84
cdef double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920
cdef double E5 = -17253.0 / 339200, E6 = 22.0 / 525, E7 = -1.0 / 40

cdef double SAFETY = 0.9, FAC_MIN = 0.2, FAC_MAX = 5.0
cdef double EPS = 2.220446049250313e-16

_DIMS = {COMPLEX: 6, POLAR: 6, ALGEBRA: 9, RIEMANNIAN: 6}


cdef inline int _rhs(int system, const double* y, const double* p, double sign,
                     double* out) noexcept nogil:
    cdef double v1, v2, d1, d2, s, q, dq, ddq, w, dw, k
    cdef double x1, x2, x3, u1, u2, u3, g1, g2, g3
    cdef int i
    if system == COMPLEX:
        v1 = y[0]; v2 = y[1]; d1 = y[2]; d2 = y[3]
        s = d1 * v2 - d2 * v1 - p[0]
        out[0] = sign * d1
        out[1] = sign * d2
        out[2] = sign * y[4]
        out[3] = sign * y[5]
        out[4] = -sign * s * v2
        out[5] = sign * s * v1
    elif system == POLAR:
        q = y[0]; dq = y[1]; ddq = y[2]; w = y[4]; dw = y[5]
        if q <= p[1]:
            return RADIAL_UNDERFLOW
        out[0] = sign * dq
        out[1] = sign * ddq
        out[2] = sign * (3.0 * dq * w * w + 3.0 * q * dw * w)
        out[3] = sign * w
        out[4] = sign * dw
        out[5] = sign * ((-3.0 * dq * dw - 3.0 * ddq * w + q * w * w * w - q * q * q * w
                          - p[0] * q) / q)
    elif system == ALGEBRA:
        k = p[3]
        x1 = y[0]; x2 = y[1]; x3 = y[2]
        u1 = y[3]; u2 = y[4]; u3 = y[5]
        g1 = k * (u2 * x3 - u3 * x2) + p[0]
        g2 = k * (u3 * x1 - u1 * x3) + p[1]
        g3 = k * (u1 * x2 - u2 * x1) + p[2]
        for i in range(6):
            out[i] = sign * y[i + 3]
        out[6] = sign * k * (g2 * x3 - g3 * x2)
        out[7] = sign * k * (g3 * x1 - g1 * x3)
        out[8] = sign * k * (g1 * x2 - g2 * x1)
    else:
        k = p[3]
        x1 = y[0]; x2 = y[1]; x3 = y[2]
        u1 = y[3]; u2 = y[4]; u3 = y[5]
        out[0] = sign * u1
        out[1] = sign * u2
        out[2] = sign * u3
        out[3] = sign * (k * (u2 * x3 - u3 * x2) + p[0])
        out[4] = sign * (k * (u3 * x1 - u1 * x3) + p[1])
        out[5] = sign * (k * (u1 * x2 - u2 * x1) + p[2])
    return OK


def rhs(int system, y, params, double sign=1.0):
    """Vector field of ``system`` at ``y`` (convenience wrapper)."""
    cdef double yy[NMAX]
    cdef double pp[4]
    cdef double out[NMAX]
    cdef int n = len(y), i
    for i in range(n):
        yy[i] = y[i]
    for i in range(len(params)):
        pp[i] = params[i]
    if _rhs(system, yy, pp, sign, out) != OK:
        raise FloatingPointError("rhs status %d" % RADIAL_UNDERFLOW)
    return np.array([out[i] for i in range(n)])


def integrate(int system, y0, params, times, int method, double step, double atol,
              double rtol, long max_steps, double sign):
    """Integrate ``y' = sign * f(y)`` and sample it on ``times``.

    Returns ``(out, nsteps, status, t_fail)``; rows past a failure are NaN.
    """
    cdef int n = _DIMS[system]
    cdef const double[::1] tv = np.ascontiguousarray(times, dtype=np.float64)
    cdef Py_ssize_t nt = tv.shape[0]
    out = np.full((nt, n), np.nan)
    cdef double[:, ::1] ov = out
    cdef double p[4]
    cdef double ya[NMAX]
    cdef double yb[NMAX]
    cdef double ka[NMAX]
    cdef double kb[NMAX]
    cdef double k2[NMAX]
    cdef double k3[NMAX]
    cdef double k4[NMAX]
    cdef double k5[NMAX]
    cdef double k6[NMAX]
    cdef double yt[NMAX]
    cdef double *y = ya
    cdef double *yn = yb
    cdef double *k1 = ka
    cdef double *k7 = kb
    cdef double *tmp
    cdef double t, tn, h, hh, err, e, sc, r, fac
    cdef long nsteps = 0, m, sub
    cdef Py_ssize_t j
    cdef int i, st, last
    p[0] = p[1] = p[2] = p[3] = 0.0
    for i in range(len(params)):
        p[i] = params[i]
    for i in range(n):
        y[i] = y0[i]
        ov[0, i] = y[i]
    t = tv[0]

    with nogil:
        if method == RK4_FIXED:
            for j in range(1, nt):
                tn = tv[j]
                m = <long>ceil((tn - t) / step - 1e-9)
                if m < 1:
                    m = 1
                h = (tn - t) / m
                for sub in range(m):
                    if nsteps >= max_steps:
                        with gil:
                            return out, nsteps, BUDGET, t
                    st = _rhs(system, y, p, sign, k1)
                    for i in range(n):
                        yt[i] = y[i] + 0.5 * h * k1[i]
                    st = st | _rhs(system, yt, p, sign, k2)
                    for i in range(n):
                        yt[i] = y[i] + 0.5 * h * k2[i]
                    st = st | _rhs(system, yt, p, sign, k3)
                    for i in range(n):
                        yt[i] = y[i] + h * k3[i]
                    st = st | _rhs(system, yt, p, sign, k4)
                    if st != OK:
                        with gil:
                            return out, nsteps, RADIAL_UNDERFLOW, t
                    for i in range(n):
                        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                    t += h
                    nsteps += 1
                t = tn
                for i in range(n):
                    ov[j, i] = y[i]
            with gil:
                return out, nsteps, OK, t

        if _rhs(system, y, p, sign, k1) != OK:
            with gil:
                return out, 0, RADIAL_UNDERFLOW, t
        h = tv[nt - 1] - tv[0]
        if h > 1e-3:
            h = 1e-3
        for j in range(1, nt):
            tn = tv[j]
            while t < tn:
                hh = h
                last = 0
                if hh >= tn - t:
                    hh = tn - t
                    last = 1
                while True:
                    if nsteps >= max_steps:
                        with gil:
                            return out, nsteps, BUDGET, t
                    if hh <= 16.0 * EPS * (fabs(t) if fabs(t) > 1.0 else 1.0):
                        with gil:
                            return out, nsteps, STEP_UNDERFLOW, t
                    for i in range(n):
                        yt[i] = y[i] + hh * A21 * k1[i]
                    st = _rhs(system, yt, p, sign, k2)
                    for i in range(n):
                        yt[i] = y[i] + hh * (A31 * k1[i] + A32 * k2[i])
                    st = st | _rhs(system, yt, p, sign, k3)
                    for i in range(n):
                        yt[i] = y[i] + hh * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
                    st = st | _rhs(system, yt, p, sign, k4)
                    for i in range(n):
                        yt[i] = y[i] + hh * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i]
                                             + A54 * k4[i])
                    st = st | _rhs(system, yt, p, sign, k5)
                    for i in range(n):
                        yt[i] = y[i] + hh * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i]
                                             + A64 * k4[i] + A65 * k5[i])
                    st = st | _rhs(system, yt, p, sign, k6)
                    for i in range(n):
                        yn[i] = y[i] + hh * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i]
                                             + B5 * k5[i] + B6 * k6[i])
                    st = st | _rhs(system, yn, p, sign, k7)
                    nsteps += 1
                    if st != OK:
                        with gil:
                            return out, nsteps, RADIAL_UNDERFLOW, t
                    err = 0.0
                    for i in range(n):
                        e = hh * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i]
                                  + E6 * k6[i] + E7 * k7[i])
                        sc = atol + rtol * (fabs(y[i]) if fabs(y[i]) > fabs(yn[i]) else fabs(yn[i]))
                        r = fabs(e) / sc
                        if r > err:
                            err = r
                    if err <= 1.0:
                        if err > 0.0:
                            fac = SAFETY * pow(err, -0.2)
                        else:
                            fac = FAC_MAX
                        if fac > FAC_MAX:
                            fac = FAC_MAX
                        if fac < FAC_MIN:
                            fac = FAC_MIN
                        if last:
                            t = tn
                            # a step clipped to an observation time keeps the carried h
                            if hh * fac > h:
                                h = hh * fac
                        else:
                            t = t + hh
                            h = hh * fac
                        tmp = y; y = yn; yn = tmp
                        tmp = k1; k1 = k7; k7 = tmp
                        break
                    fac = SAFETY * pow(err, -0.2)
                    if fac < FAC_MIN:
                        fac = FAC_MIN
                    hh *= fac
                    h = hh
                    last = 0
            for i in range(n):
                ov[j, i] = y[i]
    return out, nsteps, OK, t


def magnus_group(V, dV, ddV, times, x0, double kappa, double max_angle):
    """Fourth-order Magnus reconstruction of ``x' = x V`` on ``times``."""
    cdef const double[:, ::1] Vv = np.ascontiguousarray(V, dtype=np.float64)
    cdef const double[:, ::1] Dv = np.ascontiguousarray(dV, dtype=np.float64)
    cdef const double[:, ::1] Sv = np.ascontiguousarray(ddV, dtype=np.float64)
    cdef const double[::1] tv = np.ascontiguousarray(times, dtype=np.float64)
    cdef Py_ssize_t nt = tv.shape[0], k
    out = np.empty((nt, 4))
    cdef double[:, ::1] ov = out
    cdef double w = x0[0], x = x0[1], y = x0[2], z = x0[3]
    cdef double r3 = sqrt(3.0)
    cdef double gs[2]
    cdef double A[2][3]
    cdef double ak = fabs(kappa)
    cdef double H, h, vmax, n0, n1, s, s2, s3, s4, s5
    cdef double h0, h1, h2, h3, h4, h5, c, o1, o2, o3, e1, e2, e3, a, sc
    cdef double qw, qx, qy, qz, nw, nx, ny, nz, nrm
    cdef long m, jj
    cdef int g, i
    gs[0] = 0.5 - r3 / 6.0
    gs[1] = 0.5 + r3 / 6.0
    ov[0, 0] = w; ov[0, 1] = x; ov[0, 2] = y; ov[0, 3] = z
    with nogil:
        for k in range(nt - 1):
            H = tv[k + 1] - tv[k]
            n0 = sqrt(Vv[k, 0] * Vv[k, 0] + Vv[k, 1] * Vv[k, 1] + Vv[k, 2] * Vv[k, 2])
            n1 = sqrt(Vv[k + 1, 0] * Vv[k + 1, 0] + Vv[k + 1, 1] * Vv[k + 1, 1]
                      + Vv[k + 1, 2] * Vv[k + 1, 2])
            vmax = n0 if n0 > n1 else n1
            m = <long>ceil(H * vmax * ak * 0.5 / max_angle)
            if m < 1:
                m = 1
            h = H / m
            for jj in range(m):
                for g in range(2):
                    s = (jj + gs[g]) / m
                    s2 = s * s
                    s3 = s2 * s
                    s4 = s3 * s
                    s5 = s4 * s
                    h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5
                    h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5
                    h2 = 0.5 * s2 - 1.5 * s3 + 1.5 * s4 - 0.5 * s5
                    h3 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5
                    h4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5
                    h5 = 0.5 * s3 - s4 + 0.5 * s5
                    for i in range(3):
                        A[g][i] = (h0 * Vv[k, i] + H * h1 * Dv[k, i] + H * H * h2 * Sv[k, i]
                                   + h3 * Vv[k + 1, i] + H * h4 * Dv[k + 1, i]
                                   + H * H * h5 * Sv[k + 1, i])
                c = r3 / 12.0 * h * h * kappa
                o1 = 0.5 * h * (A[0][0] + A[1][0]) + c * (A[0][1] * A[1][2] - A[0][2] * A[1][1])
                o2 = 0.5 * h * (A[0][1] + A[1][1]) + c * (A[0][2] * A[1][0] - A[0][0] * A[1][2])
                o3 = 0.5 * h * (A[0][2] + A[1][2]) + c * (A[0][0] * A[1][1] - A[0][1] * A[1][0])
                e1 = 0.5 * kappa * o1
                e2 = 0.5 * kappa * o2
                e3 = 0.5 * kappa * o3
                a = sqrt(e1 * e1 + e2 * e2 + e3 * e3)
                if a < 1e-4:
                    sc = 1.0 - a * a / 6.0 + a * a * a * a / 120.0
                else:
                    sc = sin(a) / a
                qw = cos(a); qx = sc * e1; qy = sc * e2; qz = sc * e3
                nw = w * qw - x * qx - y * qy - z * qz
                nx = w * qx + x * qw + y * qz - z * qy
                ny = w * qy - x * qz + y * qw + z * qx
                nz = w * qz + x * qy - y * qx + z * qw
                nrm = sqrt(nw * nw + nx * nx + ny * ny + nz * nz)
                w = nw / nrm; x = nx / nrm; y = ny / nrm; z = nz / nrm
            ov[k + 1, 0] = w; ov[k + 1, 1] = x; ov[k + 1, 2] = y; ov[k + 1, 3] = z
    return out
