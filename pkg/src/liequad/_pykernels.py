"""Pure-Python integration kernels.

Line-for-line the same algorithms as the compiled ``_kernels`` module; used
when the extension is unavailable or ``LIEQUAD_PURE_PYTHON=1`` is set.
"""

import math

import numpy as np

COMPLEX, POLAR, ALGEBRA, RIEMANNIAN = 0, 1, 2, 3
RK4_FIXED, RK45_ADAPTIVE = 0, 1
OK, STEP_UNDERFLOW, BUDGET, RADIAL_UNDERFLOW = 0, 1, 2, 3

DIMS = {COMPLEX: 6, POLAR: 6, ALGEBRA: 9, RIEMANNIAN: 6}

# Dormand-Prince 5(4) tableau
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = (71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200,
                          22 / 525, -1 / 40)

SAFETY, FAC_MIN, FAC_MAX = 0.9, 0.2, 5.0
EPS = 2.220446049250313e-16


def _rhs(system, y, p, sign, out):
    """Write ``sign * f(y)`` into ``out``; returns a status code."""
    if system == COMPLEX:
        v1, v2, d1, d2 = y[0], y[1], y[2], y[3]
        s = d1 * v2 - d2 * v1 - p[0]
        out[0] = sign * d1
        out[1] = sign * d2
        out[2] = sign * y[4]
        out[3] = sign * y[5]
        out[4] = -sign * s * v2
        out[5] = sign * s * v1
    elif system == POLAR:
        q, dq, ddq, w, dw = y[0], y[1], y[2], y[4], y[5]
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
        x1, x2, x3 = y[0], y[1], y[2]
        u1, u2, u3 = y[3], y[4], y[5]
        # b = [dV, V], then [b, V] + [C, V]
        b1 = k * (u2 * x3 - u3 * x2)
        b2 = k * (u3 * x1 - u1 * x3)
        b3 = k * (u1 * x2 - u2 * x1)
        g1 = b1 + p[0]
        g2 = b2 + p[1]
        g3 = b3 + p[2]
        for i in range(6):
            out[i] = sign * y[i + 3]
        out[6] = sign * k * (g2 * x3 - g3 * x2)
        out[7] = sign * k * (g3 * x1 - g1 * x3)
        out[8] = sign * k * (g1 * x2 - g2 * x1)
    else:
        k = p[3]
        x1, x2, x3 = y[0], y[1], y[2]
        u1, u2, u3 = y[3], y[4], y[5]
        out[0] = sign * u1
        out[1] = sign * u2
        out[2] = sign * u3
        out[3] = sign * (k * (u2 * x3 - u3 * x2) + p[0])
        out[4] = sign * (k * (u3 * x1 - u1 * x3) + p[1])
        out[5] = sign * (k * (u1 * x2 - u2 * x1) + p[2])
    return OK


def rhs(system, y, params, sign=1.0):
    """Vector field of ``system`` at ``y`` (convenience wrapper)."""
    y = [float(v) for v in y]
    out = [0.0] * len(y)
    status = _rhs(system, y, [float(v) for v in params], float(sign), out)
    if status != OK:
        raise FloatingPointError(f"rhs status {status}")
    return np.array(out)


def integrate(system, y0, params, times, method, step, atol, rtol, max_steps, sign):
    """Integrate ``y' = sign * f(y)`` and sample it on ``times``.

    Returns
    -------
    tuple
        ``(out, nsteps, status, t_fail)``; rows of ``out`` past a failure are
        NaN.
    """
    n = DIMS[system]
    times = np.asarray(times, dtype=float)
    nt = times.shape[0]
    out = np.full((nt, n), np.nan)
    p = [float(v) for v in params]
    y = [float(v) for v in y0]
    out[0] = y
    t = float(times[0])
    k1, k2, k3, k4 = [0.0] * n, [0.0] * n, [0.0] * n, [0.0] * n
    k5, k6, k7 = [0.0] * n, [0.0] * n, [0.0] * n
    yt, yn = [0.0] * n, [0.0] * n
    nsteps = 0

    if method == RK4_FIXED:
        for j in range(1, nt):
            tn = float(times[j])
            m = max(1, int(math.ceil((tn - t) / step - 1e-9)))
            h = (tn - t) / m
            for _ in range(m):
                if nsteps >= max_steps:
                    return out, nsteps, BUDGET, t
                st = _rhs(system, y, p, sign, k1)
                for i in range(n):
                    yt[i] = y[i] + 0.5 * h * k1[i]
                st |= _rhs(system, yt, p, sign, k2)
                for i in range(n):
                    yt[i] = y[i] + 0.5 * h * k2[i]
                st |= _rhs(system, yt, p, sign, k3)
                for i in range(n):
                    yt[i] = y[i] + h * k3[i]
                st |= _rhs(system, yt, p, sign, k4)
                if st != OK:
                    return out, nsteps, RADIAL_UNDERFLOW, t
                for i in range(n):
                    y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                t += h
                nsteps += 1
            t = tn
            out[j] = y
        return out, nsteps, OK, t

    if _rhs(system, y, p, sign, k1) != OK:
        return out, 0, RADIAL_UNDERFLOW, t
    h = min(1e-3, float(times[-1] - times[0]))
    for j in range(1, nt):
        tn = float(times[j])
        while t < tn:
            hh = h
            last = False
            if hh >= tn - t:
                hh = tn - t
                last = True
            while True:
                if nsteps >= max_steps:
                    return out, nsteps, BUDGET, t
                if hh <= 16.0 * EPS * max(abs(t), 1.0):
                    return out, nsteps, STEP_UNDERFLOW, t
                for i in range(n):
                    yt[i] = y[i] + hh * A21 * k1[i]
                st = _rhs(system, yt, p, sign, k2)
                for i in range(n):
                    yt[i] = y[i] + hh * (A31 * k1[i] + A32 * k2[i])
                st |= _rhs(system, yt, p, sign, k3)
                for i in range(n):
                    yt[i] = y[i] + hh * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
                st |= _rhs(system, yt, p, sign, k4)
                for i in range(n):
                    yt[i] = y[i] + hh * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
                st |= _rhs(system, yt, p, sign, k5)
                for i in range(n):
                    yt[i] = y[i] + hh * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i]
                                         + A64 * k4[i] + A65 * k5[i])
                st |= _rhs(system, yt, p, sign, k6)
                for i in range(n):
                    yn[i] = y[i] + hh * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i]
                                         + B5 * k5[i] + B6 * k6[i])
                st |= _rhs(system, yn, p, sign, k7)
                nsteps += 1
                if st != OK:
                    return out, nsteps, RADIAL_UNDERFLOW, t
                err = 0.0
                for i in range(n):
                    e = hh * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i]
                              + E6 * k6[i] + E7 * k7[i])
                    sc = atol + rtol * max(abs(y[i]), abs(yn[i]))
                    r = abs(e) / sc
                    if r > err:
                        err = r
                if err <= 1.0:
                    fac = SAFETY * err ** -0.2 if err > 0.0 else FAC_MAX
                    fac = min(FAC_MAX, max(FAC_MIN, fac))
                    t = tn if last else t + hh
                    y, yn = yn, y
                    k1, k7 = k7, k1
                    # a step clipped to an observation time keeps the carried h
                    h = max(h, hh * fac) if last else hh * fac
                    break
                hh *= max(FAC_MIN, SAFETY * err ** -0.2)
                h = hh
                last = False
        out[j] = y
    return out, nsteps, OK, t


def magnus_group(V, dV, ddV, times, x0, kappa, max_angle):
    """Fourth-order Magnus reconstruction of ``x' = x V`` on ``times``.

    ``V`` is interpolated between samples by the quintic Hermite polynomial
    matching ``(V, V', V'')`` at both ends; each interval is split so the
    rotation per substep stays below ``max_angle``.
    """
    V = np.asarray(V, dtype=float)
    dV = np.asarray(dV, dtype=float)
    ddV = np.asarray(ddV, dtype=float)
    times = np.asarray(times, dtype=float)
    nt = times.shape[0]
    out = np.empty((nt, 4))
    w, x, y, z = (float(c) for c in x0)
    out[0] = (w, x, y, z)
    r3 = math.sqrt(3.0)
    g_lo, g_hi = 0.5 - r3 / 6.0, 0.5 + r3 / 6.0
    ak = abs(kappa)
    A1, A2 = [0.0] * 3, [0.0] * 3
    for k in range(nt - 1):
        H = times[k + 1] - times[k]
        p0, d0, s0 = V[k], dV[k], ddV[k]
        p1, d1, s1 = V[k + 1], dV[k + 1], ddV[k + 1]
        vmax = max(math.sqrt(p0[0] ** 2 + p0[1] ** 2 + p0[2] ** 2),
                   math.sqrt(p1[0] ** 2 + p1[1] ** 2 + p1[2] ** 2))
        m = max(1, int(math.ceil(H * vmax * ak * 0.5 / max_angle)))
        h = H / m
        for j in range(m):
            for A, g in ((A1, g_lo), (A2, g_hi)):
                s = (j + g) / m
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
                    A[i] = (h0 * p0[i] + H * h1 * d0[i] + H * H * h2 * s0[i]
                            + h3 * p1[i] + H * h4 * d1[i] + H * H * h5 * s1[i])
            c = r3 / 12.0 * h * h * kappa
            o1 = 0.5 * h * (A1[0] + A2[0]) + c * (A1[1] * A2[2] - A1[2] * A2[1])
            o2 = 0.5 * h * (A1[1] + A2[1]) + c * (A1[2] * A2[0] - A1[0] * A2[2])
            o3 = 0.5 * h * (A1[2] + A2[2]) + c * (A1[0] * A2[1] - A1[1] * A2[0])
            # exp(o) as the quaternion (cos a, sin(a)/a * kappa o / 2)
            e1, e2, e3 = 0.5 * kappa * o1, 0.5 * kappa * o2, 0.5 * kappa * o3
            a = math.sqrt(e1 * e1 + e2 * e2 + e3 * e3)
            if a < 1e-4:
                sc = 1.0 - a * a / 6.0 + a ** 4 / 120.0
            else:
                sc = math.sin(a) / a
            qw, qx, qy, qz = math.cos(a), sc * e1, sc * e2, sc * e3
            w, x, y, z = (w * qw - x * qx - y * qy - z * qz,
                          w * qx + x * qw + y * qz - z * qy,
                          w * qy - x * qz + y * qw + z * qx,
                          w * qz + x * qy - y * qx + z * qw)
            nrm = math.sqrt(w * w + x * x + y * y + z * z)
            w, x, y, z = w / nrm, x / nrm, y / nrm, z / nrm
        out[k + 1] = (w, x, y, z)
    return out
