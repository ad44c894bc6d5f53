"""Long-term behaviour: limit direction, parabolic growth and convergence bounds.

All magnitudes here are in algebra units, ``q = |V|``. With bracket scale
``kappa`` the direction correction and the convergence bounds carry the
factor ``1 / kappa^2``; it equals ``1/2`` in the matrix basis
``i sigma_k / sqrt(2)`` and ``1`` in the default coordinates.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import BPoly
from scipy.optimize import least_squares

from .algebra import AlgebraElement, BracketConvention, bracket
from .errors import InsufficientTail, NonNull, NotGrowing
from .integrate import Trajectory
from .invariants import invariant_series

#: cap on d1 when the angle is numerically constant on the tail
D1_CAP = 1e12
#: the tail must extend to at least this multiple of tail_start
TAIL_FACTOR = 2.0
TAIL_OFFSET = 5.0
DEFAULT_SLACK = 0.1
#: closed-form tail series is used while |d| / (a U^2) stays below this
SERIES_RATIO = 0.5


@dataclass(frozen=True)
class AsymptoticEstimate:
    """Limit angle with its error bar and the fitted growth parabola.

    ``c7``, ``c8`` and ``fit_residual`` are NaN when no growing window was
    available for the fit. ``direction`` is ``-1`` for estimates of the
    backward limit, computed in the reversed time ``s = -t``.
    """

    alpha: float
    d1: float
    error_bound: float
    c7: float
    c8: float
    fit_residual: float
    tail_start: float
    t_last: float
    c1: float
    direction: int = 1

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


@dataclass(frozen=True)
class BoundSeries:
    """One inequality ``lhs <= rhs`` evaluated along the tail.

    ``flagged`` uses the slacked comparison
    ``lhs > rhs (1 + slack) + error_bound``; ``raw`` is ``lhs > rhs``.
    """

    name: str
    t: np.ndarray
    q: np.ndarray
    theta: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    flagged: np.ndarray
    raw: np.ndarray
    slack: float

    @property
    def n_flagged(self) -> int:
        return int(np.count_nonzero(self.flagged))

    def to_dict(self) -> dict:
        return {
            "name": self.name, "slack": self.slack, "n_flagged": self.n_flagged,
            "n_raw": int(np.count_nonzero(self.raw)),
            "max_ratio": float(np.max(self.lhs / self.rhs)),
            "rows": [[float(a), float(b), float(c), float(d), float(e), bool(f)]
                     for a, b, c, d, e, f in zip(self.t, self.q, self.theta, self.lhs,
                                                 self.rhs, self.flagged)],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "q", "theta", "lhs", "rhs", "flagged"])
        for row in zip(self.t, self.q, self.theta, self.lhs, self.rhs, self.flagged):
            w.writerow(["%.17g" % x for x in row[:5]] + [int(row[5])])
        return buf.getvalue()


# -- helpers -------------------------------------------------------------------

def _forward(traj: Trajectory) -> Trajectory:
    return traj.reversed() if traj.meta.get("direction", 1) < 0 else traj


def _radial(traj: Trajectory):
    """``q = |V|``, ``q'`` and ``theta'`` from the complex jet."""
    v, dv, _ = traj.complex_arrays()
    k = abs(traj.conv.kappa)
    qc = np.abs(v)
    q = qc / k
    dq = np.real(np.conj(v) * dv) / (qc * k)
    dtheta = np.imag(np.conj(v) * dv) / (qc * qc)
    return q, dq, dtheta


def default_tail_start(traj: Trajectory) -> float:
    """Last sign change of ``q'`` plus a fixed offset."""
    _, dq, _ = _radial(traj)
    s = np.sign(dq)
    changes = np.flatnonzero(s[1:] * s[:-1] <= 0)
    base = traj.times[changes[-1] + 1] if changes.size else traj.times[0]
    return float(base + TAIL_OFFSET)


def pairwise_d1(t: np.ndarray, theta: np.ndarray, chunk: int = 256) -> float:
    """Largest ``d1`` with ``|theta(s) - theta(r)| <= (1/r - 1/s) / d1`` on all pairs."""
    inv = 1.0 / t
    best = math.inf
    n = t.size
    for i0 in range(0, n - 1, chunk):
        i1 = min(n - 1, i0 + chunk)
        rows = np.arange(i0, i1)
        dinv = inv[rows, None] - inv[None, :]
        dth = np.abs(theta[None, :] - theta[rows, None])
        upper = np.arange(n)[None, :] > rows[:, None]
        ok = upper & (dth > 0)
        if np.any(ok):
            best = min(best, float(np.min(dinv[ok] / dth[ok])))
    return best


def cauchy_excess(t: np.ndarray, theta: np.ndarray, d1: float, chunk: int = 256) -> float:
    """``max_{r<s} |theta(s) - theta(r)| - (1/r - 1/s) / d1`` (non-positive when the bound holds)."""
    inv = 1.0 / t
    worst = -math.inf
    n = t.size
    for i0 in range(0, n - 1, chunk):
        i1 = min(n - 1, i0 + chunk)
        rows = np.arange(i0, i1)
        ex = np.abs(theta[None, :] - theta[rows, None]) - (inv[rows, None] - inv[None, :]) / d1
        upper = np.arange(n)[None, :] > rows[:, None]
        worst = max(worst, float(np.max(ex[upper])))
    return worst


def parabola(t, c7, c8, c1):
    """``(c7 t + c8)^2 / (4 c7) + 2 c1 / c7``."""
    return (c7 * t + c8) ** 2 / (4.0 * c7) + 2.0 * c1 / c7


# -- operations ----------------------------------------------------------------

def fit_q_parabola(traj: Trajectory, window, c1: float | None = None):
    """Least-squares fit of ``q = |V|`` on ``window`` to the growth parabola.

    Parameters
    ----------
    traj
        Horizontal trajectory.
    window
        ``(t_a, t_b)`` inside the trajectory span.
    c1
        First integral entering the model; by default the value at the
        initial sample.

    Returns
    -------
    (float, float, float)
        ``c7``, ``c8`` and the sup-norm residual over the window.

    Raises
    ------
    NotGrowing
        If ``q' <= 0`` somewhere in the window.
    """
    ta, tb = map(float, window)
    if not ta < tb:
        raise ValueError("fit window must be increasing")
    if ta < traj.times[0] - 1e-12 or tb > traj.times[-1] + 1e-12:
        raise ValueError(f"fit window {window} outside the trajectory span")
    if c1 is None:
        c1 = float(invariant_series(traj)["c1"][traj.initial_index])
    mask = (traj.times >= ta - 1e-12) & (traj.times <= tb + 1e-12)
    if np.count_nonzero(mask) < 3:
        raise ValueError("fit window holds fewer than three samples")
    q, dq, _ = _radial(traj)
    t, q, dq = traj.times[mask], q[mask], dq[mask]
    if np.any(dq <= 0):
        k = int(np.flatnonzero(dq <= 0)[0])
        raise NotGrowing(f"q' = {dq[k]:.3e} <= 0 at t = {t[k]:.6g}")
    A, Bc, _ = np.polyfit(t, q, 2)
    x0 = np.array([max(4.0 * A, 1e-8), 2.0 * Bc])
    scale = max(1.0, float(np.max(np.abs(q))))
    fit = least_squares(lambda p: (parabola(t, p[0], p[1], c1) - q) / scale, x0,
                        bounds=([1e-12, -np.inf], [np.inf, np.inf]),
                        xtol=1e-15, ftol=1e-15, gtol=1e-15)
    c7, c8 = map(float, fit.x)
    resid = float(np.max(np.abs(parabola(t, c7, c8, c1) - q)))
    return c7, c8, resid


def estimate_alpha(traj: Trajectory, tail_start: float | None = None,
                   fit_window=None) -> AsymptoticEstimate:
    """Limit of the angle of ``V`` with the error bar ``1 / (d1 t_last)``.

    ``d1`` is the largest constant for which ``|theta'| <= 1 / (d1 t^2)``
    holds at every tail sample and the integrated bound
    ``|theta(s) - theta(r)| <= (1/r - 1/s) / d1`` holds on every sampled tail
    pair. Backward-integrated trajectories are analysed in ``s = -t``, which
    yields the backward limit.

    Raises
    ------
    InsufficientTail
        If the trajectory ends before ``2 * tail_start`` or the tail holds
        fewer than two samples.
    ZeroVelocity
        If ``v`` nearly vanishes, which leaves the angle undefined.
    """
    fwd = _forward(traj)
    direction = int(traj.meta.get("direction", 1))
    if tail_start is None:
        tail_start = default_tail_start(fwd)
    t = fwd.times
    t_last = float(t[-1])
    if tail_start <= 0 or t_last < TAIL_FACTOR * tail_start:
        raise InsufficientTail(
            f"the trajectory ends at t = {t_last:.6g}; the tail from {tail_start:.6g} "
            f"needs t_last >= {TAIL_FACTOR * tail_start:.6g}")
    tail = t >= tail_start
    if np.count_nonzero(tail) < 2:
        raise InsufficientTail("fewer than two samples in the tail")
    theta = fwd.theta()
    _, _, dtheta = _radial(fwd)
    tt, th, w = t[tail], theta[tail], np.abs(dtheta[tail])
    with np.errstate(divide="ignore"):
        pointwise = np.where(w > 0, 1.0 / (tt * tt * w), np.inf)
    d1 = min(D1_CAP, float(np.min(pointwise)), pairwise_d1(tt, th))
    c1 = float(invariant_series(fwd)["c1"][fwd.initial_index])
    if fit_window is None:
        fit_window = (max(tail_start, 0.5 * t_last), t_last)
    try:
        c7, c8, res = fit_q_parabola(fwd, fit_window, c1)
    except NotGrowing:
        c7 = c8 = res = math.nan
    return AsymptoticEstimate(
        alpha=float(th[-1]), d1=d1, error_bound=1.0 / (d1 * t_last), c7=c7, c8=c8,
        fit_residual=res, tail_start=float(tail_start), t_last=t_last, c1=c1,
        direction=direction)


def _unit(alpha: float) -> np.ndarray:
    return np.array([math.cos(alpha), math.sin(alpha), 0.0])


def null_bound_series(traj: Trajectory, est: AsymptoticEstimate, c2: float | None = None,
                      slack: float = DEFAULT_SLACK):
    """Convergence bounds of a null quadratic towards its limit direction.

    With ``P = V + V'' / (kappa^2 q^2)`` and the unit direction ``a`` at
    angle ``alpha``:

    * ``|P / q - a| <= sqrt(c2) / (kappa^2 q^3)``
    * ``|q a - V| <= sqrt(c2) / (kappa^2 q^2)``

    Returns
    -------
    (BoundSeries, BoundSeries)
        The direction bound and the position bound on the tail.

    Raises
    ------
    NonNull
        If the trajectory was integrated with a nonzero constant.
    """
    if traj.C != 0.0:
        raise NonNull(f"bounds apply to null quadratics only, got C = {traj.C}")
    fwd = _forward(traj)
    if c2 is None:
        c2 = float(invariant_series(fwd)["c2"][fwd.initial_index])
    k2 = fwd.conv.kappa ** 2
    V, _, ddV = fwd.algebra_arrays()
    tail = fwd.times >= est.tail_start
    t = fwd.times[tail]
    V, ddV = V[tail], ddV[tail]
    q = np.linalg.norm(V, axis=1)
    theta = fwd.theta()[tail]
    a = _unit(est.alpha)
    P = V + ddV / (k2 * q * q)[:, None]
    root = math.sqrt(max(c2, 0.0))
    out = []
    for name, lhs, rhs in (
        ("direction", np.linalg.norm(P / q[:, None] - a, axis=1), root / (k2 * q ** 3)),
        ("position", np.linalg.norm(q[:, None] * a - V, axis=1), root / (k2 * q ** 2)),
    ):
        flagged = lhs > rhs * (1.0 + slack) + est.error_bound
        out.append(BoundSeries(name, t, q, theta, lhs, rhs, flagged, lhs > rhs, slack))
    return tuple(out)


def _tail_closed_form(T: float, est: AsymptoticEstimate, k2: float) -> float:
    """``int_T^inf dt / (kappa^2 q^2)`` for the fitted parabola."""
    a = est.c7 / 4.0
    d = 2.0 * est.c1 / est.c7
    U = T + est.c8 / est.c7
    if U <= 0 or a * U * U + d <= 0:
        raise ValueError("fitted parabola is not positive beyond the last sample")
    ratio = d / (a * U * U)
    if abs(ratio) <= SERIES_RATIO:
        total, n = 0.0, 0
        while True:
            term = (-1) ** n * (n + 1) * ratio ** n / (3 + 2 * n)
            total += term
            if abs(term) <= 1e-17 * abs(total) or n > 200:
                break
            n += 1
        return total / (a * a * U ** 3 * k2)
    val, _ = quad(lambda u: 1.0 / (a * u * u + d) ** 2, U, np.inf, epsabs=0, epsrel=1e-13,
                  limit=200)
    return val / k2


def tail_integral(traj: Trajectory, est: AsymptoticEstimate, r: float) -> float:
    """``int_r^inf dt / (kappa^2 q^2)``.

    Trapezoidal quadrature on the samples from ``r`` to the last sample, then
    the closed-form integral of the fitted parabola beyond it.
    """
    fwd = _forward(traj)
    if not (fwd.times[0] <= r <= fwd.times[-1]):
        raise ValueError(f"r = {r} outside the trajectory span")
    if not math.isfinite(est.c7):
        raise ValueError("the estimate carries no parabola fit")
    k2 = fwd.conv.kappa ** 2
    V = fwd.algebra_arrays()[0]
    q2 = np.einsum("ij,ij->i", V, V)
    t = fwd.times
    f = 1.0 / (k2 * q2)
    k = int(np.searchsorted(t, r, side="left"))
    body = 0.0
    if k < t.size and t[k] > r:
        fr = np.interp(r, t, f)
        body += 0.5 * (t[k] - r) * (fr + f[k])
    body += float(np.trapezoid(f[k:], t[k:])) if t.size - k >= 2 else 0.0
    return body + _tail_closed_form(float(t[-1]), est, k2)


def _interp_V(traj: Trajectory, r: float) -> np.ndarray:
    V, dV, ddV = traj.algebra_arrays()
    k = int(np.searchsorted(traj.times, r))
    if k < traj.times.size and traj.times[k] == r:
        return np.array(V[k])
    lo = max(0, min(k - 1, traj.times.size - 2))
    seg = slice(lo, lo + 2)
    poly = BPoly.from_derivatives(traj.times[seg], np.stack([V[seg], dV[seg], ddV[seg]], axis=1))
    return poly(r)


def anchored_alpha(traj: Trajectory, est: AsymptoticEstimate,
                   Ctilde: AlgebraElement | None = None,
                   conv: BracketConvention | None = None) -> float:
    """Limit angle corrected for the residual rotation beyond the last sample.

    The correction term turns ``V / q`` by ``-kappa c I(t)`` (``Ctilde = c e3``,
    ``I`` the tail integral), so the limit is ``theta(T) + kappa c I(T)``.
    """
    fwd = _forward(traj)
    Ctilde = fwd.ctilde if Ctilde is None else Ctilde
    conv = fwd.conv if conv is None else conv
    if Ctilde.a3 == 0.0:
        return est.alpha
    return est.alpha + conv.kappa * Ctilde.a3 * tail_integral(fwd, est, est.t_last)


def nonnull_correction(traj: Trajectory, est: AsymptoticEstimate,
                       Ctilde: AlgebraElement | None = None, r: float = 40.0,
                       conv: BracketConvention | None = None):
    """Corrected estimate ``q a - q I(r) [Ctilde, a]`` of ``V(r)``.

    ``a`` is the unit direction at :func:`anchored_alpha` and ``I`` is
    :func:`tail_integral`.

    Returns
    -------
    (AlgebraElement, AlgebraElement, float)
        Prediction, the interpolated actual ``V(r)`` and their distance.
    """
    fwd = _forward(traj)
    Ctilde = fwd.ctilde if Ctilde is None else Ctilde
    conv = fwd.conv if conv is None else conv
    a = AlgebraElement.from_array(_unit(anchored_alpha(fwd, est, Ctilde, conv)))
    actual = AlgebraElement.from_array(_interp_V(fwd, r))
    q = actual.norm()
    pred = a * q - bracket(Ctilde, a, conv) * (q * tail_integral(fwd, est, r))
    return pred, actual, (pred - actual).norm()


def uncorrected_error(traj: Trajectory, est: AsymptoticEstimate, r: float,
                      Ctilde: AlgebraElement | None = None,
                      conv: BracketConvention | None = None) -> float:
    """``|q(r) a - V(r)|`` with the same direction as :func:`nonnull_correction`."""
    fwd = _forward(traj)
    a = _unit(anchored_alpha(fwd, est, Ctilde, conv))
    V = _interp_V(fwd, r)
    return float(np.linalg.norm(np.linalg.norm(V) * a - V))

