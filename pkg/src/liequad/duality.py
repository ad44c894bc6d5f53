"""Duality between sub-Riemannian and Riemannian Lie quadratics.

For a velocity curve ``V`` with base curve ``x' = x V`` and ``x(0) = I`` the
dual curve is ``W = -Ad(x) V``. Its derivatives follow from
``(Ad(x) X)' = Ad(x)([V, X] + X')``::

    W'  = -Ad(x) V'
    W'' = -Ad(x) (V'' + [V, V'])

For a null sub-Riemannian quadratic, ``W'' - 2 [W', W]`` equals
``-Ad(x)(V'' - [V, V'])``, which is constant, so
``W'' = 2 [W', W] + Dtilde`` with ``Dtilde = -V''(0) + [V(0), V'(0)]``.
Rescaling ``V(t) = a W(b t)`` with ``a = 2 b`` gives the Riemannian Lie
quadratic ``V'' = [V', V] + 2 b^3 Dtilde``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import BPoly

from .algebra import (
    DEFAULT_CONVENTION,
    AlgebraElement,
    BracketConvention,
    bracket,
    rotate,
)
from .errors import GridMismatch, SpanExceeded
from .integrate import (
    DEFAULT_MAX_ANGLE,
    GroupTrajectory,
    Trajectory,
    reconstruct_group,
)

IDENTITY_TOL = 1e-9


@dataclass
class DualityReport:
    """Constants and residuals of the duality transform (``a = 2 b``)."""

    Dtilde: AlgebraElement
    b: float
    a: float
    Cvec: AlgebraElement
    max_residual_thm: float
    max_residual_rescaled: float

    def to_dict(self) -> dict:
        el = lambda X: [X.a1, X.a2, X.a3]  # noqa: E731
        return {
            "Dtilde": el(self.Dtilde), "b": self.b, "a": self.a, "Cvec": el(self.Cvec),
            "max_residual_thm": self.max_residual_thm,
            "max_residual_rescaled": self.max_residual_rescaled,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _check_grid(x: GroupTrajectory, vel: Trajectory):
    if x.times.shape != vel.times.shape or not np.array_equal(x.times, vel.times):
        raise GridMismatch("group and velocity trajectories do not share a time grid")


def dual_curve(x: GroupTrajectory, vel: Trajectory) -> Trajectory:
    """``(W, W', W'')`` from closed forms in ``x`` and ``(V, V', V'')``.

    Raises
    ------
    GridMismatch
        If the two trajectories are sampled on different grids.
    ValueError
        If ``x`` does not start at the identity.
    """
    _check_grid(x, vel)
    k0 = vel.initial_index
    if np.max(np.abs(x.points[k0] - np.array([1.0, 0.0, 0.0, 0.0]))) > IDENTITY_TOL:
        raise ValueError("the base curve must start at the identity")
    kappa = vel.conv.kappa
    V, dV, ddV = vel.algebra_arrays()
    W = -rotate(x.points, V)
    dW = -rotate(x.points, dV)
    ddW = -rotate(x.points, ddV + kappa * np.cross(V, dV))
    meta = {"kappa": kappa, "role": "dual", "direction": vel.meta.get("direction", 1)}
    return Trajectory(vel.times, np.hstack([W, dW, ddW]), "algebra", meta)


def dual_constant(V0: AlgebraElement, dV0: AlgebraElement, ddV0: AlgebraElement,
                  conv: BracketConvention = DEFAULT_CONVENTION) -> AlgebraElement:
    """``Dtilde = W''(0) - 2 [W'(0), W(0)] = -V''(0) + [V(0), V'(0)]``."""
    return -ddV0 + bracket(V0, dV0, conv)


def _residual_rows(ddX, dX, X, C, coef, kappa):
    r = ddX - coef * kappa * np.cross(dX, X) - C.vec
    return np.linalg.norm(r, axis=1)


def verify_dual_equation(W: Trajectory, Dtilde: AlgebraElement,
                         conv: BracketConvention | None = None) -> float:
    """``max_t |W'' - 2 [W', W] - Dtilde|``."""
    kappa = (conv or W.conv).kappa
    X, dX, ddX = W.algebra_arrays()
    return float(np.max(_residual_rows(ddX, dX, X, Dtilde, 2.0, kappa)))


def riemannian_residual(V: Trajectory, Cvec: AlgebraElement,
                        conv: BracketConvention | None = None) -> float:
    """``max_t |V'' - [V', V] - Cvec|`` for a curve stored with its second derivative."""
    kappa = (conv or V.conv).kappa
    X, dX, ddX = V.algebra_arrays()
    return float(np.max(_residual_rows(ddX, dX, X, Cvec, 1.0, kappa)))


def rescale_to_riemannian(W: Trajectory, b: float, Dtilde: AlgebraElement,
                          conv: BracketConvention | None = None, times=None):
    """``V(t) = 2 b W(b t)`` and its constant ``Cvec = 2 b^3 Dtilde``.

    Parameters
    ----------
    W
        Output of :func:`dual_curve`.
    b
        Nonzero time scale.
    times
        Sample times of the rescaled curve. By default ``W.times / b``, which
        needs no interpolation; otherwise ``W`` is interpolated by piecewise
        quintic Hermite polynomials through ``(W, W', W'')``.

    Returns
    -------
    (Trajectory, AlgebraElement)
        The rescaled curve with ``(V, V', V'')`` and ``Cvec``.

    Raises
    ------
    SpanExceeded
        If some ``b t`` falls outside the span of ``W``.
    """
    b = float(b)
    if b == 0.0 or not np.isfinite(b):
        raise ValueError("b must be finite and nonzero")
    a = 2.0 * b
    conv = conv or W.conv
    X, dX, ddX = W.algebra_arrays()
    if times is None:
        tt = W.times / b
        order = np.argsort(tt)
        tt = tt[order]
        Xs, dXs, ddXs = X[order], dX[order], ddX[order]
    else:
        tt = np.asarray(times, dtype=float)
        s = b * tt
        lo, hi = W.times[0], W.times[-1]
        if np.any(s < lo - 1e-12) or np.any(s > hi + 1e-12):
            raise SpanExceeded(f"b * t leaves the span [{lo}, {hi}] of the dual curve")
        s = np.clip(s, lo, hi)
        yi = np.stack([X, dX, ddX], axis=1)
        poly = BPoly.from_derivatives(W.times, yi)
        Xs, dXs, ddXs = poly(s), poly.derivative(1)(s), poly.derivative(2)(s)
    states = np.hstack([a * Xs, a * b * dXs, a * b * b * ddXs])
    Cvec = Dtilde * (2.0 * b ** 3)
    meta = {"kappa": conv.kappa, "role": "rescaled", "b": b, "a": a,
            "Cvec": (Cvec.a1, Cvec.a2, Cvec.a3)}
    return Trajectory(tt, states, "algebra", meta), Cvec


def null_dual_linearity(x: GroupTrajectory, V: Trajectory):
    """Fit ``W = -Ad(x) V`` by ``W0 + W1 t`` for a null Riemannian quadratic.

    Returns
    -------
    (AlgebraElement, AlgebraElement, float)
        ``W0``, ``W1`` and the largest pointwise distance from the fit.
    """
    _check_grid(x, V)
    Vs = V.algebra_arrays()[0]
    W = -rotate(x.points, Vs)
    A = np.column_stack([np.ones_like(V.times), V.times])
    coef, *_ = np.linalg.lstsq(A, W, rcond=None)
    resid = np.linalg.norm(W - A @ coef, axis=1)
    return AlgebraElement.from_array(coef[0]), AlgebraElement.from_array(coef[1]), float(resid.max())


def duality_pipeline(vel: Trajectory, b: float = 1.0, x: GroupTrajectory | None = None,
                     max_angle: float = DEFAULT_MAX_ANGLE):
    """Reconstruct the base curve, form the dual and check both equations.

    Returns
    -------
    (DualityReport, Trajectory, Trajectory)
        The report, the dual curve and the rescaled Riemannian curve.
    """
    if x is None:
        x = reconstruct_group(vel, max_angle=max_angle)
    W = dual_curve(x, vel)
    k0 = vel.initial_index
    V0, dV0, ddV0 = (AlgebraElement.from_array(a[k0]) for a in vel.algebra_arrays())
    D = dual_constant(V0, dV0, ddV0, vel.conv)
    thm = verify_dual_equation(W, D)
    Vr, Cvec = rescale_to_riemannian(W, b, D)
    resc = riemannian_residual(Vr, Cvec)
    return DualityReport(D, float(b), 2.0 * float(b), Cvec, thm, resc), W, Vr
