"""Conserved quantities and growth bounds along trajectories.

``c1 = <V'', V> - |V'|^2 / 2`` and ``c2 = |V''|^2 + |phi'|^2`` with
``phi' = [V', V] + Ctilde`` are first integrals of the sub-Riemannian Lie
quadratic. ``Theta' = V'' + phi'`` satisfies a Lax equation, so its norm is
conserved and ``Ad(x) Theta'`` is constant along the base curve.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .algebra import DEFAULT_CONVENTION, AlgebraElement, BracketConvention, bracket, inner, rotate
from .dynamics import AlgebraQuadraticState, polar_jet
from .integrate import GroupTrajectory, Trajectory


def c1_value(s: AlgebraQuadraticState) -> float:
    """``<V'', V> - <V', V'> / 2``."""
    return inner(s.ddV, s.V) - 0.5 * inner(s.dV, s.dV)


def phi_dot(s: AlgebraQuadraticState, Ctilde: AlgebraElement,
            conv: BracketConvention = DEFAULT_CONVENTION) -> AlgebraElement:
    return bracket(s.dV, s.V, conv) + Ctilde


def c2_value(s: AlgebraQuadraticState, Ctilde: AlgebraElement,
             conv: BracketConvention = DEFAULT_CONVENTION) -> float:
    """``<V'', V''> + <phi', phi'>``."""
    if Ctilde.a1 != 0.0 or Ctilde.a2 != 0.0:
        raise ValueError("Ctilde must lie in span{e3}")
    p = phi_dot(s, Ctilde, conv)
    return inner(s.ddV, s.ddV) + inner(p, p)


def lax_vector(s: AlgebraQuadraticState, Ctilde: AlgebraElement,
               conv: BracketConvention = DEFAULT_CONVENTION) -> AlgebraElement:
    """``Theta' = V'' + phi'``."""
    return s.ddV + phi_dot(s, Ctilde, conv)


# -- vectorised series ---------------------------------------------------------

def _dot(a, b):
    return np.einsum("ij,ij->i", a, b)


def invariant_series(traj: Trajectory, Ctilde: AlgebraElement | None = None,
                     conv: BracketConvention | None = None) -> dict:
    """Per-sample ``c1``, ``c2``, ``|V''|^2``, ``|phi'|^2``, ``|V|^2`` and ``Theta'``."""
    Ctilde = traj.ctilde if Ctilde is None else Ctilde
    conv = traj.conv if conv is None else conv
    V, dV, ddV = traj.algebra_arrays()
    phi = conv.kappa * np.cross(dV, V) + Ctilde.vec
    dd2 = _dot(ddV, ddV)
    ph2 = _dot(phi, phi)
    lax = ddV + phi
    return {
        "c1": _dot(ddV, V) - 0.5 * _dot(dV, dV),
        "c2": dd2 + ph2,
        "ddV2": dd2,
        "phi2": ph2,
        "V2": _dot(V, V),
        "VdV": _dot(V, dV),
        "lax": lax,
        "lax_norm": np.sqrt(_dot(lax, lax)),
    }


def c1_polar_series(traj: Trajectory) -> np.ndarray:
    """The polar first integral, sample by sample; matches the ``c1`` series."""
    if traj.kind == "polar":
        q, dq, ddq, w = (traj.states[:, i] for i in (0, 1, 2, 4))
    else:
        v, dv, ddv = traj.complex_arrays()
        q, dq, ddq, w, _ = polar_jet(v, dv, ddv)
    k2 = traj.conv.kappa ** 2
    # polar variables carry the complex-form scale |kappa| times V
    return (q * ddq - 0.5 * dq * dq - 1.5 * q * q * w * w) / k2


@dataclass
class InvariantReport:
    """Initial values and maximal drifts of the first integrals.

    ``c2_rel_drift`` is ``c2_drift / c2_0`` (or the absolute drift when
    ``c2_0`` vanishes). ``lax_constant`` is ``Ad(x(0)) Theta'(0)`` with
    ``x(0)`` the identity; ``lax_vector_drift`` is filled only when a group
    trajectory is supplied.
    """

    c1_0: float
    c2_0: float
    c1_drift: float
    c2_drift: float
    c2_rel_drift: float
    lax_norm_drift: float
    lax_constant: tuple
    lax_vector_drift: float | None = None
    bound_violations: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lax_constant"] = list(self.lax_constant)
        d["bound_violations"] = [list(v) for v in self.bound_violations]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def drift_report(traj: Trajectory, Ctilde: AlgebraElement | None = None,
                 conv: BracketConvention | None = None,
                 group: GroupTrajectory | None = None) -> InvariantReport:
    """Evaluate the first integrals at every sample and report their drift.

    Parameters
    ----------
    traj
        Horizontal trajectory (complex, polar or algebra kind).
    Ctilde, conv
        Default to the values recorded in ``traj``.
    group
        Optional base curve on the same grid, to check ``Ad(x) Theta'``.
    """
    ser = invariant_series(traj, Ctilde, conv)
    k0 = traj.initial_index
    c1, c2, ln = ser["c1"], ser["c2"], ser["lax_norm"]
    c2_0 = float(c2[k0])
    c2_drift = float(np.max(np.abs(c2 - c2_0)))
    lax_vec_drift = None
    lax0 = ser["lax"][k0]
    if group is not None:
        if group.times.shape != traj.times.shape or not np.array_equal(group.times, traj.times):
            raise ValueError("group trajectory must share the velocity time grid")
        transported = rotate(group.points, ser["lax"])
        lax0 = transported[k0]
        lax_vec_drift = float(np.max(np.linalg.norm(transported - lax0, axis=1)))
    return InvariantReport(
        c1_0=float(c1[k0]),
        c2_0=c2_0,
        c1_drift=float(np.max(np.abs(c1 - c1[k0]))),
        c2_drift=c2_drift,
        c2_rel_drift=c2_drift / c2_0 if c2_0 > 0 else c2_drift,
        lax_norm_drift=float(np.max(np.abs(ln - ln[k0]))),
        lax_constant=tuple(float(x) for x in lax0),
        lax_vector_drift=lax_vec_drift,
    )


def bound_tolerance(c2: float) -> float:
    return 1e-6 * (1.0 + abs(c2))


def lower_bound_coefficients(traj: Trajectory) -> tuple[float, float, float]:
    """``(c1, c5, c6)`` of ``<V, V> >= c1 tau^2 + c5 tau + c6`` about the initial time."""
    ser = invariant_series(traj)
    k0 = traj.initial_index
    return float(ser["c1"][k0]), 2.0 * float(ser["VdV"][k0]), float(ser["V2"][k0])


def check_growth_bounds(traj: Trajectory, report: InvariantReport,
                        tol: float | None = None) -> list[tuple[float, str]]:
    """Pointwise check of the growth bounds; returns ``(t, description)`` violations.

    Checks ``|V''|^2 <= c2``, ``|phi'|^2 <= c2`` and the quadratic lower
    bound on ``<V, V>`` obtained from ``(<V, V>)'' = 2 c1 + 3 |V'|^2 >= 2 c1``.
    """
    tol = bound_tolerance(report.c2_0) if tol is None else tol
    ser = invariant_series(traj)
    k0 = traj.initial_index
    tau = traj.times - traj.times[k0]
    c5 = 2.0 * ser["VdV"][k0]
    c6 = ser["V2"][k0]
    lower = report.c1_0 * tau * tau + c5 * tau + c6
    c2 = report.c2_0
    masks = [
        (ser["ddV2"] > c2 + tol, "|V''|^2 = {:.12g} exceeds c2 = %.12g" % c2, ser["ddV2"]),
        (ser["phi2"] > c2 + tol, "|phi'|^2 = {:.12g} exceeds c2 = %.12g" % c2, ser["phi2"]),
        (ser["V2"] < lower - tol, "<V, V> = {:.12g} below the quadratic lower bound", ser["V2"]),
    ]
    viol = []
    for mask, fmt, series in masks:
        viol.extend((float(traj.times[k]), fmt.format(series[k])) for k in np.flatnonzero(mask))
    viol.sort(key=lambda item: item[0])
    return viol
