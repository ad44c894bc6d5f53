"""Right-hand sides and closed forms of the Lie quadratic equations.

Three equivalent descriptions of the same sub-Riemannian Lie quadratic are
provided: algebra coordinates (third order, 9 states), the complex form
(``v = v1 + i v2``, 6 real states) and the polar form (``v = q exp(i theta)``,
6 states). The Riemannian Lie quadratic used by the duality transform is
second order in algebra coordinates.

Complex/algebra correspondence
------------------------------
The complex equation ``v''' = v (conj(v') v - v' conj(v)) / 2 - i C v`` is
the algebra equation under ``V = from_complex(v) / |kappa|`` with constant
``Ctilde = -(C / kappa) e3``. For the default ``kappa = 1`` this is
``Ctilde = -C e3``: the cross-product orientation makes ``[e3, v]``
multiplication by ``+i`` whereas the complex form carries ``-i C v``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algebra import (
    DEFAULT_CONVENTION,
    Q_MIN,
    ZERO,
    AlgebraElement,
    BracketConvention,
    bracket,
)
from .errors import RadialUnderflow

# canonical flattening order of each state family
COMPLEX_LAYOUT = ("v1", "v2", "dv1", "dv2", "ddv1", "ddv2")
POLAR_LAYOUT = ("q", "dq", "ddq", "theta", "dtheta", "ddtheta")
ALGEBRA_LAYOUT = tuple(f"{p}{i}" for p in ("V", "dV", "ddV") for i in (1, 2, 3))
RIEMANNIAN_LAYOUT = tuple(f"{p}{i}" for p in ("V", "dV") for i in (1, 2, 3))


def _finite(*values):
    for x in values:
        if not np.all(np.isfinite(x)):
            raise ValueError(f"non-finite state component {x!r}")


@dataclass(frozen=True)
class QuadraticState:
    """Complex-form state ``(v, v', v'')`` at time ``t``."""

    t: float
    v: complex
    dv: complex
    ddv: complex

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))
        for name in ("v", "dv", "ddv"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        _finite(self.t, self.v, self.dv, self.ddv)

    def flat(self) -> np.ndarray:
        return np.array([self.v.real, self.v.imag, self.dv.real, self.dv.imag,
                         self.ddv.real, self.ddv.imag])

    @classmethod
    def from_flat(cls, t: float, y) -> "QuadraticState":
        y = np.asarray(y, dtype=float)
        return cls(t, complex(y[0], y[1]), complex(y[2], y[3]), complex(y[4], y[5]))


@dataclass(frozen=True)
class PolarState:
    """Polar-form state: radius, angle and their first two derivatives."""

    t: float
    q: float
    dq: float
    ddq: float
    theta: float
    dtheta: float
    ddtheta: float

    def __post_init__(self):
        for name in ("t", "q", "dq", "ddq", "theta", "dtheta", "ddtheta"):
            object.__setattr__(self, name, float(getattr(self, name)))
        _finite(self.flat())

    def flat(self) -> np.ndarray:
        return np.array([self.q, self.dq, self.ddq, self.theta, self.dtheta, self.ddtheta])

    @classmethod
    def from_flat(cls, t: float, y) -> "PolarState":
        return cls(t, *map(float, np.asarray(y, dtype=float)))


@dataclass(frozen=True)
class AlgebraQuadraticState:
    """Algebra-coordinate state ``(V, V', V'')``."""

    t: float
    V: AlgebraElement
    dV: AlgebraElement
    ddV: AlgebraElement

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))
        _finite(self.t)

    def flat(self) -> np.ndarray:
        return np.concatenate([self.V.vec, self.dV.vec, self.ddV.vec])

    @classmethod
    def from_flat(cls, t: float, y) -> "AlgebraQuadraticState":
        y = np.asarray(y, dtype=float)
        return cls(t, AlgebraElement.from_array(y[0:3]), AlgebraElement.from_array(y[3:6]),
                   AlgebraElement.from_array(y[6:9]))


# -- complex <-> algebra bridge ----------------------------------------------

def twin_constant(C: float, conv: BracketConvention = DEFAULT_CONVENTION) -> AlgebraElement:
    """Algebra constant equivalent to the complex-form constant ``C``."""
    return AlgebraElement(0.0, 0.0, -float(C) / conv.kappa)


def complex_constant(Ctilde: AlgebraElement, conv: BracketConvention = DEFAULT_CONVENTION) -> float:
    """Inverse of :func:`twin_constant`."""
    return -conv.kappa * Ctilde.a3


def algebra_scale(conv: BracketConvention = DEFAULT_CONVENTION) -> float:
    """Factor mapping complex-form coordinates to algebra coordinates."""
    return 1.0 / abs(conv.kappa)


def complex_to_algebra_state(s: QuadraticState,
                             conv: BracketConvention = DEFAULT_CONVENTION) -> AlgebraQuadraticState:
    k = algebra_scale(conv)
    el = lambda z: AlgebraElement(k * z.real, k * z.imag, 0.0)  # noqa: E731
    return AlgebraQuadraticState(s.t, el(s.v), el(s.dv), el(s.ddv))


def algebra_to_complex_state(s: AlgebraQuadraticState,
                             conv: BracketConvention = DEFAULT_CONVENTION) -> QuadraticState:
    k = abs(conv.kappa)
    cz = lambda X: complex(k * X.a1, k * X.a2)  # noqa: E731
    return QuadraticState(s.t, cz(s.V), cz(s.dV), cz(s.ddV))


# -- right-hand sides ----------------------------------------------------------

def quadratic_rhs(s: QuadraticState, C: float) -> tuple[complex, complex, complex]:
    """``(v', v'', v''')`` for the complex form. Regular at ``v = 0``."""
    v, dv = s.v, s.dv
    d3 = 0.5 * v * (dv.conjugate() * v - dv * v.conjugate()) - 1j * C * v
    return s.dv, s.ddv, d3


def polar_rhs(s: PolarState, C: float, q_min: float = Q_MIN) -> tuple[float, ...]:
    """First derivatives of ``(q, q', q'', theta, theta', theta'')``."""
    q, dq, ddq = s.q, s.dq, s.ddq
    w, dw = s.dtheta, s.ddtheta
    if q <= q_min:
        raise RadialUnderflow(f"q = {q:.3e} <= q_min = {q_min:g}; use the Cartesian form")
    d3q = 3.0 * dq * w * w + 3.0 * q * dw * w
    d3theta = (-3.0 * dq * dw - 3.0 * ddq * w + q * w ** 3 - q ** 3 * w - C * q) / q
    return dq, ddq, d3q, w, dw, d3theta


def symmetric_rhs(s: AlgebraQuadraticState, Ctilde: AlgebraElement,
                  conv: BracketConvention = DEFAULT_CONVENTION):
    """``(V', V'', V''')`` with ``V''' = [[V', V], V] + [Ctilde, V]``."""
    if abs(Ctilde.a1) > 0.0 or abs(Ctilde.a2) > 0.0:
        raise ValueError("Ctilde must lie in span{e3}")
    V = s.V
    d3 = bracket(bracket(s.dV, V, conv), V, conv) + bracket(Ctilde, V, conv)
    return s.dV, s.ddV, d3


def riemannian_quadratic_rhs(V: AlgebraElement, dV: AlgebraElement, Cvec: AlgebraElement = ZERO,
                             conv: BracketConvention = DEFAULT_CONVENTION) -> AlgebraElement:
    """``V'' = [V', V] + Cvec``."""
    return bracket(dV, V, conv) + Cvec


def linear_quadratic(V0: AlgebraElement, V1: AlgebraElement, t: float,
                     conv: BracketConvention = DEFAULT_CONVENTION):
    """Exact affine solution ``V0 + t V1`` and its matching constant ``[V0, V1]``."""
    if not (V0.is_horizontal() and V1.is_horizontal()):
        raise ValueError("V0 and V1 must be horizontal")
    state = AlgebraQuadraticState(t, V0 + V1 * t, V1, ZERO)
    return state, bracket(V0, V1, conv)


# -- Cartesian <-> polar -------------------------------------------------------

def polar_jet(v, dv, ddv, d3v=None):
    """Derivatives of ``log q`` and ``theta`` from the Cartesian jet of ``v``.

    Works elementwise on arrays. Uses ``v'/v = (log q)' + i theta'`` and its
    derivatives, so nothing here depends on the polar equations of motion.

    Returns
    -------
    tuple
        ``(q, dq, ddq, dtheta, ddtheta)`` and, if ``d3v`` is given, also
        ``(d3q, d3theta)`` appended.
    """
    v = np.asarray(v, dtype=complex)
    q = np.abs(v)
    z1 = dv / v
    z2 = ddv / v - z1 * z1
    L1, L2 = z1.real, z2.real
    dq = q * L1
    ddq = q * (L2 + L1 * L1)
    out = (q, dq, ddq, z1.imag, z2.imag)
    if d3v is None:
        return out
    z3 = d3v / v - z1 * (ddv / v) - 2.0 * z1 * z2
    L3 = z3.real
    d3q = q * (L3 + 3.0 * L1 * L2 + L1 ** 3)
    return out + (d3q, z3.imag)


def cartesian_to_polar(s: QuadraticState, theta: float | None = None,
                       q_min: float = Q_MIN) -> PolarState:
    """Polar state of ``s``; ``theta`` selects the branch (default principal)."""
    if abs(s.v) <= q_min:
        raise RadialUnderflow(f"|v| = {abs(s.v):.3e} <= q_min")
    q, dq, ddq, w, dw = polar_jet(s.v, s.dv, s.ddv)
    principal = math.atan2(s.v.imag, s.v.real)
    if theta is None:
        theta = principal
    else:
        theta = principal + 2 * math.pi * round((theta - principal) / (2 * math.pi))
    return PolarState(s.t, float(q), float(dq), float(ddq), theta, float(w), float(dw))


def polar_to_cartesian(s: PolarState) -> QuadraticState:
    v = s.q * complex(math.cos(s.theta), math.sin(s.theta))
    z1 = complex(s.dq / s.q, s.dtheta)
    z2 = complex(s.ddq / s.q - (s.dq / s.q) ** 2, s.ddtheta)
    return QuadraticState(s.t, v, v * z1, v * (z2 + z1 * z1))


def polar_to_cartesian_arrays(y: np.ndarray) -> np.ndarray:
    """Vectorised polar -> complex flattening, rows in the canonical layouts."""
    q, dq, ddq, th, w, dw = np.asarray(y, dtype=float).T
    v = q * np.exp(1j * th)
    z1 = dq / q + 1j * w
    z2 = ddq / q - (dq / q) ** 2 + 1j * dw
    dv = v * z1
    ddv = v * (z2 + z1 * z1)
    return np.column_stack([v.real, v.imag, dv.real, dv.imag, ddv.real, ddv.imag])


def c1_polar(s: PolarState) -> float:
    """``q q'' - q'^2/2 - 3 q^2 theta'^2 / 2``; equals c1 of the algebra state."""
    return s.q * s.ddq - 0.5 * s.dq ** 2 - 1.5 * s.q ** 2 * s.dtheta ** 2


def horizontal_residual(s: AlgebraQuadraticState, Ctilde: AlgebraElement,
                        conv: BracketConvention = DEFAULT_CONVENTION) -> float:
    """Largest ``e3`` coordinate among the three derivative slots; 0 when ``s`` is horizontal."""
    return max(abs(X.a3) for X in symmetric_rhs(s, Ctilde, conv))
