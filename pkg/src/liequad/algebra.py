"""The su(2) algebra in orthonormal coordinates.

Elements of su(2) are stored as coordinate triples in an orthonormal basis
e1, e2, e3 of the bi-invariant inner product. e1 and e2 span the horizontal
plane (the distribution), e3 spans its orthogonal complement. The bracket is
``kappa`` times the cross product; ``kappa = 1`` is the default and is the
normalisation under which the complex form of the equations holds.

SU(2) points are unit quaternions ``(w, x, y, z)``. The algebra is embedded
in the quaternions as ``X -> (0, kappa * X / 2)``, which is a Lie algebra
homomorphism for every ``kappa`` (pure quaternions commute to twice the cross
product). With ``kappa = -sqrt(2)`` this embedding is exactly the matrix
basis ``i * sigma_k / sqrt(2)`` under the standard quaternion/SU(2) map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import NonHorizontal, NonUnitQuaternion, UndersampledRotation, ZeroVelocity

#: direction v/|v| is undefined below this magnitude
Q_MIN = 1e-6
#: horizontality tolerance on the e3 coordinate
HORIZONTAL_TOL = 1e-12
#: unit-norm tolerance for group elements
UNIT_TOL = 1e-9
#: a consecutive direction jump this close to pi makes the lift ambiguous
LIFT_MARGIN = 0.1


@dataclass(frozen=True)
class BracketConvention:
    """Coordinate bracket scale: ``[X, Y] = kappa * (X x Y)``."""

    kappa: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.kappa) or self.kappa == 0.0:
            raise ValueError(f"kappa must be finite and nonzero, got {self.kappa!r}")


DEFAULT_CONVENTION = BracketConvention()


@dataclass(frozen=True)
class AlgebraElement:
    """An element ``a1 e1 + a2 e2 + a3 e3`` of su(2)."""

    a1: float = 0.0
    a2: float = 0.0
    a3: float = 0.0

    def __post_init__(self):
        for name in ("a1", "a2", "a3"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)

    @classmethod
    def from_array(cls, arr) -> "AlgebraElement":
        a = np.asarray(arr, dtype=float)
        if a.shape != (3,):
            raise ValueError(f"expected 3 coordinates, got shape {a.shape}")
        return cls(float(a[0]), float(a[1]), float(a[2]))

    @property
    def vec(self) -> np.ndarray:
        return np.array([self.a1, self.a2, self.a3])

    def is_horizontal(self, tol: float = HORIZONTAL_TOL) -> bool:
        return abs(self.a3) <= tol

    def norm(self) -> float:
        return math.sqrt(self.a1 * self.a1 + self.a2 * self.a2 + self.a3 * self.a3)

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        return AlgebraElement(self.a1 + other.a1, self.a2 + other.a2, self.a3 + other.a3)

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        return AlgebraElement(self.a1 - other.a1, self.a2 - other.a2, self.a3 - other.a3)

    def __neg__(self) -> "AlgebraElement":
        return AlgebraElement(-self.a1, -self.a2, -self.a3)

    def __mul__(self, s: float) -> "AlgebraElement":
        s = float(s)
        return AlgebraElement(s * self.a1, s * self.a2, s * self.a3)

    __rmul__ = __mul__

    def __truediv__(self, s: float) -> "AlgebraElement":
        return self * (1.0 / float(s))


E1 = AlgebraElement(1.0, 0.0, 0.0)
E2 = AlgebraElement(0.0, 1.0, 0.0)
E3 = AlgebraElement(0.0, 0.0, 1.0)
ZERO = AlgebraElement()


@dataclass(frozen=True)
class HorizontalElement:
    """A horizontal algebra element ``v1 e1 + v2 e2`` stored as ``v1 + i v2``."""

    v: complex

    def __post_init__(self):
        object.__setattr__(self, "v", complex(self.v))


@dataclass(frozen=True)
class GroupElement:
    """A point of SU(2) as a unit quaternion, scalar first."""

    w: float = 1.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __post_init__(self):
        for name in ("w", "x", "y", "z"):
            object.__setattr__(self, name, float(getattr(self, name)))
        n2 = self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
        if not abs(n2 - 1.0) <= UNIT_TOL:
            raise NonUnitQuaternion(f"|g|^2 - 1 = {n2 - 1.0:.3e} exceeds {UNIT_TOL:g}")

    @classmethod
    def from_array(cls, arr, normalize: bool = False) -> "GroupElement":
        a = np.asarray(arr, dtype=float)
        if a.shape != (4,):
            raise ValueError(f"expected 4 quaternion components, got shape {a.shape}")
        if normalize:
            a = a / np.linalg.norm(a)
        return cls(*map(float, a))

    @property
    def vec(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    def norm(self) -> float:
        return math.sqrt(self.w ** 2 + self.x ** 2 + self.y ** 2 + self.z ** 2)

    def inverse(self) -> "GroupElement":
        return GroupElement(self.w, -self.x, -self.y, -self.z)

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement.from_array(qmul(self.vec, other.vec), normalize=True)


IDENTITY = GroupElement()


# -- array kernels, shared by the scalar API and the trajectory code ---------

def qmul(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Hamilton product of quaternion arrays with trailing dimension 4."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    pw, px, py, pz = np.moveaxis(p, -1, 0)
    qw, qx, qy, qz = np.moveaxis(q, -1, 0)
    return np.stack(
        [
            pw * qw - px * qx - py * qy - pz * qz,
            pw * qx + px * qw + py * qz - pz * qy,
            pw * qy - px * qz + py * qw + pz * qx,
            pw * qz + px * qy - py * qx + pz * qw,
        ],
        axis=-1,
    )


def rotate(quats: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    """Rotate 3-vectors by unit quaternions, ``q (0, v) q^-1``, broadcasting."""
    quats = np.asarray(quats, dtype=float)
    vecs = np.asarray(vecs, dtype=float)
    w = quats[..., :1]
    u = quats[..., 1:]
    t = 2.0 * np.cross(u, vecs)
    return vecs + w * t + np.cross(u, t)


def bracket_rows(x: np.ndarray, y: np.ndarray, kappa: float = 1.0) -> np.ndarray:
    return kappa * np.cross(x, y)


def quat_exp(vecs: np.ndarray, kappa: float = 1.0) -> np.ndarray:
    """Group exponential of algebra coordinates (trailing dimension 3)."""
    half = 0.5 * kappa * np.asarray(vecs, dtype=float)
    ang = np.linalg.norm(half, axis=-1, keepdims=True)
    # sin(a)/a with its Taylor series near 0
    small = ang < 1e-4
    a2 = ang * ang
    sinc = np.where(small, 1.0 - a2 / 6.0 + a2 * a2 / 120.0, np.sin(ang) / np.where(small, 1.0, ang))
    return np.concatenate([np.cos(ang), sinc * half], axis=-1)


# -- scalar operations ---------------------------------------------------------

def bracket(X: AlgebraElement, Y: AlgebraElement,
            conv: BracketConvention = DEFAULT_CONVENTION) -> AlgebraElement:
    """Lie bracket ``kappa * (X x Y)``."""
    k = conv.kappa
    return AlgebraElement(
        k * (X.a2 * Y.a3 - X.a3 * Y.a2),
        k * (X.a3 * Y.a1 - X.a1 * Y.a3),
        k * (X.a1 * Y.a2 - X.a2 * Y.a1),
    )


def inner(X: AlgebraElement, Y: AlgebraElement) -> float:
    """Bi-invariant inner product; the basis is orthonormal."""
    return X.a1 * Y.a1 + X.a2 * Y.a2 + X.a3 * Y.a3


def adjoint(g: GroupElement, X: AlgebraElement) -> AlgebraElement:
    """``Ad(g) X = g X g^-1``, a rotation of the coordinates of X."""
    return AlgebraElement.from_array(rotate(g.vec, X.vec))


def exp_map(X: AlgebraElement, conv: BracketConvention = DEFAULT_CONVENTION) -> GroupElement:
    """Group exponential as a unit quaternion."""
    return GroupElement.from_array(quat_exp(X.vec, conv.kappa), normalize=True)


def to_complex(X: AlgebraElement, tol: float = HORIZONTAL_TOL) -> HorizontalElement:
    if abs(X.a3) > tol:
        raise NonHorizontal(f"e3 coordinate {X.a3:.3e} exceeds {tol:g}")
    return HorizontalElement(complex(X.a1, X.a2))


def from_complex(v: HorizontalElement | complex) -> AlgebraElement:
    z = v.v if isinstance(v, HorizontalElement) else complex(v)
    return AlgebraElement(z.real, z.imag, 0.0)


def angle_lift(samples: Iterable[HorizontalElement | complex] | np.ndarray,
               theta0: float | None = None, q_min: float = Q_MIN) -> np.ndarray:
    """Continuous lift of the direction ``v / |v|`` of a sampled curve.

    Parameters
    ----------
    samples
        Horizontal elements or complex numbers, in time order.
    theta0
        Angle of the first sample. Defaults to the principal value
        ``atan2(v2, v1)``; if given it must agree with the first direction
        modulo 2 pi.

    Returns
    -------
    numpy.ndarray
        Lifted angles ``theta_k`` with ``exp(i theta_k) = v_k / |v_k|`` and
        consecutive differences strictly below pi in magnitude.
    """
    if isinstance(samples, np.ndarray):
        v = samples.astype(complex, copy=False).ravel()
    else:
        v = np.array([s.v if isinstance(s, HorizontalElement) else complex(s) for s in samples],
                     dtype=complex)
    if v.size == 0:
        return np.empty(0)
    mag = np.abs(v)
    bad = np.flatnonzero(mag <= q_min)
    if bad.size:
        raise ZeroVelocity(f"|v| = {mag[bad[0]]:.3e} <= q_min at sample {bad[0]}")
    raw = np.angle(v)
    if theta0 is None:
        theta0 = float(raw[0])
    elif abs(np.exp(1j * theta0) - v[0] / mag[0]) > 1e-9:
        raise ValueError("theta0 does not match the direction of the first sample")
    step = np.angle(v[1:] * np.conj(v[:-1]))
    jumps = np.flatnonzero(np.abs(step) >= math.pi - LIFT_MARGIN)
    if jumps.size:
        k = int(jumps[0])
        raise UndersampledRotation(
            f"direction jumps by {step[k]:.3f} rad between samples {k} and {k + 1}")
    approx = theta0 + np.concatenate([[0.0], np.cumsum(step)])
    # snap onto the exact branch so exp(i theta) reproduces the samples
    turns = np.round((approx - raw) / (2 * math.pi))
    return raw + 2 * math.pi * turns


def horizontal_unit(angle: float) -> AlgebraElement:
    """The horizontal unit element in direction ``exp(i angle)``."""
    return AlgebraElement(math.cos(angle), math.sin(angle), 0.0)


def as_elements(rows: Sequence) -> list[AlgebraElement]:
    return [AlgebraElement.from_array(r) for r in np.asarray(rows, dtype=float)]
