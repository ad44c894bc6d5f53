"""Numerical integration of the quadratic equations and of the group curve.

The hot loops live in the kernel backend (compiled when available, see
:mod:`liequad._backend`). This module owns validation, observation grids,
time reversal and the immutable :class:`Trajectory` container.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Mapping

import numpy as np

from . import _backend as B
from .algebra import (
    DEFAULT_CONVENTION,
    IDENTITY,
    Q_MIN,
    AlgebraElement,
    BracketConvention,
    GroupElement,
    angle_lift,
)
from .dynamics import (
    AlgebraQuadraticState,
    PolarState,
    QuadraticState,
    complex_constant,
    polar_to_cartesian_arrays,
    twin_constant,
)
from .errors import BudgetExceeded, PoleProjection, RadialUnderflow, StepFailure

DEFAULT_DT_OBS = 0.01
#: largest rotation angle per Magnus substep
DEFAULT_MAX_ANGLE = 0.05
POLE_TOL = 1e-12

METHODS = {"rk4_fixed": B.RK4_FIXED, "rk45_adaptive": B.RK45_ADAPTIVE}
KINDS = ("complex", "polar", "algebra", "riemannian")


@dataclass(frozen=True)
class SolverSettings:
    """Solver choice and its accuracy controls.

    Parameters
    ----------
    method
        ``"rk45_adaptive"`` (Dormand-Prince 5(4), per-component max-norm error
        control) or ``"rk4_fixed"`` (classical RK4).
    step
        Step size for ``rk4_fixed``; each observation interval is split into
        equal substeps no longer than this.
    atol, rtol
        Tolerances for ``rk45_adaptive``.
    max_steps
        Budget of attempted steps.
    """

    method: str = "rk45_adaptive"
    step: float = 1e-3
    atol: float = 1e-10
    rtol: float = 1e-10
    max_steps: int = 50_000_000

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {sorted(METHODS)}, got {self.method!r}")
        for name in ("step", "atol", "rtol"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive, got {value!r}")
        if int(self.max_steps) <= 0:
            raise ValueError("max_steps must be positive")

    def describe(self) -> dict:
        if self.method == "rk4_fixed":
            return {"method": self.method, "step": self.step, "max_steps": self.max_steps}
        return {"method": self.method, "atol": self.atol, "rtol": self.rtol,
                "max_steps": self.max_steps}


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Trajectory:
    """A sampled solution: time grid, flattened states and provenance.

    ``states`` rows follow the canonical layout of ``kind`` (see
    :mod:`liequad.dynamics`). ``meta`` holds at least ``kappa`` and the
    equation constant (``C`` for complex/polar, ``Ctilde`` for algebra,
    ``Cvec`` for riemannian).
    """

    times: np.ndarray
    states: np.ndarray
    kind: str
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        t = _frozen(self.times)
        s = _frozen(self.states)
        if self.kind not in KINDS:
            raise ValueError(f"unknown trajectory kind {self.kind!r}")
        if t.ndim != 1 or t.size < 2:
            raise ValueError("a trajectory needs at least two samples")
        if not np.all(np.diff(t) > 0):
            raise ValueError("times must be strictly increasing")
        if s.shape != (t.size, B.DIMS[_SYSTEMS[self.kind]]):
            raise ValueError(f"states shape {s.shape} does not match {self.kind} layout")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "states", s)
        object.__setattr__(self, "meta", MappingProxyType(dict(self.meta)))

    def __len__(self) -> int:
        return self.times.size

    @property
    def conv(self) -> BracketConvention:
        return BracketConvention(float(self.meta.get("kappa", 1.0)))

    @property
    def C(self) -> float:
        """Complex-form constant (horizontal kinds only)."""
        if self.kind in ("complex", "polar"):
            return float(self.meta.get("C", 0.0))
        if self.kind == "algebra":
            return complex_constant(self.ctilde, self.conv)
        raise TypeError("riemannian trajectories have no complex-form constant")

    @property
    def ctilde(self) -> AlgebraElement:
        if self.kind in ("complex", "polar"):
            return twin_constant(self.meta.get("C", 0.0), self.conv)
        if self.kind == "algebra":
            return AlgebraElement(*self.meta.get("Ctilde", (0.0, 0.0, 0.0)))
        return AlgebraElement(*self.meta.get("Cvec", (0.0, 0.0, 0.0)))

    def complex_arrays(self):
        """``(v, dv, ddv)`` as complex arrays."""
        if self.kind == "complex":
            y = self.states
        elif self.kind == "polar":
            y = polar_to_cartesian_arrays(self.states)
        elif self.kind == "algebra":
            k = abs(self.conv.kappa)
            y = k * self.states[:, [0, 1, 3, 4, 6, 7]]
        else:
            raise TypeError("riemannian trajectories are not horizontal")
        return y[:, 0] + 1j * y[:, 1], y[:, 2] + 1j * y[:, 3], y[:, 4] + 1j * y[:, 5]

    def algebra_arrays(self):
        """``(V, dV, ddV)`` as ``(n, 3)`` arrays of algebra coordinates."""
        if self.kind == "algebra":
            s = self.states
            return s[:, 0:3], s[:, 3:6], s[:, 6:9]
        if self.kind == "riemannian":
            V, dV = self.states[:, 0:3], self.states[:, 3:6]
            ddV = self.conv.kappa * np.cross(dV, V) + self.ctilde.vec
            return V, dV, ddV
        k = 1.0 / abs(self.conv.kappa)
        out = []
        for z in self.complex_arrays():
            out.append(np.column_stack([k * z.real, k * z.imag, np.zeros_like(z.real)]))
        return tuple(out)

    def q(self) -> np.ndarray:
        if self.kind == "polar":
            return self.states[:, 0].copy()
        return np.abs(self.complex_arrays()[0])

    def theta(self) -> np.ndarray:
        """Continuous angle of ``v``; raises if ``v`` nearly vanishes."""
        if self.kind == "polar":
            return self.states[:, 3].copy()
        return angle_lift(self.complex_arrays()[0], q_min=Q_MIN)

    def state(self, k: int):
        t = self.times[k]
        row = self.states[k]
        if self.kind == "complex":
            return QuadraticState.from_flat(t, row)
        if self.kind == "polar":
            return PolarState.from_flat(t, row)
        V, dV, ddV = (a[k] for a in self.algebra_arrays())
        return AlgebraQuadraticState(t, AlgebraElement.from_array(V),
                                     AlgebraElement.from_array(dV), AlgebraElement.from_array(ddV))

    @property
    def initial_index(self) -> int:
        return -1 if self.meta.get("direction", 1) < 0 else 0

    def with_states(self, states: np.ndarray) -> "Trajectory":
        return Trajectory(self.times, states, self.kind, dict(self.meta))

    def reversed(self) -> "Trajectory":
        """The same curve in the time variable ``s = -t``.

        Odd derivatives change sign and so does the equation constant; the
        result is again a solution of the same family of equations.
        """
        s = np.array(self.states[::-1])
        meta = dict(self.meta)
        meta["direction"] = -int(meta.get("direction", 1))
        if self.kind == "complex":
            s[:, 2:4] *= -1
            meta["C"] = -float(meta.get("C", 0.0))
        elif self.kind == "polar":
            s[:, [1, 4]] *= -1
            meta["C"] = -float(meta.get("C", 0.0))
        elif self.kind == "algebra":
            s[:, 3:6] *= -1
            meta["Ctilde"] = tuple(-np.asarray(meta.get("Ctilde", (0.0, 0.0, 0.0)), dtype=float))
        else:
            # V'' = [V', V] + Cvec keeps its form with the bracket sign flipped
            s[:, 3:6] *= -1
            meta["kappa"] = -float(meta.get("kappa", 1.0))
        return Trajectory(-self.times[::-1], s, self.kind, meta)


_SYSTEMS = {"complex": B.COMPLEX, "polar": B.POLAR, "algebra": B.ALGEBRA,
            "riemannian": B.RIEMANNIAN}


@dataclass(frozen=True)
class GroupTrajectory:
    """Sampled base curve on SU(2) as unit quaternions ``(w, x, y, z)``."""

    times: np.ndarray
    points: np.ndarray
    source: Trajectory | None = None

    def __post_init__(self):
        t = _frozen(self.times)
        p = _frozen(self.points)
        if p.shape != (t.size, 4):
            raise ValueError("points must have shape (len(times), 4)")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "points", p)

    def __len__(self) -> int:
        return self.times.size

    def point(self, k: int) -> GroupElement:
        return GroupElement.from_array(self.points[k])

    def norm_error(self) -> float:
        return float(np.max(np.abs(np.linalg.norm(self.points, axis=1) - 1.0)))


def observation_grid(tspan, dt: float = DEFAULT_DT_OBS) -> np.ndarray:
    """Uniform grid from ``tspan[0]`` to ``tspan[1]`` with spacing at most ``dt``."""
    t0, t1 = map(float, tspan)
    if not (math.isfinite(t0) and math.isfinite(t1)) or t0 == t1:
        raise ValueError(f"degenerate time span {tspan!r}")
    if not dt > 0:
        raise ValueError("observation dt must be positive")
    n = max(1, int(math.ceil(abs(t1 - t0) / dt - 1e-9)))
    return np.linspace(t0, t1, n + 1)


def _run(system, y0, params, grid, settings: SolverSettings):
    """Integrate on a monotone grid; descending grids use the reversed field."""
    sign = 1.0 if grid[-1] > grid[0] else -1.0
    tau = sign * grid
    out, nsteps, status, t_fail = B.kernels.integrate(
        system, np.asarray(y0, dtype=float), np.asarray(params, dtype=float), tau,
        METHODS[settings.method], float(settings.step), float(settings.atol),
        float(settings.rtol), int(settings.max_steps), sign)
    t_fail = sign * t_fail
    if status == B.STEP_UNDERFLOW:
        raise StepFailure(f"step size underflow at t = {t_fail:.6g}")
    if status == B.BUDGET:
        raise BudgetExceeded(f"max_steps = {settings.max_steps} reached at t = {t_fail:.6g}")
    if status == B.RADIAL_UNDERFLOW:
        raise RadialUnderflow(f"q fell to q_min near t = {t_fail:.6g}; use the Cartesian form")
    return out, nsteps, sign


def _package(grid, out, kind, meta, sign):
    meta["direction"] = int(sign)
    if sign < 0:
        return Trajectory(grid[::-1], out[::-1], kind, meta)
    return Trajectory(grid, out, kind, meta)


def integrate_quadratic(s0, C, tspan, settings: SolverSettings | None = None,
                        observation_dt: float = DEFAULT_DT_OBS,
                        conv: BracketConvention = DEFAULT_CONVENTION,
                        q_min: float = Q_MIN) -> Trajectory:
    """Integrate a sub-Riemannian Lie quadratic from ``s0`` over ``tspan``.

    Parameters
    ----------
    s0
        Initial :class:`QuadraticState`, :class:`PolarState` or
        :class:`AlgebraQuadraticState`; its ``t`` must equal ``tspan[0]``.
    C
        Real constant for the complex and polar forms, an
        :class:`AlgebraElement` in span{e3} for the algebra form.
    tspan
        ``(t0, t1)``; ``t1 < t0`` integrates backwards through the reversed
        system.
    settings
        Solver settings, default adaptive with tolerances ``1e-10``.
    observation_dt
        Spacing of the output grid, independent of the internal steps.

    Returns
    -------
    Trajectory
        Samples in increasing time order. For backward spans the initial
        state is the last sample.

    Raises
    ------
    StepFailure, BudgetExceeded, RadialUnderflow
    """
    settings = settings or SolverSettings()
    grid = observation_grid(tspan, observation_dt)
    if abs(s0.t - grid[0]) > 1e-12 * max(1.0, abs(grid[0])):
        raise ValueError(f"initial state time {s0.t} does not match tspan start {grid[0]}")
    meta = {"kappa": conv.kappa, **settings.describe(), "backend": B.backend_name(),
            "observation_dt": observation_dt}
    if isinstance(s0, QuadraticState):
        kind, system, params = "complex", B.COMPLEX, [float(C), q_min]
        meta["C"] = float(C)
    elif isinstance(s0, PolarState):
        if s0.q <= q_min:
            raise RadialUnderflow(f"initial q = {s0.q:.3e} <= q_min")
        kind, system, params = "polar", B.POLAR, [float(C), q_min]
        meta["C"] = float(C)
    elif isinstance(s0, AlgebraQuadraticState):
        if not isinstance(C, AlgebraElement):
            raise TypeError("the algebra form needs Ctilde as an AlgebraElement")
        if C.a1 != 0.0 or C.a2 != 0.0:
            raise ValueError("Ctilde must lie in span{e3}")
        kind, system = "algebra", B.ALGEBRA
        params = [C.a1, C.a2, C.a3, conv.kappa]
        meta["Ctilde"] = (C.a1, C.a2, C.a3)
    else:
        raise TypeError(f"unsupported initial state {type(s0).__name__}")
    out, nsteps, sign = _run(system, s0.flat(), params, grid, settings)
    meta["nsteps"] = int(nsteps)
    return _package(grid, out, kind, meta, sign)


def integrate_riemannian(V0: AlgebraElement, dV0: AlgebraElement, Cvec: AlgebraElement, tspan,
                         settings: SolverSettings | None = None,
                         observation_dt: float = DEFAULT_DT_OBS,
                         conv: BracketConvention = DEFAULT_CONVENTION) -> Trajectory:
    """Integrate the Riemannian Lie quadratic ``V'' = [V', V] + Cvec``."""
    settings = settings or SolverSettings()
    grid = observation_grid(tspan, observation_dt)
    meta = {"kappa": conv.kappa, **settings.describe(), "backend": B.backend_name(),
            "observation_dt": observation_dt, "Cvec": (Cvec.a1, Cvec.a2, Cvec.a3)}
    y0 = np.concatenate([V0.vec, dV0.vec])
    out, nsteps, sign = _run(B.RIEMANNIAN, y0, [Cvec.a1, Cvec.a2, Cvec.a3, conv.kappa],
                             grid, settings)
    meta["nsteps"] = int(nsteps)
    return _package(grid, out, "riemannian", meta, sign)


def reconstruct_group(vel: Trajectory, x0: GroupElement = IDENTITY,
                      max_angle: float = DEFAULT_MAX_ANGLE) -> GroupTrajectory:
    """Solve ``x' = x V`` along the sampled velocity, starting at ``x0``.

    Each observation interval is advanced by fourth-order Magnus steps
    ``x <- x exp(Omega)`` with ``V`` interpolated from its samples and first
    two derivatives, followed by renormalisation. ``x0`` is attached to the
    first sample.
    """
    if not max_angle > 0:
        raise ValueError("max_angle must be positive")
    V, dV, ddV = vel.algebra_arrays()
    pts = B.kernels.magnus_group(np.ascontiguousarray(V), np.ascontiguousarray(dV),
                                 np.ascontiguousarray(ddV), vel.times, x0.vec,
                                 vel.conv.kappa, float(max_angle))
    return GroupTrajectory(vel.times, pts, vel)


def stereographic_project(g: GroupElement) -> tuple[float, float, float]:
    """``(w, x, y) / (1 - z)``; the pole ``z = 1`` raises :class:`PoleProjection`."""
    d = 1.0 - g.z
    if abs(d) <= POLE_TOL:
        raise PoleProjection("stereographic projection is undefined at z = 1")
    return g.w / d, g.x / d, g.y / d


def stereographic_rows(points: np.ndarray) -> np.ndarray:
    """Vectorised projection of ``(n, 4)`` quaternions; NaN rows at the pole."""
    points = np.asarray(points, dtype=float)
    d = 1.0 - points[:, 3]
    at_pole = np.abs(d) <= POLE_TOL
    safe = np.where(at_pole, 1.0, d)
    out = points[:, :3] / safe[:, None]
    out[at_pole] = np.nan
    return out
