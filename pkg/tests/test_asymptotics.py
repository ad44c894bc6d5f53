import csv
import io
import math

import numpy as np
import pytest
from conftest import EX1, EX1_C, EX2, EX2_C, tol_settings
from hypothesis import given, settings
from hypothesis import strategies as st

from liequad.algebra import BracketConvention
from liequad.asymptotics import (
    AsymptoticEstimate,
    cauchy_excess,
    default_tail_start,
    estimate_alpha,
    fit_q_parabola,
    nonnull_correction,
    null_bound_series,
    pairwise_d1,
    parabola,
    tail_integral,
    uncorrected_error,
)
from liequad.errors import InsufficientTail, NonNull, NotGrowing
from liequad.integrate import Trajectory, integrate_quadratic
from liequad.invariants import invariant_series


def radial_trajectory(q, dq, ddq, t, kappa=1.0, angle=0.0):
    """Straight-line trajectory ``V = q(t) exp(i angle)`` in algebra units."""
    k = abs(kappa)
    u = np.exp(1j * angle)
    rows = np.column_stack([f(t) * k * c for f in (q, dq, ddq) for c in (u.real, u.imag)])
    return Trajectory(t, rows, "complex", {"C": 0.0, "kappa": kappa})


def antiderivative(u, a, d):
    # int du / (a u^2 + d)^2 for a, d > 0
    return u / (2 * d * (a * u * u + d)) + math.atan(u * math.sqrt(a / d)) / (2 * d * math.sqrt(a * d))


def tail_oracle(T, c7, c8, c1, kappa):
    a, d, U = c7 / 4, 2 * c1 / c7, T + c8 / c7
    if d == 0:
        return 1 / (3 * a * a * U ** 3 * kappa ** 2)
    return (math.pi / (4 * d * math.sqrt(a * d)) - antiderivative(U, a, d)) / kappa ** 2


class TestEstimateAlpha:
    def test_constant_direction(self):
        t = np.linspace(0.0, 20.0, 2001)
        traj = radial_trajectory(lambda s: 1 + s * s, lambda s: 2 * s, lambda s: 2 + 0 * s, t)
        est = estimate_alpha(traj)
        assert est.alpha == 0.0 and est.d1 == 1e12 and est.error_bound <= 1e-12
        # q'(0) = 0 counts as the last sign change
        assert est.tail_start == pytest.approx(5.01)

    def test_example2_cauchy(self, ex2_80):
        est = estimate_alpha(ex2_80, tail_start=20.0)
        theta = ex2_80.theta()
        t = ex2_80.times
        i40, i80 = np.searchsorted(t, 40.0), len(t) - 1
        assert abs(theta[i80] - theta[i40]) <= (1 / 40 - 1 / 80) / est.d1
        assert est.d1 > 0 and est.error_bound < 0.05
        assert abs(est.alpha - theta[-1]) == 0.0

    def test_backward_limit(self):
        back = integrate_quadratic(EX2, EX2_C, (0.0, -60.0), tol_settings(1e-11))
        fwd = integrate_quadratic(EX2, EX2_C, (0.0, 60.0), tol_settings(1e-11))
        a_minus = estimate_alpha(back, tail_start=20.0)
        a_plus = estimate_alpha(fwd, tail_start=20.0)
        assert a_minus.direction == -1 and a_plus.direction == 1
        assert a_minus.error_bound < 0.05
        gap = abs(math.remainder(a_minus.alpha - a_plus.alpha, 2 * math.pi))
        assert gap > a_minus.error_bound + a_plus.error_bound

    def test_insufficient_tail(self, ex2_20):
        with pytest.raises(InsufficientTail):
            estimate_alpha(ex2_20, tail_start=15.0)

    def test_default_tail_start(self, ex1_80):
        t0 = default_tail_start(ex1_80)
        assert 5.0 <= t0 <= 40.0
        est = estimate_alpha(ex1_80)
        assert est.tail_start == t0 and est.c1 == pytest.approx(-14.38)

    def test_json(self, ex2_80):
        est = estimate_alpha(ex2_80, tail_start=20.0)
        assert AsymptoticEstimate(**est.to_dict()) == est
        assert '"alpha"' in est.to_json()


class TestPairwise:
    @settings(max_examples=30)
    @given(st.lists(st.floats(-1, 1), min_size=2, max_size=40), st.integers(1, 7))
    def test_d1_matches_brute_force(self, th, chunk):
        th = np.asarray(th)
        t = 1.0 + np.arange(th.size, dtype=float)
        best = math.inf
        for i in range(t.size):
            for j in range(i + 1, t.size):
                if abs(th[j] - th[i]) > 0:
                    best = min(best, (1 / t[i] - 1 / t[j]) / abs(th[j] - th[i]))
        assert pairwise_d1(t, th, chunk=chunk) == pytest.approx(best, rel=1e-12)
        if math.isfinite(best):
            assert cauchy_excess(t, th, best, chunk=chunk) <= 1e-12


class TestParabola:
    def test_recovers_family_member(self):
        c1 = 0.3
        t = np.linspace(0.0, 40.0, 4001)
        traj = radial_trajectory(lambda s: (2 * s + 1) ** 2 / 8 + c1, lambda s: (2 * s + 1) / 2,
                                 lambda s: 1 + 0 * s, t)
        assert invariant_series(traj)["c1"] == pytest.approx(c1, abs=1e-12)
        c7, c8, res = fit_q_parabola(traj, (10.0, 40.0))
        assert c7 == pytest.approx(2, abs=1e-8) and c8 == pytest.approx(1, abs=1e-8)
        assert res <= 1e-8

    def test_example1_window(self, ex1_80):
        c7, c8, res = fit_q_parabola(ex1_80, (40.0, 80.0))
        assert res / ex1_80.q()[-1] <= 1e-2

    def test_oscillatory_window(self, ex1_80):
        with pytest.raises(NotGrowing):
            fit_q_parabola(ex1_80, (0.0, 10.0))

    def test_window_validation(self, ex1_80):
        with pytest.raises(ValueError):
            fit_q_parabola(ex1_80, (50.0, 40.0))
        with pytest.raises(ValueError):
            fit_q_parabola(ex1_80, (40.0, 90.0))

    def test_formula(self):
        assert parabola(1.0, 2.0, 1.0, 0.5) == pytest.approx(9 / 8 + 0.5)


class TestNullBounds:
    def test_constant_direction(self):
        t = np.linspace(0.0, 20.0, 2001)
        traj = radial_trajectory(lambda s: 1 + s * s, lambda s: 2 * s, lambda s: 2 + 0 * s, t,
                                 angle=0.7)
        est = estimate_alpha(traj)
        _, position = null_bound_series(traj, est)
        assert np.max(position.lhs) <= 1e-12

    def test_example2(self, ex2_80):
        est = estimate_alpha(ex2_80, tail_start=20.0)
        direction, position = null_bound_series(ex2_80, est)
        assert direction.n_flagged == 0 and position.n_flagged == 0
        assert direction.t[0] == 20.0 and direction.t[-1] == 80.0

    def test_normalised_direction_tends_to_one(self, ex2_80):
        est = estimate_alpha(ex2_80, tail_start=20.0)
        V, _, ddV = ex2_80.algebra_arrays()
        c2 = invariant_series(ex2_80)["c2"][0]
        tail = ex2_80.times >= 20.0
        q = np.linalg.norm(V[tail], axis=1)
        P = V[tail] + ddV[tail] / (q * q)[:, None]
        assert np.all(np.abs(np.linalg.norm(P, axis=1) / q - 1) <= math.sqrt(c2) / q ** 3 + 1e-15)

    def test_perturbed_alpha_is_flagged(self, ex2_80):
        est = estimate_alpha(ex2_80, tail_start=20.0)
        bad = AsymptoticEstimate(**{**est.to_dict(), "alpha": est.alpha + 0.1})
        direction, position = null_bound_series(ex2_80, bad)
        assert direction.n_flagged > 0 and position.n_flagged > 0

    def test_nonnull_rejected(self, ex1_80):
        with pytest.raises(NonNull):
            null_bound_series(ex1_80, estimate_alpha(ex1_80))

    def test_csv(self, ex2_80):
        est = estimate_alpha(ex2_80, tail_start=20.0)
        direction, _ = null_bound_series(ex2_80, est)
        rows = list(csv.reader(io.StringIO(direction.to_csv())))
        assert rows[0] == ["t", "q", "theta", "lhs", "rhs", "flagged"]
        assert len(rows) == len(direction.t) + 1
        assert float(rows[1][0]) == direction.t[0] and rows[1][5] == "0"
        assert direction.to_dict()["n_flagged"] == 0


class TestTailIntegral:
    @pytest.mark.parametrize("kappa,want", [(-math.sqrt(2), 1 / 3), (1.0, 2 / 3)])
    def test_hand_integral(self, kappa, want):
        # q = (t + 1)^2 / 4: c7 = c8 = 1, c1 = 0
        t = np.linspace(0.0, 20.0, 20001)
        traj = radial_trajectory(lambda s: (s + 1) ** 2 / 4, lambda s: (s + 1) / 2,
                                 lambda s: 0.5 + 0 * s, t, kappa=kappa)
        est = estimate_alpha(traj)
        assert est.c7 == pytest.approx(1, abs=1e-8) and est.c8 == pytest.approx(1, abs=1e-8)
        assert tail_integral(traj, est, 1.0) == pytest.approx(want, abs=1e-6)
        # r at the last sample leaves only the closed-form part
        assert tail_integral(traj, est, 20.0) == pytest.approx(
            16 / (3 * kappa ** 2 * 21 ** 3), rel=1e-9)

    @pytest.mark.parametrize("c1", [3.0, 40.0])
    def test_closed_form_branches(self, c1):
        # c1 = 3 uses the series, c1 = 40 falls back to adaptive quadrature
        t = np.linspace(10.0, 12.0, 201)
        traj = radial_trajectory(lambda s: (2 * s + 1) ** 2 / 8 + c1, lambda s: (2 * s + 1) / 2,
                                 lambda s: 1 + 0 * s, t)
        est = AsymptoticEstimate(0.0, 1e12, 1e-12, 2.0, 1.0, 0.0, 5.0, 12.0, c1)
        assert tail_integral(traj, est, 12.0) == pytest.approx(
            tail_oracle(12.0, 2.0, 1.0, c1, 1.0), rel=1e-10)

    def test_span_checked(self, ex1_80):
        est = estimate_alpha(ex1_80)
        with pytest.raises(ValueError):
            tail_integral(ex1_80, est, 100.0)


class TestNonNullCorrection:
    def test_null_reduces_to_direction(self, ex2_80):
        est = estimate_alpha(ex2_80, tail_start=20.0)
        pred, actual, err = nonnull_correction(ex2_80, est, r=40.0)
        a = np.array([math.cos(est.alpha), math.sin(est.alpha), 0.0])
        np.testing.assert_allclose(pred.vec, actual.norm() * a, rtol=1e-14)
        assert err == pytest.approx(uncorrected_error(ex2_80, est, 40.0), rel=1e-12)

    def test_example1_helps(self, ex1_80):
        est = estimate_alpha(ex1_80)
        _, _, err = nonnull_correction(ex1_80, est, r=40.0)
        assert math.isfinite(err) and err < uncorrected_error(ex1_80, est, 40.0)

    def test_interpolated_radius(self, ex1_80):
        est = estimate_alpha(ex1_80)
        _, a, _ = nonnull_correction(ex1_80, est, r=40.005)
        _, b, _ = nonnull_correction(ex1_80, est, r=40.0)
        _, c, _ = nonnull_correction(ex1_80, est, r=40.01)
        mid = 0.5 * (b.vec + c.vec)
        assert np.linalg.norm(a.vec - mid) <= 1e-3 * np.linalg.norm(mid)

    def test_kappa_invariance(self):
        # the same complex-form data read with another bracket scale gives the same prediction
        e = integrate_quadratic(EX1, EX1_C, (0.0, 40.0))
        f = integrate_quadratic(EX1, EX1_C, (0.0, 40.0), conv=BracketConvention(2.0))
        ea, fa = estimate_alpha(e), estimate_alpha(f)
        assert ea.alpha == fa.alpha
        _, xa, erra = nonnull_correction(e, ea, r=20.0)
        _, xb, errb = nonnull_correction(f, fa, r=20.0)
        assert errb == pytest.approx(erra / 2, rel=1e-6)
