import math

import numpy as np
import pytest
from scipy import integrate

from stein_rmt import stein
from stein_rmt.errors import QuadratureError

E_BOUND = 1 + 2 / math.e


class TestSmoothingH:
    def test_branch_values(self):
        p = stein.SmoothingParams(t=1.0, delta=0.5)
        assert stein.smoothing_h(p, 0.2) == 1.0
        assert stein.smoothing_h(p, 0.5) == 1.0  # boundary t - delta
        assert stein.smoothing_h(p, 1.0 - 0.25) == pytest.approx(0.5)  # t - delta/2
        assert stein.smoothing_h(p, 1.5) == 0.0
        assert stein.smoothing_h(p, 1.0) == 0.0  # boundary t belongs to branch 3: 2*0/d^2

    def test_continuity_at_breakpoints(self):
        p = stein.SmoothingParams(t=2.0, delta=0.8)
        for b in (p.t - p.delta, p.t - p.delta / 2, p.t):
            left = stein.smoothing_h(p, b - 1e-12)
            right = stein.smoothing_h(p, b + 1e-12)
            assert abs(left - right) < 1e-10

    def test_nonincreasing_and_lipschitz(self):
        p = stein.SmoothingParams(t=1.0, delta=0.3)
        x = np.linspace(0, 2, 40001)
        h = stein.smoothing_h(p, x)
        d = np.diff(h)
        assert (d <= 1e-15).all()
        quot = np.abs(d) / np.diff(x)
        assert quot.max() <= 2 / p.delta + 1e-9

    def test_norms(self):
        p = stein.SmoothingParams(t=1.0, delta=0.5)
        x = np.linspace(0, 3, 200001)
        h = stein.smoothing_h(p, x)
        assert h.max() == 1.0
        quot = np.abs(np.diff(h)) / np.diff(x)
        # sup |h'| = 2/delta attained at t - delta/2, up to grid resolution
        assert quot.max() == pytest.approx(2 / p.delta, rel=1e-3)

    def test_small_t_degenerate_shoulder(self):
        # t < delta: branch boundaries fall below zero; h still valid on [0, inf)
        p = stein.SmoothingParams(t=0.5, delta=1.0)
        assert stein.smoothing_h(p, 0.0) == pytest.approx(0.5)
        assert stein.smoothing_h(p, 0.5) == 0.0

    def test_validation(self):
        with pytest.raises(ValueError):
            stein.SmoothingParams(t=-1.0, delta=0.5)
        with pytest.raises(ValueError):
            stein.SmoothingParams(t=1.0, delta=0.0)


class TestExpWeightedQuadrature:
    def test_linear_exact(self):
        # int_0^L (x) e^{-x} dx = 1 - e^{-L}(1+L)
        got = stein.exp_weighted_integral(lambda x: x, 0.0, 3.0, 1e-14)
        assert got == pytest.approx(1 - math.exp(-3) * 4, abs=1e-13)

    def test_shifted_weight(self):
        # int_2^5 sin(x) e^{-(x-2)} dx against scipy
        ref, _ = integrate.quad(lambda x: math.sin(x) * math.exp(-(x - 2)), 2, 5)
        got = stein.exp_weighted_integral(np.sin, 2.0, 5.0, 1e-13)
        assert got == pytest.approx(ref, abs=1e-11)

    def test_moments_small_vs_large_branch(self):
        # both branches of the moment formulas agree near the switch point
        lo = stein._exp_moments(0.5 - 1e-12)
        hi = stein._exp_moments(0.5 + 1e-12)
        for a, b in zip(lo, hi):
            assert a == pytest.approx(b, rel=1e-10)

    def test_nonconvergence_raises(self, monkeypatch):
        # a square-root kink refines too slowly for a tiny depth budget
        monkeypatch.setattr(stein, "_MAX_DEPTH", 5)
        with pytest.raises(QuadratureError):
            stein.exp_weighted_integral(math.sqrt, 0.0, 1.0, 1e-15)


class TestSteinSolve:
    def test_constant_h_zero_solution(self):
        sol = stein.stein_solve(lambda x: np.full_like(np.asarray(x, float), 0.3))
        assert np.abs(sol.values).max() <= 10 * sol.quad_tol
        assert sol.h_mean == pytest.approx(0.3, abs=1e-10)

    def test_linear_h_constant_solution(self):
        sol = stein.stein_solve(lambda x: np.asarray(x, float))
        assert sol.h_mean == pytest.approx(1.0, abs=1e-10)
        assert np.abs(sol.values + 1.0).max() <= 10 * sol.quad_tol
        assert np.abs(sol.deriv).max() <= 10 * sol.quad_tol

    def test_residual_gate(self):
        for t, d in ((1.0, 0.5), (0.5, 0.5), (4.0, 0.1)):
            h = stein.smoothing_h_func(stein.SmoothingParams(t=t, delta=d))
            sol = stein.stein_solve(h)
            assert sol.residual().max() <= 10 * sol.quad_tol

    def test_against_direct_quadrature_smooth(self):
        # independent evaluation of the defining integral with scipy
        h = np.sin
        sol = stein.stein_solve(h)
        h_mean_ref, _ = integrate.quad(lambda x: math.sin(x) * math.exp(-x), 0, 60)
        assert sol.h_mean == pytest.approx(h_mean_ref, abs=1e-10)
        for w in (0.05, 0.5, 1.0, 3.0, 7.5):
            i = int(np.argmin(np.abs(sol.grid - w)))
            g = sol.grid[i]
            tail, _ = integrate.quad(
                lambda x: (math.sin(x) - h_mean_ref) * math.exp(-x), g, g + 60, limit=200
            )
            ref = -math.exp(g) / g * tail
            assert sol.values[i] == pytest.approx(ref, abs=1e-8)

    def test_against_direct_quadrature_smoothing(self):
        p = stein.SmoothingParams(t=1.0, delta=0.5)
        h = stein.smoothing_h_func(p)
        sol = stein.stein_solve(h)
        for w in (0.02, 0.6, 1.2, 2.0):
            i = int(np.argmin(np.abs(sol.grid - w)))
            g = sol.grid[i]
            tail, _ = integrate.quad(
                lambda x: (stein.smoothing_h(p, x) - sol.h_mean) * math.exp(-x),
                g,
                g + 60,
                limit=300,
                points=[b for b in h.breakpoints if g < b < g + 60],
            )
            ref = -math.exp(g) / g * tail
            assert sol.values[i] == pytest.approx(ref, abs=1e-8)

    def test_value_at_zero(self):
        p = stein.SmoothingParams(t=0.5, delta=1.0)
        h = stein.smoothing_h_func(p)
        sol = stein.stein_solve(h)
        assert sol.grid[0] == 0.0
        assert sol.values[0] == pytest.approx(stein.smoothing_h(p, 0.0) - sol.h_mean, abs=1e-10)

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            stein.stein_solve(np.sin, grid=[0.0, 0.0, 1.0])
        with pytest.raises(ValueError):
            stein.stein_solve(np.sin, grid=[-1.0, 1.0])
        with pytest.raises(ValueError):
            stein.stein_solve(np.sin, quad_tol=0.0)


class TestVerifyBounds:
    def test_linear_h(self):
        sol = stein.stein_solve(lambda x: np.asarray(x, float))
        rep = stein.verify_stein_bounds(sol, h_prime_sup=1.0)
        assert rep.sup_f == pytest.approx(1.0, abs=1e-9)
        assert rep.f_bound == pytest.approx(E_BOUND)
        assert rep.all_pass

    def test_smoothing_sweep(self):
        for t in (0.5, 1.0, 2.0, 4.0):
            for d in (0.1, 0.5, 1.0):
                h = stein.smoothing_h_func(stein.SmoothingParams(t=t, delta=d))
                sol = stein.stein_solve(h)
                rep = stein.verify_stein_bounds(sol, h_prime_sup=2.0 / d)
                assert rep.all_pass, (t, d, rep)

    def test_fd_residual_reported(self):
        h = stein.smoothing_h_func(stein.SmoothingParams(t=1.0, delta=0.5))
        sol = stein.stein_solve(h)
        rep = stein.verify_stein_bounds(sol, h_prime_sup=4.0)
        assert np.isfinite(rep.residual_fd_sup)
