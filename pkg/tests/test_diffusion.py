import math

import numpy as np
import pytest

from stein_rmt import diffusion as df
from stein_rmt import ensembles as en
from stein_rmt import kernels
from stein_rmt.errors import StepFailureError
from stein_rmt.metrics import two_sample_ks

TWO_PI = 2 * math.pi


def seeded(seed=0):
    return np.random.default_rng(seed)


def equispaced_sample(n, beta=2.0):
    return en.SpectrumSample(angles=(np.arange(n) + 0.5) * TWO_PI / n, n=n, beta=beta)


class TestCdbmParams:
    def test_beta_below_one_rejected(self):
        with pytest.raises(ValueError):
            df.CdbmParams(beta=0.5, dt=1e-4, T=0.1)

    def test_positive_steps(self):
        with pytest.raises(ValueError):
            df.CdbmParams(beta=2.0, dt=0.0, T=0.1)


class TestDrift:
    def test_equispaced_drift_vanishes(self):
        th = equispaced_sample(10).angles[None, :]
        drift = kernels.cot_drift_sum(th)
        assert np.abs(drift).max() <= 1e-12

    def test_two_particles_repel(self):
        th = np.array([[1.0, 1.2]])
        d = kernels.cot_drift_sum(th)
        assert d[0, 0] < 0 < d[0, 1]


class TestCdbmStep:
    def test_n1_pure_brownian(self):
        x = en.SpectrumSample(angles=np.array([2.0]), n=1, beta=2.0)
        params = df.CdbmParams(beta=2.0, dt=1e-3, T=1.0)
        rng = seeded(5)
        res = df.cdbm_step(x, params, rng)
        noise = seeded(5).standard_normal((1, 1))[0, 0]
        expected = (2.0 + math.sqrt(2e-3) * noise) % TWO_PI
        assert res.sample.angles[0] == pytest.approx(expected, rel=1e-14)
        assert res.dt == 1e-3

    def test_ordering_preserved(self):
        params = df.CdbmParams(beta=2.0, dt=1e-4, T=1.0)
        x = equispaced_sample(8)
        rng = seeded(1)
        for _ in range(50):
            res = df.cdbm_step(x, params, rng)
            x = res.sample
            assert (np.diff(x.angles) > 0).all()
            assert 0 <= x.angles[0] and x.angles[-1] < TWO_PI

    def test_halving_on_collision(self):
        # huge dt forces ordering violations; the step must shrink, not fail
        x = equispaced_sample(8)
        params = df.CdbmParams(beta=2.0, dt=1.0, T=1.0, max_halvings=40)
        res = df.cdbm_step(x, params, seeded(3))
        assert res.dt < 1.0

    def test_step_failure_raises(self):
        x = en.SpectrumSample(angles=np.array([1.0, 1.0 + 1e-7, 2.0]), n=3, beta=2.0)
        params = df.CdbmParams(
            beta=2.0, dt=10.0, T=10.0, max_halvings=1, collision_guard=1e-2
        )
        with pytest.raises(StepFailureError):
            df.cdbm_step(x, params, seeded(2))

    def test_wrap_preserves_cyclic_order(self):
        # configuration hugging 2pi: after wrapping, gaps are a cyclic rotation
        x = en.SpectrumSample(
            angles=np.array([5.0, 5.5, 6.0, 6.28]), n=4, beta=2.0
        )
        params = df.CdbmParams(beta=2.0, dt=1e-3, T=1.0)
        res = df.cdbm_step(x, params, seeded(4))
        a = res.sample.angles
        assert (np.diff(a) > 0).all() and 0 <= a[0] and a[-1] < TWO_PI


class TestCdbmRun:
    def test_single_step_equivalence(self):
        x = equispaced_sample(6)
        params = df.CdbmParams(beta=2.0, dt=1e-3, T=1e-3)
        out_run = df.cdbm_run(x, params, seeded(9))
        out_step = df.cdbm_step(x, params, seeded(9)).sample
        assert np.array_equal(out_run.angles, out_step.angles)

    def test_final_time_exact(self):
        # T not a multiple of dt: the last partial step lands exactly on T
        x = equispaced_sample(5)
        params = df.CdbmParams(beta=1.0, dt=3e-4, T=1e-3)
        out = df.cdbm_run(x, params, seeded(10))
        assert (np.diff(out.angles) > 0).all()

    def test_equilibrium_preserved_beta2(self):
        n, N = 8, 1200
        th0 = en.sample_cue_many(n, N, seeded(12))
        w0 = np.abs(np.exp(1j * th0).sum(axis=1)) ** 2
        params = df.CdbmParams(beta=2.0, dt=2e-4, T=0.02)
        snaps = df.cdbm_evolve_many(th0.copy(), params, seeded(13), [0.02])
        wT = np.abs(np.exp(1j * snaps[0.02]).sum(axis=1)) ** 2
        assert two_sample_ks(w0, wT).p_value > 0.01

    def test_dt_halving_within_noise(self):
        n, N, T = 8, 2000, 0.05
        th0 = en.sample_cue_many(n, N, seeded(14))
        m = []
        s = []
        for i, dt in enumerate((1e-3, 5e-4)):
            params = df.CdbmParams(beta=2.0, dt=dt, T=T)
            snap = df.cdbm_evolve_many(th0.copy(), params, seeded(20 + i), [T])[T]
            p1 = np.exp(1j * snap).sum(axis=1).real
            m.append(p1.mean())
            s.append(p1.std(ddof=1) / math.sqrt(N))
        assert abs(m[0] - m[1]) <= 3 * math.hypot(s[0], s[1])


class TestSphereBm:
    def test_radius_exact(self):
        x = en.sample_sphere_many(10, 300, seeded(1))
        y = df.sphere_bm_step_many(x, 1e-2, seeded(2))
        nrm = np.linalg.norm(y, axis=1)
        assert np.abs(nrm - math.sqrt(10)).max() <= 1e-12 * math.sqrt(10)

    def test_single_point_api(self):
        p = en.sample_sphere(5, seeded(3))
        q = df.sphere_bm_step(p, 1e-3, seeded(4))
        assert isinstance(q, en.SpherePoint)
        assert q.radius == p.radius

    def test_drift_richardson(self):
        # (1/t) E[X1(t) - X1] extrapolates to -((n-1)/n) X1-weighted mean
        n, N = 10, 60_000
        rng = seeded(6)
        x = en.sample_sphere_many(n, N, rng)
        ts = np.array([1e-2, 5e-3, 2.5e-3])
        ys = []
        for t in ts:
            xt = df.sphere_bm_step_many(x, t, rng)
            ys.append((xt[:, 0] - x[:, 0]) / t - (-(n - 1) / n * x[:, 0]))
        s0, s1, s2 = len(ts), ts.sum(), (ts**2).sum()
        det = s0 * s2 - s1 * s1
        wgt = (s2 - s1 * ts) / det
        per_rep = sum(w * y for w, y in zip(wgt, ys))
        se = per_rep.std(ddof=1) / math.sqrt(N)
        assert abs(per_rep.mean()) <= 3 * se

    def test_quadratic_variation(self):
        n, N = 10, 60_000
        rng = seeded(7)
        x = en.sample_sphere_many(n, N, rng)
        t = 2.5e-3
        xt = df.sphere_bm_step_many(x, t, rng)
        y = (xt[:, 0] - x[:, 0]) ** 2 / t - 2 * (1 - x[:, 0] ** 2 / n)
        se = y.std(ddof=1) / math.sqrt(N)
        # one-step bias is O(t); 3 sigma plus that margin
        assert abs(y.mean()) <= 3 * se + 10 * t


class TestPerturbPair:
    def test_constant_statistic(self):
        src = df.SphereSource(6)
        pairs = df.perturb_pair(src, lambda x: np.ones(x.shape[0]), 1e-2, 50, seeded(8))
        assert all(p.wt - p.w0 == 0.0 for p in pairs)

    def test_exchangeability_ks(self):
        src = df.SphereSource(8)
        pairs = df.perturb_pair(src, lambda x: x[:, 0], 0.05, 8000, seeded(9))
        w0 = np.array([p.w0 for p in pairs])
        wt = np.array([p.wt for p in pairs])
        assert two_sample_ks(w0, wt).p_value > 0.01

    def test_grid_shares_initial_sample(self):
        src = df.CueSource(5)
        grid = df.perturb_pairs_grid(
            src, lambda a: np.abs(np.exp(1j * a).sum(axis=1)) ** 2, [1e-3, 5e-4, 2.5e-4],
            20, seeded(10), keep_configs=True,
        )
        w0_sets = [np.array([p.w0 for p in grid[t]]) for t in grid]
        assert np.array_equal(w0_sets[0], w0_sets[1])
        assert np.array_equal(w0_sets[0], w0_sets[2])
        x0 = next(iter(grid.values()))[0].x0
        assert x0 is not None and x0.shape == (5,)

    def test_invalid_t(self):
        with pytest.raises(ValueError):
            df.perturb_pair(df.SphereSource(5), lambda x: x[:, 0], -1.0, 5, seeded(0))
