"""Multivariate sampling, sample p-means, trajectories, colinearity."""

import math

import numpy as np
import pytest
from scipy import stats

from trueskew import mvsn
from trueskew.errors import OptimizationError, ParameterError, UnreliableResultError


class TestSampling:
    def test_seed_reproducibility_bit_exact(self):
        spec = mvsn.MVSNSpec.make([5.0, 0.0])
        s1 = mvsn.sample_mvsn(spec, 3, 7)
        s2 = mvsn.sample_mvsn(spec, 3, 7)
        assert np.array_equal(s1.points, s2.points)

    def test_zero_skew_recovers_centered_normal(self):
        spec = mvsn.MVSNSpec.make([0.0, 0.0])
        s = mvsn.sample_mvsn(spec, 100_000, 3)
        band = 4.0 / math.sqrt(s.n)
        assert np.all(np.abs(s.points.mean(axis=0)) < band)

    def test_skewed_coordinate_has_positive_sample_skewness(self):
        spec = mvsn.MVSNSpec.make([5.0, 0.0])
        s = mvsn.sample_mvsn(spec, 100_000, 11)
        skew = stats.skew(s.points[:, 0])
        se = math.sqrt(6.0 / s.n)
        assert skew > 3.0 * se
        # the unskewed coordinate stays within noise
        assert abs(stats.skew(s.points[:, 1])) < 3.0 * se

    def test_binned_goodness_of_fit_against_density(self):
        # chi^2-style validation of the sampling representation against the
        # closed-form density on a 6x6 central grid plus an outside bucket
        spec = mvsn.MVSNSpec.make([3.0, 1.0], mu=[0.5, -0.25],
                                  sigma=[[1.0, 0.3], [0.3, 1.0]])
        n = 100_000
        s = mvsn.sample_mvsn(spec, n, 2718)
        lo, hi = -3.2, 3.8
        edges = np.linspace(lo, hi, 7)
        counts, _, _ = np.histogram2d(s.points[:, 0] - 0, s.points[:, 1],
                                      bins=[edges, edges])
        sub = 33
        expected = np.zeros_like(counts)
        for i in range(6):
            for j in range(6):
                xs = np.linspace(edges[i], edges[i + 1], sub)
                ys = np.linspace(edges[j], edges[j + 1], sub)
                gx, gy = np.meshgrid(xs, ys, indexing="ij")
                dens = np.exp(mvsn.mvsn_log_density(
                    spec, np.column_stack([gx.ravel(), gy.ravel()])))
                from scipy.integrate import simpson
                inner = simpson(dens.reshape(sub, sub), x=ys, axis=1)
                expected[i, j] = simpson(inner, x=xs)
        inside_expected = expected.sum()
        outside_count = n - counts.sum()
        outside_expected = max(1.0 - inside_expected, 1e-12)
        chi2 = float(np.sum((counts - n * expected) ** 2 / (n * expected)))
        chi2 += (outside_count - n * outside_expected) ** 2 / (n * outside_expected)
        dof = 36  # 37 cells - 1
        assert chi2 < stats.chi2.ppf(0.999, dof), f"chi2 = {chi2:.1f}"

    def test_non_spd_sigma_rejected(self):
        with pytest.raises(ParameterError):
            mvsn.MVSNSpec.make([1.0, 1.0], sigma=[[1.0, 2.0], [2.0, 1.0]])
        with pytest.raises(ParameterError):
            mvsn.MVSNSpec.make([1.0, 1.0], mu=[0.0])


class TestSamplePMeans:
    def test_p2_equals_sample_mean_closed_form(self):
        spec = mvsn.MVSNSpec.make([5.0, 0.0])
        s = mvsn.sample_mvsn(spec, 20_000, 11)
        nu2 = mvsn.mv_pmean(s, 2.0)
        assert np.max(np.abs(nu2 - s.points.mean(axis=0))) <= 1e-10

    def test_symmetric_sample_stays_near_location(self):
        spec = mvsn.MVSNSpec.make([0.0, 0.0], mu=[1.0, -2.0])
        s = mvsn.sample_mvsn(spec, 20_000, 4)
        for p in (1.0, 1.5, 3.0):
            nu = mvsn.mv_pmean(s, p)
            assert np.max(np.abs(nu - np.array([1.0, -2.0]))) < 0.03

    def test_geometric_median_is_fermat_point(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, 0.9]])
        gm = mvsn.mv_pmean(pts, 1.0, tol=1e-12)
        xs = np.linspace(0.3, 0.7, 401)
        ys = np.linspace(0.1, 0.5, 401)
        gx, gy = np.meshgrid(xs, ys)
        obj = sum(np.sqrt((gx - p[0]) ** 2 + (gy - p[1]) ** 2) for p in pts)
        i = np.unravel_index(np.argmin(obj), obj.shape)
        assert abs(gm[0] - gx[i]) <= 1e-3 and abs(gm[1] - gy[i]) <= 1e-3
        # interior Fermat point: the three unit pulls cancel
        pulls = (gm[None, :] - pts) / np.linalg.norm(gm[None, :] - pts, axis=1)[:, None]
        assert np.linalg.norm(pulls.sum(axis=0)) < 1e-6

    def test_objective_monotone_descent(self):
        spec = mvsn.MVSNSpec.make([2.0, -1.0])
        s = mvsn.sample_mvsn(spec, 5_000, 8)
        for p in (1.0, 1.5, 3.0):
            _, trace = mvsn.mv_pmean(s, p, return_trace=True)
            assert all(b <= a + 1e-12 for a, b in zip(trace, trace[1:]))

    def test_translation_equivariance(self):
        spec = mvsn.MVSNSpec.make([3.0, 0.5])
        s = mvsn.sample_mvsn(spec, 10_000, 5)
        shift = np.array([2.5, -1.25])
        for p in (1.0, 2.0, 3.0):
            base = mvsn.mv_pmean(s.points, p)
            moved = mvsn.mv_pmean(s.points + shift, p)
            assert np.max(np.abs(moved - (base + shift))) < 1e-7 * (1 + np.linalg.norm(shift))

    def test_rotation_equivariance(self):
        spec = mvsn.MVSNSpec.make([3.0, 0.5])
        s = mvsn.sample_mvsn(spec, 10_000, 6)
        theta = 0.7
        q = np.array([[math.cos(theta), -math.sin(theta)],
                      [math.sin(theta), math.cos(theta)]])
        for p in (1.0, 2.5):
            base = mvsn.mv_pmean(s.points, p)
            rotated = mvsn.mv_pmean(s.points @ q.T, p)
            assert np.max(np.abs(rotated - q @ base)) < 1e-8 * (1 + np.linalg.norm(base))

    def test_p_below_one_rejected(self):
        with pytest.raises(ParameterError):
            mvsn.mv_pmean(np.zeros((3, 2)) + np.eye(3, 2), 0.5)


class TestTrajectories:
    def test_reproducible_bit_exact(self):
        spec = mvsn.MVSNSpec.make([5.0, 5.0])
        a = mvsn.trajectory(spec, [1.0, 2.0, 3.0], n=5_000, seed=9)
        b = mvsn.trajectory(spec, [1.0, 2.0, 3.0], n=5_000, seed=9)
        assert a.entries == b.entries and a.tangents == b.tangents

    def test_aligned_with_skew_direction(self):
        spec = mvsn.MVSNSpec.make([5.0, 0.0])
        traj = mvsn.trajectory(spec, [1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0],
                               n=20_000, seed=1)
        assert mvsn.colinearity_score(traj, [1.0, 0.0]) >= 0.97
        assert mvsn.colinearity_score(traj, [0.0, 1.0]) <= 0.15

    def test_symmetric_has_no_reliable_tangents(self):
        spec = mvsn.MVSNSpec.make([0.0, 0.0])
        traj = mvsn.trajectory(spec, [1.0, 1.5, 2.0, 2.5, 3.0], n=20_000, seed=5)
        assert traj.tangents == ()
        with pytest.raises(UnreliableResultError):
            mvsn.colinearity_score(traj, [1.0, 0.0])

    def test_single_tangent_score_is_its_cosine(self):
        spec = mvsn.MVSNSpec.make([5.0, 5.0])
        traj = mvsn.trajectory(spec, [1.0, 2.0, 3.0], n=20_000, seed=2)
        assert len(traj.tangents) == 1
        tau = np.asarray(traj.tangents[0][1])
        direction = np.array([1.0, 1.0]) / math.sqrt(2.0)
        assert mvsn.colinearity_score(traj, [1.0, 1.0]) == pytest.approx(float(tau @ direction))

    def test_tangent_norms_are_unit(self):
        spec = mvsn.MVSNSpec.make([4.0, 1.0])
        traj = mvsn.trajectory(spec, [1.0, 1.5, 2.0, 2.5, 3.0], n=10_000, seed=3)
        for _, tau in traj.tangents:
            assert np.linalg.norm(tau) == pytest.approx(1.0, abs=1e-12)

    def test_density_grid_shape(self):
        spec = mvsn.MVSNSpec.make([5.0, 5.0])
        rows, axes = mvsn.density_grid(spec, points_per_axis=21)
        assert rows.shape == (441, 3)
        assert np.all(rows[:, 2] >= 0)
        with pytest.raises(ParameterError):
            mvsn.density_grid(mvsn.MVSNSpec.make([1.0, 1.0, 1.0]))
