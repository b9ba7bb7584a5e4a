"""Engine tests: balance roots, curves, discrete/empirical means, equivariance."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trueskew import distributions as d
from trueskew import pmeans as pm
from trueskew.errors import BracketError, CurveError, DomainError, ParameterError

EXP1 = d.parse_distribution("exponential(1)")
NORMAL = d.parse_distribution("normal(0,1)")
LEVY = d.parse_distribution("levy(mu=0,lambda=1)")


class TestBalance:
    def test_exponential_median_balances_probabilities(self):
        assert pm.balance(EXP1, math.log(2.0), 1.0) == pytest.approx(0.0, abs=1e-12)

    def test_exponential_mean_balances_first_moments(self):
        assert pm.balance(EXP1, 1.0, 2.0) == pytest.approx(0.0, abs=1e-11)

    @pytest.mark.parametrize("p", [1.0, 2.0, 3.0, 4.5, 6.0])
    def test_normal_center_balances_all_p(self, p):
        assert pm.balance(NORMAL, 0.0, p) == pytest.approx(0.0, abs=1e-11)

    def test_balance_strictly_decreasing_in_a(self):
        # uniqueness root: 200 random (spec, p, a < a') triples
        rng = np.random.default_rng(77)
        specs = [EXP1, NORMAL, d.parse_distribution("weibull(k=2)"),
                 d.parse_distribution("gamma(shape=2)"),
                 d.parse_distribution("log_logistic(beta=2.5)")]
        for _ in range(200):
            spec = specs[rng.integers(len(specs))]
            cap = pm.p_domain(spec).hi
            p = float(rng.uniform(1.05, min(4.0, cap - 0.1)))
            q1 = d.quantile(spec, 0.1)
            q2 = d.quantile(spec, 0.9)
            a = float(rng.uniform(q1, q2))
            b = float(rng.uniform(q1, q2))
            a, b = min(a, b), max(a, b)
            if b - a < 1e-3:
                continue
            assert pm.balance(spec, a, p, tol_rel=1e-8, tol_abs=1e-11) > \
                   pm.balance(spec, b, p, tol_rel=1e-8, tol_abs=1e-11)

    def test_p_outside_domain_rejected(self):
        with pytest.raises(DomainError):
            pm.balance(LEVY, 1.0, 1.6)
        with pytest.raises(DomainError):
            pm.solve_pmean(LEVY, 1.4999)
        with pytest.raises(DomainError):
            pm.solve_pmean(EXP1, 0.5)


class TestSolve:
    def test_weibull_median_vs_cdf_bisection_oracle(self):
        w3 = d.parse_distribution("weibull(3,1)")
        lo, hi = 0.1, 3.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if d.cdf(w3, mid) < 0.5:
                lo = mid
            else:
                hi = mid
        oracle = 0.5 * (lo + hi)
        nu = pm.solve_pmean(w3, 1.0).nu
        assert nu == pytest.approx(oracle, abs=1e-8)
        assert nu == pytest.approx(math.log(2.0) ** (1 / 3), abs=1e-8)

    def test_levy_median_vs_quantile_oracle(self):
        nu = pm.solve_pmean(LEVY, 1.0).nu
        assert nu == pytest.approx(2.1981093383, abs=1e-6)

    def test_gamma_mean(self):
        g2 = d.parse_distribution("gamma(shape=2)")
        assert pm.solve_pmean(g2, 2.0).nu == pytest.approx(2.0, abs=1e-8)

    def test_residual_within_tolerance(self):
        for spec, p in [(EXP1, 3.0), (NORMAL, 2.5),
                        (d.parse_distribution("weibull(k=2)"), 4.0)]:
            pt = pm.solve_pmean(spec, p, tol=1e-10)
            assert pt.balance_residual <= 1e-10

    def test_support_confinement(self):
        for expr, ps in [("weibull(k=3)", [1, 2, 5, 8]),
                         ("uniform(0,1)", [1, 2, 10, 40]),
                         ("levy(mu=0,lambda=1)", [1, 1.2, 1.44]),
                         ("gamma(shape=0.5)", [1, 2, 4])]:
            spec = d.parse_distribution(expr)
            sup = d.support(spec)
            for p in ps:
                nu = pm.solve_pmean(spec, p).nu
                assert sup.lower < nu < sup.upper

    def test_median_mean_identities(self):
        cases = ["weibull(k=2)", "exponential(1)", "log_logistic(beta=2.5)",
                 "uniform(0,1)", "normal(0,1)", "skew_normal(alpha=2)",
                 "gamma(shape=3)"]
        for expr in cases:
            spec = d.parse_distribution(expr)
            facts = d.analytic_facts(spec)
            if facts.median is not None:
                assert pm.solve_pmean(spec, 1.0).nu == pytest.approx(facts.median, abs=1e-8)
            if facts.mean is not None:
                assert pm.solve_pmean(spec, 2.0).nu == pytest.approx(facts.mean, abs=1e-8)


class TestGrowthSign:
    def test_exponential_increasing_at_two(self):
        assert pm.dnu_sign(EXP1, 2.0) == "increasing"

    def test_normal_flat_by_symmetry(self):
        assert pm.dnu_sign(NORMAL, 3.0) == "flat"

    def test_sign_matches_finite_difference(self):
        w = d.parse_distribution("weibull(k=2)")
        curve = pm.trace_curve(w, [1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0])
        for pt in curve.points:
            if pt.dnu_dp is None:
                continue
            # both defined and the slope clearly resolvable
            if abs(pt.dnu_dp) > 1e-6:
                assert pt.dnu_sign == ("increasing" if pt.dnu_dp > 0 else "decreasing")


class TestCurve:
    def test_uniform_midpoint_limit(self):
        u = d.parse_distribution("uniform(0,1)")
        curve = pm.trace_curve(u, [1, 2, 5, 10, 25, 50])
        nus = [pt.nu for pt in curve.points]
        assert abs(nus[-1] - 0.5) < 0.01
        assert all(abs(v - 0.5) <= abs(nus[0] - 0.5) + 1e-12 for v in nus)

    def test_symmetric_curve_is_flat_zero(self):
        sn0 = d.parse_distribution("skew_normal(alpha=0)")
        curve = pm.trace_curve(sn0, [1, 2, 3, 4, 5])
        assert max(abs(pt.nu) for pt in curve.points) < 1e-8

    def test_weibull_strictly_increasing_above_mode(self):
        w = d.parse_distribution("weibull(3.2,1)")
        grid = [1 + 0.5 * i for i in range(15)]
        curve = pm.trace_curve(w, grid)
        nus = [pt.nu for pt in curve.points]
        assert all(b > a + 1e-9 for a, b in zip(nus, nus[1:]))
        assert nus[0] > d.analytic_facts(w).mode

    def test_half_line_divergence(self):
        n10 = pm.solve_pmean(EXP1, 10.0).nu
        n30 = pm.solve_pmean(EXP1, 30.0).nu
        assert n30 - n10 >= 1.0

    def test_continuity_under_refinement(self):
        w = d.parse_distribution("weibull(k=2)")
        coarse = pm.trace_curve(w, [1.0, 2.0, 3.0, 4.0, 5.0], with_dnu=False)
        fine_grid = [1.0 + 0.25 * i for i in range(17)]
        fine = pm.trace_curve(w, fine_grid, with_dnu=False)

        def interp_error(curve, probes):
            ps = [pt.p for pt in curve.points]
            ns = [pt.nu for pt in curve.points]
            errs = []
            for p, nu in probes:
                errs.append(abs(np.interp(p, ps, ns) - nu))
            return max(errs)

        probes = [(1.625, pm.solve_pmean(w, 1.625).nu), (3.875, pm.solve_pmean(w, 3.875).nu)]
        assert interp_error(fine, probes) < interp_error(coarse, probes)

    def test_single_failure_marked_unknown(self):
        grid = [1.0, 1.1, 1.2, 1.3, 1.4, 1.4995]
        curve = pm.trace_curve(LEVY, grid)
        assert sum(1 for pt in curve.points if not math.isfinite(pt.nu)) == 1
        assert curve.points[-1].dnu_sign == "unknown"

    def test_too_many_failures_raise(self):
        with pytest.raises(CurveError):
            pm.trace_curve(LEVY, [1.0, 1.4991, 1.4995])

    def test_grid_helpers(self):
        grid = pm.make_grid(1.0, 8.0, 0.5)
        assert len(grid) == 15 and grid[0] == 1.0 and grid[-1] == 8.0
        kept, warnings = pm.clip_grid(LEVY, pm.make_grid(1.0, 3.0, 0.25))
        assert kept == [1.0, 1.25]
        assert any("ceiling" in w for w in warnings)

    def test_p_domain(self):
        dom = pm.p_domain(LEVY)
        assert dom.lo == 1.0 and dom.hi == 1.5 and dom.include_mode
        dom_e = pm.p_domain(EXP1)
        assert math.isinf(dom_e.hi) and not dom_e.include_mode


class TestDiscrete:
    BINOM = [(0.0, 4 / 9), (1.0, 4 / 9), (2.0, 1 / 9)]

    def test_binomial_left_median(self):
        assert pm.discrete_pmean(self.BINOM, 1.0) == 1.0

    def test_binomial_mean_exact(self):
        assert pm.discrete_pmean(self.BINOM, 2.0) == 2 / 3

    def test_bernoulli_mean(self):
        assert pm.discrete_pmean([(0.0, 2 / 3), (1.0, 1 / 3)], 2.0) == pytest.approx(1 / 3)

    def test_bernoulli_curve_closed_forms(self):
        bern = [(0.0, 2 / 3), (1.0, 1 / 3)]
        # balance roots: p=3 -> sqrt(2)-1, p=4 -> 1/(1+2^(1/3))
        assert pm.discrete_pmean(bern, 3.0) == pytest.approx(math.sqrt(2.0) - 1.0, abs=1e-12)
        assert pm.discrete_pmean(bern, 4.0) == pytest.approx(1.0 / (1.0 + 2.0 ** (1 / 3)), abs=1e-12)

    def test_degenerate_single_atom(self):
        assert pm.discrete_pmean([(3.5, 1.0)], 4.0) == 3.5

    def test_validation(self):
        with pytest.raises(ParameterError):
            pm.discrete_pmean([(0.0, 0.6), (1.0, 0.6)], 1.0)
        with pytest.raises(ParameterError):
            pm.discrete_pmean([(0.0, -0.5), (1.0, 1.5)], 1.0)

    @given(raw=st.lists(st.tuples(st.floats(-50, 50), st.floats(0.01, 1.0)),
                        min_size=2, max_size=8),
           p=st.floats(1.0, 6.0))
    @settings(max_examples=80, deadline=None)
    def test_pmean_confined_to_atom_hull(self, raw, p):
        total = sum(q for _, q in raw)
        pmf = [(a, q / total) for a, q in raw]
        # renormalization may leave a tiny residual; skip pathological sums
        if abs(sum(q for _, q in pmf) - 1.0) > 1e-12:
            return
        nu = pm.discrete_pmean(pmf, p)
        atoms = [a for a, _ in pmf]
        assert min(atoms) - 1e-9 <= nu <= max(atoms) + 1e-9


class TestEmpirical:
    def test_mean(self):
        assert pm.empirical_pmean([0.0, 0.0, 3.0], 2.0) == pytest.approx(1.0)

    def test_lower_median(self):
        assert pm.empirical_pmean([1.0, 2.0, 4.0, 8.0], 1.0) == 2.0

    def test_large_sample_mean_within_clt_band(self):
        rng = np.random.default_rng(42)
        xs = rng.exponential(1.0, size=100_000)
        nu2 = pm.empirical_pmean(xs, 2.0)
        band = 3.0 * np.std(xs) / math.sqrt(xs.size)
        assert abs(nu2 - 1.0) <= band

    def test_needs_two_samples(self):
        with pytest.raises(ParameterError):
            pm.empirical_pmean([1.0], 2.0)


class TestAffineEquivariance:
    def test_weibull_scaled_shifted(self):
        spec = d.parse_distribution("weibull(2,1)")
        rep = pm.verify_affine_equivariance(spec, 3.0, -1.0, [1.0, 2.0, 4.0])
        assert rep["passed"] and rep["max_deviation"] <= 1e-7

    def test_identity(self):
        rep = pm.verify_affine_equivariance(EXP1, 1.0, 0.0, [1.0, 2.0])
        assert rep["max_deviation"] <= 1e-12

    def test_exponential_mean_linearity(self):
        rep = pm.verify_affine_equivariance(EXP1, 2.0, 5.0, [2.0])
        assert rep["per_p"][0]["expected"] == pytest.approx(7.0, abs=1e-9)
        assert rep["passed"]

    def test_negative_scale_through_mirror(self):
        spec = d.parse_distribution("weibull(2,1)")
        rep = pm.verify_affine_equivariance(spec, -2.0, 1.0, [1.0, 2.0, 3.0])
        assert rep["passed"]
