"""Exact piecewise-polynomial machinery and the summation counterexample."""

import math
from fractions import Fraction as F

import numpy as np
import pytest

from trueskew import pmeans as pm
from trueskew import piecewise as pw
from trueskew.errors import ParameterError
from trueskew.piecewise import PiecewisePolyDensity, convolve, piecewise_spec


def log_weighted_integral_oracle(density: PiecewisePolyDensity, center: float,
                                 side: str) -> float:
    """Closed-form oracle for the p = 1 growth integrand on piecewise pieces.

    Uses the antiderivative of y^n log y, namely
    y^(n+1) (log y / (n+1) - 1/(n+1)^2), integrating f(center +/- y) log y
    piecewise-exactly in y.  Independent of the quadrature path.
    """
    sgn = 1.0 if side == "+" else -1.0
    total = 0.0
    sup = density.support
    length = (sup.upper - center) if side == "+" else (center - sup.lower)
    cuts = sorted({0.0, length} | {
        (b - center) * sgn for b in density.breakpoints()
        if 0.0 < (b - center) * sgn < length})
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        mid_y = 0.5 * (lo + hi)
        x_mid = center + sgn * mid_y
        idx = int(np.searchsorted(density._edges, x_mid, side="right") - 1)
        coeffs = [float(c) for c in density.pieces[idx].coeffs]
        # expand f(center +/- y) = sum_m c_m (center +/- y)^m into powers of y
        poly_y = np.zeros(len(coeffs))
        for m, c in enumerate(coeffs):
            for j in range(m + 1):
                poly_y[j] += c * math.comb(m, j) * center ** (m - j) * sgn ** j

        def anti(y):
            if y == 0.0:
                return 0.0
            acc = 0.0
            for n, c in enumerate(poly_y):
                acc += c * y ** (n + 1) * (math.log(y) / (n + 1) - 1.0 / (n + 1) ** 2)
            return acc

        total += anti(hi) - anti(lo)
    return total


class TestConstruction:
    def test_triangle_convolution(self):
        u = pw.uniform_density(0, 1)
        tri = convolve(u, u)
        assert tri.pdf(1.0) == pytest.approx(1.0)
        assert tri.total_mass() == 1
        assert [p.coeffs for p in tri.pieces] == [(F(0), F(1)), (F(2), F(-1))]

    def test_validation_gap(self):
        with pytest.raises(ParameterError):
            PiecewisePolyDensity([(0, 1, (1,)), (2, 3, (1,))])

    def test_validation_negative(self):
        with pytest.raises(ParameterError):
            PiecewisePolyDensity([(0, 2, (1, -2))])

    def test_validation_mass(self):
        with pytest.raises(ParameterError):
            PiecewisePolyDensity([(0, 1, (F(1, 2),))])

    def test_serialization_roundtrip_exact(self):
        X = pw.counterexample_density(F(3, 5))
        again = PiecewisePolyDensity.from_json_obj(X.to_json_obj())
        assert again.pieces == X.pieces

    def test_from_json_rejects_malformed(self):
        with pytest.raises(ParameterError):
            PiecewisePolyDensity.from_json_obj([{"coefficients": ["1"]}])


class TestConvolution:
    def test_commutativity_exact(self):
        f = pw.linear_density(1)
        g = pw.uniform_density(0, 1)
        assert convolve(f, g).pieces == convolve(g, f).pieces

    def test_mass_conservation(self):
        rng_pairs = [(pw.linear_density(1), pw.linear_density(4)),
                     (pw.uniform_density(0, 2), pw.linear_density(2)),
                     (pw.counterexample_density(F(3, 5)), pw.uniform_density(0, 1))]
        for f, g in rng_pairs:
            assert convolve(f, g).total_mass() == 1

    def test_mean_additivity_through_engine(self):
        f = pw.linear_density(1)
        g = pw.linear_density(2)
        Z = convolve(f, g)
        nu2 = pm.solve_pmean(piecewise_spec(Z), 2.0).nu
        assert nu2 == pytest.approx(f.mean() + g.mean(), abs=1e-9)
        assert Z.mean() == pytest.approx(f.mean() + g.mean(), abs=1e-15)

    def test_narrow_kernel_approximates_identity(self):
        g = pw.linear_density(1)
        eps = F(1, 1000)
        narrow = pw.uniform_density(0, eps)
        Z = convolve(narrow, g)
        xs = np.linspace(0.05, 1.9, 150)
        assert np.max(np.abs(Z.pdf(xs) - g.pdf(xs))) <= 5e-3

    def test_degree_adds(self):
        f = pw.linear_density(1)
        Z = convolve(f, f)
        assert max(len(p.coeffs) for p in Z.pieces) == 4  # cubic pieces


class TestCounterexample:
    def test_exact_pieces_at_three_fifths(self):
        X = pw.counterexample_density(F(3, 5))
        Z = convolve(X, X)
        expected = [
            (F(0), F(1), (F(0), F(9, 25))),
            (F(1), F(2), (F(6, 25), F(3, 25))),
            (F(2), F(3), (F(28, 25), F(-8, 25))),
            (F(3), F(4), (F(16, 25), F(-4, 25))),
        ]
        assert [(p.a, p.b, p.coeffs) for p in Z.pieces] == expected
        assert Z.pdf(1.0) == pytest.approx(9 / 25)
        assert Z.pdf(2.0) == pytest.approx(12 / 25)
        assert Z.mode() == 2.0

    def test_report_reproduces_known_numbers(self):
        rep = pw.counterexample_report(F(3, 5))
        assert rep["summand_conclusion"] == "truly_positive"
        assert rep["summand_grade"] == "analytic"
        assert abs(rep["sum_median"] - 1.786) < 0.002
        # exact rational root of the CDF piece: (sqrt(129) - 6) / 3
        assert rep["sum_median_cdf_root"] == pytest.approx((math.sqrt(129.0) - 6.0) / 3.0,
                                                           abs=1e-12)
        assert abs(rep["growth_imbalance_at_p1"] - (-0.000699)) < 5e-5
        assert rep["decreasing_at_p1"]
        assert rep["conclusion"] == "sum_not_truly_positive"

    def test_growth_integral_against_closed_form_oracle(self):
        X = pw.counterexample_density(F(3, 5))
        Z = convolve(X, X)
        spec = piecewise_spec(Z)
        nu1 = pm.solve_pmean(spec, 1.0).nu
        diff, err = pm.growth_imbalance(spec, 1.0, nu=nu1)
        oracle = (log_weighted_integral_oracle(Z, nu1, "+")
                  - log_weighted_integral_oracle(Z, nu1, "-"))
        assert diff == pytest.approx(oracle, abs=1e-9)

    def test_other_lambda_levels_run(self):
        rep = pw.counterexample_report(0.51)
        assert set(rep) >= {"sum_median", "growth_imbalance_at_p1", "conclusion"}

    def test_lambda_near_one_approaches_triangle_median(self):
        # X tends to uniform(0,1), so the sum tends to the symmetric triangle
        # with median 1
        m1 = pw.counterexample_report(F(9, 10))["sum_median"]
        m2 = pw.counterexample_report(F(99, 100))["sum_median"]
        assert abs(m2 - 1.0) < abs(m1 - 1.0)
        assert abs(m2 - 1.0) < 0.05

    def test_lambda_validation(self):
        for bad in (0.5, 0.4, 1.0, 1.2):
            with pytest.raises(ParameterError):
                pw.counterexample_density(bad)


class TestLinearDensities:
    def test_unit_slope(self):
        f = pw.linear_density(1)
        assert f.pdf(0.0 + 1e-12) == pytest.approx(1.0)
        assert f.pdf(2.0 - 1e-12) == pytest.approx(0.0, abs=1e-11)
        assert f.total_mass() == 1

    def test_h_two_support(self):
        f = pw.linear_density(2)
        assert f.support.upper == 1.0
        assert f.pdf(1e-12) == pytest.approx(2.0)

    @pytest.mark.parametrize("h", [0.5, 1, 2, 5])
    def test_monotone_verdict(self, h):
        from trueskew.criteria import check_monotone_density
        v = check_monotone_density(piecewise_spec(pw.linear_density(h)))
        assert v is not None and v.conclusion == "truly_positive"

    def test_closure_equal_slopes(self):
        rep = pw.linear_closure_check(1, 1)
        assert rep["conclusion"] == "truly_positive"

    def test_closure_unequal_slopes(self):
        rep = pw.linear_closure_check(1, 4)
        assert rep["conclusion"] == "truly_positive"

    def test_closure_degenerate_narrow_second(self):
        # a very steep second density is nearly a point mass at zero, so the
        # sum inherits the first density's verdict
        rep = pw.linear_closure_check(1, 50)
        assert rep["conclusion"] == "truly_positive"


class TestModeFinder:
    def test_plateau_returns_none(self):
        assert pw.uniform_density(0, 1).mode() is None

    def test_cubic_convolution_mode_interior(self):
        Z = convolve(pw.linear_density(1), pw.linear_density(1))
        m = Z.mode()
        assert m is not None and 0.0 < m < 2.0
        xs = np.linspace(0.01, 3.99, 999)
        assert Z.pdf(m) >= np.max(Z.pdf(xs)) - 1e-12
