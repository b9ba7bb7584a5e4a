"""Frechet p-means, p-mean trajectories, and skewness certification.

The p-mean nu_p of a random variable interpolates the median (p = 1)
and the mean (p = 2); a distribution is truly positively skewed when
p -> nu_p is strictly increasing above the mode on its whole exponent
domain.  This package solves the defining balance equation, traces
curves, certifies or refutes true skewness via several analytic and
numeric criteria, convolves exact piecewise-polynomial densities, and
estimates multivariate trajectories for the skew-normal family.
"""

__version__ = "0.1.0"

from .distributions import (AnalyticFacts, DistributionSpec, Support,
                            UserDensity, analytic_facts, cdf, log_pdf,
                            log_pdf_derivative, parse_distribution, pdf,
                            quantile, spec_to_string, support)
from .pmeans import (PDomain, PMeanCurve, PMeanPoint, balance, discrete_pmean,
                     dnu_sign, empirical_pmean, growth_imbalance, p_domain,
                     solve_pmean, trace_curve, verify_affine_equivariance)
from .criteria import (ConvexTransform, CrossingProfile, Evidence,
                       InflectionReport, SkewVerdict, certify,
                       check_monotone_density, clopen_certify,
                       convex_transform_verdict, crossing_profile,
                       inflection_criterion, numeric_certify)
from .piecewise import (PiecewisePolyDensity, convolve, counterexample_report,
                        linear_closure_check, linear_density, piecewise_spec)
from .mvsn import (MVSample, MVSNSpec, MVTrajectory, colinearity_score,
                   mv_pmean, sample_mvsn, trajectory)
from .quadrature import Integrand, QuadResult, integrate, integrate_tail_truncated

__all__ = [name for name in dir() if not name.startswith("_")]
