"""Analytic distribution registry: densities, CDFs, quantiles, facts.

Every built-in family is stored as a standard member plus an affine
transport x = scale * z + location, so closed-form facts (mode, median,
mean, moment ceiling, inflection points) transport exactly.  All
evaluation functions accept floats or ndarrays.

The module also owns:

* the distribution expression parser used by the CLI and HTTP service,
  ``family(name=value, ...)`` with positional arguments allowed;
* ``UserDensity``, a wrapper for caller-supplied density callbacks with
  a declared support, normalization-checked at registration;
* certified tail-mass bounds used by the p-mean engine to truncate
  integrals over infinite supports.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy import special as sp

from .errors import DomainError, ParameterError, ParseError
from .quadrature import Integrand, integrate

__all__ = [
    "Support",
    "AnalyticFacts",
    "DistributionSpec",
    "UserDensity",
    "pdf",
    "log_pdf",
    "log_pdf_derivative",
    "log_pdf_second_derivative",
    "cdf",
    "quantile",
    "analytic_facts",
    "support",
    "moment_ceiling",
    "density_breakpoints",
    "tail_weight_bound",
    "logpdf_d1_right_limit",
    "parse_distribution",
    "spec_to_string",
    "FAMILIES",
]

_LOG_2PI = math.log(2.0 * math.pi)
_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class Support:
    """Open interval (lower, upper); either endpoint may be infinite."""

    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ParameterError(f"support requires lower < upper, got ({self.lower}, {self.upper})")

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.lower) and math.isfinite(self.upper)

    def contains_interior(self, x: float) -> bool:
        return self.lower < x < self.upper


@dataclass(frozen=True)
class AnalyticFacts:
    """Closed-form facts; fields are None when no closed form exists.

    ``moment_sup`` is sup{q >= 0 : E|X|^q < inf}; the solvable exponent
    domain is [1, 1 + moment_sup).  ``density_decreasing`` marks families
    whose density is non-increasing on the support with a strict drop
    (the mode sits at the lower support edge and is reported as None).
    """

    mode: float | None = None
    median: float | None = None
    mean: float | None = None
    moment_sup: float = math.inf
    inflection_points: tuple[float, ...] | None = None
    density_decreasing: bool = False


@dataclass(frozen=True)
class DistributionSpec:
    """Immutable symbolic description of a univariate distribution.

    ``params`` holds the shape parameters of the standard member as a
    sorted tuple of (name, value) pairs; ``location``/``scale`` act by
    x -> scale * x + location.  ``density`` carries the payload object
    for the ``piecewise`` and ``user_density`` families.
    """

    family: str
    params: tuple[tuple[str, float], ...] = ()
    location: float = 0.0
    scale: float = 1.0
    density: object | None = None

    @classmethod
    def make(cls, family: str, location: float = 0.0, scale: float = 1.0,
             density: object | None = None, **params) -> "DistributionSpec":
        if family not in FAMILIES:
            raise ParameterError(
                f"unknown family {family!r}; known: {', '.join(sorted(FAMILIES))}")
        fam = FAMILIES[family]
        if not (math.isfinite(scale) and scale > 0.0):
            raise ParameterError(f"scale must be a positive real, got {scale!r}")
        if not math.isfinite(location):
            raise ParameterError(f"location must be finite, got {location!r}")
        merged = {}
        for name, default in fam.param_spec:
            if name in params:
                merged[name] = float(params.pop(name))
            elif default is not None:
                merged[name] = float(default)
            else:
                raise ParameterError(f"{family} requires parameter {name!r}")
        if params:
            raise ParameterError(
                f"unknown parameter(s) {sorted(params)} for {family}; "
                f"expected {[n for n, _ in fam.param_spec]}")
        if fam.needs_density and density is None:
            raise ParameterError(f"{family} requires a density payload")
        if not fam.needs_density and density is not None:
            raise ParameterError(f"{family} does not accept a density payload")
        fam.validate(merged, density)
        return cls(family=family,
                   params=tuple(sorted(merged.items())),
                   location=float(location), scale=float(scale),
                   density=density)

    def param(self, name: str) -> float:
        for key, value in self.params:
            if key == name:
                return value
        raise KeyError(name)

    @property
    def params_dict(self) -> dict[str, float]:
        return dict(self.params)

    def with_affine(self, c: float, s: float) -> "DistributionSpec":
        """The distribution of c * X + s for c > 0 (exact parameter transport)."""
        if c <= 0:
            raise ParameterError("with_affine requires c > 0; mirror via a user density")
        return replace(self, location=c * self.location + s, scale=c * self.scale)


# ---------------------------------------------------------------------------
# family registry


@dataclass(frozen=True)
class _FamilyOps:
    name: str
    param_spec: tuple[tuple[str, float | None], ...]
    validate: Callable[[dict, object | None], None]
    support: Callable[[dict], Support]
    log_pdf: Callable[[dict, np.ndarray], np.ndarray]
    cdf: Callable[[dict, np.ndarray], np.ndarray]
    facts: Callable[[dict], AnalyticFacts]
    quantile: Callable[[dict, float], float] | None = None
    d1: Callable[[dict, np.ndarray], np.ndarray] | None = None
    d2: Callable[[dict, np.ndarray], np.ndarray] | None = None
    d1_right_limit: Callable[[dict], float] | None = None
    right_tail_bound: Callable[[dict, float, float], float] | None = None
    left_tail_bound: Callable[[dict, float, float], float] | None = None
    needs_density: bool = False


def _noop_validate(params, density):
    return None


def _positive(params, key, label=None):
    v = params[key]
    if not (math.isfinite(v) and v > 0):
        raise ParameterError(f"{label or key} must be a positive real, got {v!r}")


# -- Levy (standard member: location 0, scale 1) ---------------------------

_LEVY_C = 1.0 / _SQRT_2PI


def _levy_log_pdf(params, x):
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        xs = np.where(x > 0, x, np.nan)
        out = math.log(_LEVY_C) - 0.5 / xs - 1.5 * np.log(xs)
    return np.where(x > 0, out, -np.inf)


def _levy_cdf(params, x):
    with np.errstate(divide="ignore", invalid="ignore"):
        xs = np.where(x > 0, x, np.nan)
        out = sp.erfc(np.sqrt(0.5 / xs))
    return np.where(x > 0, out, 0.0)


def _levy_median() -> float:
    # root of erfc(sqrt(1/(2m))) = 1/2 by bisection, resolved to 1e-12
    lo, hi = 0.5, 8.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if sp.erfc(math.sqrt(0.5 / mid)) < 0.5:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13:
            break
    return 0.5 * (lo + hi)


_LEVY_MEDIAN = _levy_median()


def _levy_right_bound(params, r, z):
    # f(z) <= C * z^(-3/2); finite only for r < 1/2
    if r >= 0.5:
        return math.inf
    if z <= 0.0:
        return math.inf
    return _LEVY_C * z ** (r - 0.5) / (0.5 - r)


_LEVY = _FamilyOps(
    name="levy",
    param_spec=(),
    validate=_noop_validate,
    support=lambda params: Support(0.0, math.inf),
    log_pdf=_levy_log_pdf,
    cdf=_levy_cdf,
    quantile=lambda params, u: 0.5 / sp.erfcinv(u) ** 2,
    facts=lambda params: AnalyticFacts(mode=1.0 / 3.0, median=_LEVY_MEDIAN,
                                       mean=None, moment_sup=0.5),
    d1=lambda params, x: 0.5 / (x * x) - 1.5 / x,
    d2=lambda params, x: -1.0 / (x ** 3) + 1.5 / (x * x),
    d1_right_limit=lambda params: 0.0,
    right_tail_bound=_levy_right_bound,
)


# -- chi-squared ------------------------------------------------------------

def _chi2_validate(params, density):
    k = params["k"]
    if not (math.isfinite(k) and k > 0 and float(k).is_integer()):
        raise ParameterError(f"degrees of freedom k must be a positive integer, got {k!r}")


def _chi2_log_pdf(params, x):
    k = params["k"]
    with np.errstate(divide="ignore", invalid="ignore"):
        xs = np.where(x > 0, x, np.nan)
        out = (0.5 * k - 1.0) * np.log(xs) - 0.5 * xs - 0.5 * k * math.log(2.0) - sp.gammaln(0.5 * k)
    return np.where(x > 0, out, -np.inf)


def _chi2_facts(params):
    k = params["k"]
    if k > 2:
        return AnalyticFacts(mode=k - 2.0, mean=float(k))
    return AnalyticFacts(mean=float(k), density_decreasing=True)


def _chi2_right_bound(params, r, z):
    k = params["k"]
    if z < 0:
        return math.inf
    a = 0.5 * k + r
    return (2.0 ** r) * math.exp(sp.gammaln(a) - sp.gammaln(0.5 * k)) * sp.gammaincc(a, 0.5 * z)


_CHI2 = _FamilyOps(
    name="chi_squared",
    param_spec=(("k", None),),
    validate=_chi2_validate,
    support=lambda params: Support(0.0, math.inf),
    log_pdf=_chi2_log_pdf,
    cdf=lambda params, x: np.where(x > 0, sp.gammainc(0.5 * params["k"], 0.5 * np.maximum(x, 0.0)), 0.0),
    quantile=lambda params, u: 2.0 * sp.gammaincinv(0.5 * params["k"], u),
    facts=_chi2_facts,
    d1=lambda params, x: (0.5 * params["k"] - 1.0) / x - 0.5,
    d2=lambda params, x: -(0.5 * params["k"] - 1.0) / (x * x),
    d1_right_limit=lambda params: -0.5,
    right_tail_bound=_chi2_right_bound,
)


# -- Weibull (standard member scale 1) --------------------------------------

def _weibull_log_pdf(params, x):
    k = params["k"]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        xs = np.where(x > 0, x, np.nan)
        out = math.log(k) + (k - 1.0) * np.log(xs) - xs ** k
    return np.where(x > 0, out, -np.inf)


def _weibull_facts(params):
    k = params["k"]
    median = math.log(2.0) ** (1.0 / k)
    mean = math.gamma(1.0 + 1.0 / k)
    if k > 1:
        return AnalyticFacts(mode=((k - 1.0) / k) ** (1.0 / k), median=median, mean=mean)
    return AnalyticFacts(median=median, mean=mean, density_decreasing=True)


def _weibull_right_bound(params, r, z):
    k = params["k"]
    if z < 0:
        return math.inf
    a = r / k + 1.0
    return math.exp(sp.gammaln(a)) * sp.gammaincc(a, z ** k)


def _weibull_d1_limit(params):
    k = params["k"]
    if k > 1:
        return -math.inf
    if k == 1:
        return -1.0
    return 0.0


_WEIBULL = _FamilyOps(
    name="weibull",
    param_spec=(("k", None),),
    validate=lambda params, density: _positive(params, "k", "shape k"),
    support=lambda params: Support(0.0, math.inf),
    log_pdf=_weibull_log_pdf,
    cdf=lambda params, x: np.where(x > 0, -np.expm1(-np.maximum(x, 0.0) ** params["k"]), 0.0),
    quantile=lambda params, u: (-math.log1p(-u)) ** (1.0 / params["k"]),
    facts=_weibull_facts,
    d1=lambda params, x: (params["k"] - 1.0) / x - params["k"] * x ** (params["k"] - 1.0),
    d2=lambda params, x: (-(params["k"] - 1.0) / (x * x)
                          - params["k"] * (params["k"] - 1.0) * x ** (params["k"] - 2.0)),
    d1_right_limit=_weibull_d1_limit,
    right_tail_bound=_weibull_right_bound,
)


# -- skew-normal -------------------------------------------------------------

def _sn_log_pdf(params, x):
    a = params["alpha"]
    return math.log(2.0) - 0.5 * x * x - 0.5 * _LOG_2PI + sp.log_ndtr(a * x)


def _sn_cdf(params, x):
    a = params["alpha"]
    return sp.ndtr(x) - 2.0 * sp.owens_t(x, a)


def _sn_facts(params):
    a = params["alpha"]
    delta = a / math.sqrt(1.0 + a * a)
    mean = math.sqrt(2.0 / math.pi) * delta
    if a == 0.0:
        return AnalyticFacts(mode=0.0, median=0.0, mean=0.0)
    return AnalyticFacts(mean=mean)


def _sn_hazard_inv(t):
    # phi(t) / Phi(t), computed in log space for stability at t << 0
    return np.exp(-0.5 * t * t - 0.5 * _LOG_2PI - sp.log_ndtr(t))


def _sn_d1(params, x):
    a = params["alpha"]
    return -x + a * _sn_hazard_inv(a * x)


def _sn_d2(params, x):
    a = params["alpha"]
    m = _sn_hazard_inv(a * x)
    return -1.0 + a * a * (-(a * x) * m - m * m)


def _gauss_tail_weight(r, z):
    # integral over (z, inf) of x^r * sqrt(2/pi) * exp(-x^2/2) dx, valid z >= 0
    if z < 0:
        return math.inf
    a = 0.5 * (r + 1.0)
    return (math.sqrt(2.0 / math.pi) * 2.0 ** (0.5 * (r - 1.0))
            * math.exp(sp.gammaln(a)) * sp.gammaincc(a, 0.5 * z * z))


_SKEW_NORMAL = _FamilyOps(
    name="skew_normal",
    param_spec=(("alpha", None),),
    validate=lambda params, density: None if math.isfinite(params["alpha"]) else
        (_ for _ in ()).throw(ParameterError("alpha must be finite")),
    support=lambda params: Support(-math.inf, math.inf),
    log_pdf=_sn_log_pdf,
    cdf=_sn_cdf,
    quantile=None,
    facts=_sn_facts,
    d1=_sn_d1,
    d2=_sn_d2,
    d1_right_limit=lambda params: -math.inf,
    right_tail_bound=lambda params, r, z: _gauss_tail_weight(r, z),
    left_tail_bound=lambda params, r, z: _gauss_tail_weight(r, abs(z)) if z <= 0 else math.inf,
)


# -- log-logistic ------------------------------------------------------------

def _llog_log_pdf(params, x):
    b = params["beta"]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        xs = np.where(x > 0, x, np.nan)
        out = math.log(b) + (b - 1.0) * np.log(xs) - 2.0 * np.log1p(xs ** b)
    return np.where(x > 0, out, -np.inf)


def _llog_cdf(params, x):
    b = params["beta"]
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        xs = np.where(x > 0, x, np.nan)
        out = 1.0 / (1.0 + xs ** (-b))
    return np.where(x > 0, out, 0.0)


def _llog_facts(params):
    b = params["beta"]
    mean = (math.pi / b) / math.sin(math.pi / b) if b > 1 else None
    if b <= 1:
        return AnalyticFacts(median=1.0, mean=mean, moment_sup=b, density_decreasing=True)
    mode = ((b - 1.0) / (b + 1.0)) ** (1.0 / b)
    disc = b * math.sqrt(3.0 * b * b - 3.0)
    denom = b * b + 3.0 * b + 2.0
    thetas = []
    for sign in (-1.0, 1.0):
        num = 2.0 * b * b - 2.0 + sign * disc
        if num > 0:
            thetas.append((num / denom) ** (1.0 / b))
    return AnalyticFacts(mode=mode, median=1.0, mean=mean, moment_sup=b,
                         inflection_points=tuple(sorted(thetas)))


def _llog_d1(params, x):
    b = params["beta"]
    return (b - 1.0) / x - 2.0 * b * x ** (b - 1.0) / (1.0 + x ** b)


def _llog_d2(params, x):
    b = params["beta"]
    xb = x ** b
    denom = (1.0 + xb) ** 2
    term = ((b - 1.0) * x ** (b - 2.0) * (1.0 + xb) - b * x ** (2.0 * b - 2.0)) / denom
    return -(b - 1.0) / (x * x) - 2.0 * b * term


def _llog_right_bound(params, r, z):
    b = params["beta"]
    if r >= b:
        return math.inf
    z = max(z, 1e-300)
    return b * z ** (r - b) / (b - r)


_LOG_LOGISTIC = _FamilyOps(
    name="log_logistic",
    param_spec=(("beta", None),),
    validate=lambda params, density: _positive(params, "beta", "shape beta"),
    support=lambda params: Support(0.0, math.inf),
    log_pdf=_llog_log_pdf,
    cdf=_llog_cdf,
    quantile=lambda params, u: (u / (1.0 - u)) ** (1.0 / params["beta"]),
    facts=_llog_facts,
    d1=_llog_d1,
    d2=_llog_d2,
    d1_right_limit=lambda params: 0.0,
    right_tail_bound=_llog_right_bound,
)


# -- gamma (standard member scale 1) -----------------------------------------

def _gamma_log_pdf(params, x):
    a = params["shape"]
    with np.errstate(divide="ignore", invalid="ignore"):
        xs = np.where(x > 0, x, np.nan)
        out = (a - 1.0) * np.log(xs) - xs - sp.gammaln(a)
    return np.where(x > 0, out, -np.inf)


def _gamma_facts(params):
    a = params["shape"]
    if a > 1:
        return AnalyticFacts(mode=a - 1.0, mean=a)
    return AnalyticFacts(mean=a, density_decreasing=True)


def _gamma_right_bound(params, r, z):
    a = params["shape"]
    if z < 0:
        return math.inf
    return math.exp(sp.gammaln(a + r) - sp.gammaln(a)) * sp.gammaincc(a + r, z)


_GAMMA = _FamilyOps(
    name="gamma",
    param_spec=(("shape", None),),
    validate=lambda params, density: _positive(params, "shape"),
    support=lambda params: Support(0.0, math.inf),
    log_pdf=_gamma_log_pdf,
    cdf=lambda params, x: np.where(x > 0, sp.gammainc(params["shape"], np.maximum(x, 0.0)), 0.0),
    quantile=lambda params, u: float(sp.gammaincinv(params["shape"], u)),
    facts=_gamma_facts,
    d1=lambda params, x: (params["shape"] - 1.0) / x - 1.0,
    d2=lambda params, x: -(params["shape"] - 1.0) / (x * x),
    d1_right_limit=lambda params: -1.0,
    right_tail_bound=_gamma_right_bound,
)


# -- exponential (standard member rate 1; rate enters through scale) ---------

_EXPONENTIAL = _FamilyOps(
    name="exponential",
    param_spec=(),
    validate=_noop_validate,
    support=lambda params: Support(0.0, math.inf),
    log_pdf=lambda params, x: np.where(x > 0, -x, -np.inf),
    cdf=lambda params, x: np.where(x > 0, -np.expm1(-np.maximum(x, 0.0)), 0.0),
    quantile=lambda params, u: -math.log1p(-u),
    facts=lambda params: AnalyticFacts(median=math.log(2.0), mean=1.0, density_decreasing=True),
    d1=lambda params, x: np.full_like(np.asarray(x, dtype=float), -1.0),
    d2=lambda params, x: np.zeros_like(np.asarray(x, dtype=float)),
    d1_right_limit=lambda params: -1.0,
    right_tail_bound=lambda params, r, z: (math.exp(sp.gammaln(r + 1.0))
                                           * sp.gammaincc(r + 1.0, max(z, 0.0))),
)


# -- uniform (standard member on (0, 1)) -------------------------------------

_UNIFORM = _FamilyOps(
    name="uniform",
    param_spec=(),
    validate=_noop_validate,
    support=lambda params: Support(0.0, 1.0),
    log_pdf=lambda params, x: np.where((x > 0) & (x < 1), 0.0, -np.inf),
    cdf=lambda params, x: np.clip(x, 0.0, 1.0),
    quantile=lambda params, u: u,
    facts=lambda params: AnalyticFacts(median=0.5, mean=0.5),
    d1=lambda params, x: np.zeros_like(np.asarray(x, dtype=float)),
    d2=lambda params, x: np.zeros_like(np.asarray(x, dtype=float)),
    d1_right_limit=lambda params: 0.0,
)


# -- normal -------------------------------------------------------------------

_NORMAL = _FamilyOps(
    name="normal",
    param_spec=(),
    validate=_noop_validate,
    support=lambda params: Support(-math.inf, math.inf),
    log_pdf=lambda params, x: -0.5 * x * x - 0.5 * _LOG_2PI,
    cdf=lambda params, x: sp.ndtr(x),
    quantile=lambda params, u: float(sp.ndtri(u)),
    facts=lambda params: AnalyticFacts(mode=0.0, median=0.0, mean=0.0),
    d1=lambda params, x: -np.asarray(x, dtype=float),
    d2=lambda params, x: np.full_like(np.asarray(x, dtype=float), -1.0),
    d1_right_limit=lambda params: -math.inf,
    right_tail_bound=lambda params, r, z: 0.5 * _gauss_tail_weight(r, z),
    left_tail_bound=lambda params, r, z: 0.5 * _gauss_tail_weight(r, abs(z)) if z <= 0 else math.inf,
)


# -- Pareto (standard member: minimum 1, exponent beta; minimum via scale) ----

def _pareto_log_pdf(params, x):
    b = params["beta"]
    with np.errstate(divide="ignore", invalid="ignore"):
        xs = np.where(x > 1, x, np.nan)
        out = math.log(b) - (b + 1.0) * np.log(xs)
    return np.where(x > 1, out, -np.inf)


def _pareto_facts(params):
    b = params["beta"]
    mean = b / (b - 1.0) if b > 1 else None
    return AnalyticFacts(median=2.0 ** (1.0 / b), mean=mean, moment_sup=b,
                         density_decreasing=True)


def _pareto_right_bound(params, r, z):
    b = params["beta"]
    if r >= b:
        return math.inf
    z = max(z, 1.0)
    return b * z ** (r - b) / (b - r)


_PARETO = _FamilyOps(
    name="pareto",
    param_spec=(("beta", None),),
    validate=lambda params, density: _positive(params, "beta", "tail exponent beta"),
    support=lambda params: Support(1.0, math.inf),
    log_pdf=_pareto_log_pdf,
    cdf=lambda params, x: np.where(x > 1, 1.0 - np.maximum(x, 1.0) ** (-params["beta"]), 0.0),
    quantile=lambda params, u: (1.0 - u) ** (-1.0 / params["beta"]),
    facts=_pareto_facts,
    d1=lambda params, x: -(params["beta"] + 1.0) / x,
    d2=lambda params, x: (params["beta"] + 1.0) / (x * x),
    d1_right_limit=lambda params: 0.0,
    right_tail_bound=_pareto_right_bound,
)


# -- densities supplied as objects (piecewise polynomials, user callbacks) ----

def _density_validate(params, density):
    for attr in ("support", "log_pdf", "cdf"):
        if not hasattr(density, attr):
            raise ParameterError(f"density payload lacks required attribute {attr!r}")


def _density_ops(name: str) -> _FamilyOps:
    return _FamilyOps(
        name=name,
        param_spec=(),
        validate=_density_validate,
        support=None,  # dispatched on the payload
        log_pdf=None,
        cdf=None,
        facts=None,
        needs_density=True,
    )


_PIECEWISE = _density_ops("piecewise")
_USER = _density_ops("user_density")


FAMILIES: dict[str, _FamilyOps] = {
    f.name: f for f in (
        _LEVY, _CHI2, _WEIBULL, _SKEW_NORMAL, _LOG_LOGISTIC, _GAMMA,
        _EXPONENTIAL, _UNIFORM, _NORMAL, _PARETO, _PIECEWISE, _USER,
    )
}


class UserDensity:
    """Caller-supplied density with a declared support.

    The callback must be vectorized (ndarray in, ndarray out).  The
    normalization is verified once at construction: the integral over the
    declared support must be within 1e-6 of one, otherwise registration
    is rejected.  ``moment_sup`` bounds the usable exponent range; leave
    it infinite only when all weighted moments genuinely exist.
    """

    def __init__(self, pdf: Callable[[np.ndarray], np.ndarray], support: Support,
                 moment_sup: float = math.inf,
                 cdf: Callable[[float], float] | None = None,
                 quantile: Callable[[float], float] | None = None,
                 label: str = "user density"):
        self.support = support
        self.moment_sup = float(moment_sup)
        self.label = label
        self._pdf = pdf
        self._cdf = cdf
        self._quantile = quantile
        check = integrate(Integrand(self._pdf_clipped, support.lower, support.upper,
                                    singular_lower=True, singular_upper=True),
                          tol_rel=1e-9, tol_abs=1e-12)
        if abs(check.value - 1.0) > 1e-6:
            raise ParameterError(
                f"{label}: density integrates to {check.value:.8f}, not 1 (tolerance 1e-6)")

    def _pdf_clipped(self, x):
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        inside = (arr > self.support.lower) & (arr < self.support.upper)
        out = np.zeros_like(arr)
        if inside.any():
            out[inside] = np.maximum(np.asarray(self._pdf(arr[inside]), dtype=float), 0.0)
        return out.reshape(np.shape(x))

    def log_pdf(self, x):
        x = np.asarray(x, dtype=float)
        vals = self._pdf_clipped(x)
        with np.errstate(divide="ignore"):
            return np.where(vals > 0.0, np.log(np.maximum(vals, 1e-320)), -np.inf)

    def cdf(self, x: float) -> float:
        if x <= self.support.lower:
            return 0.0
        if x >= self.support.upper:
            return 1.0
        if self._cdf is not None:
            return float(np.clip(self._cdf(x), 0.0, 1.0))
        r = integrate(Integrand(self._pdf_clipped, self.support.lower, x,
                                singular_lower=True),
                      tol_rel=1e-10, tol_abs=1e-12)
        return float(np.clip(r.value, 0.0, 1.0))

    def quantile(self, u: float) -> float | None:
        if self._quantile is not None:
            return float(self._quantile(u))
        return None

    def facts(self) -> AnalyticFacts:
        return AnalyticFacts(moment_sup=self.moment_sup)

    def breakpoints(self) -> tuple[float, ...]:
        return ()


# ---------------------------------------------------------------------------
# dispatch helpers

def _ops(spec: DistributionSpec) -> _FamilyOps:
    try:
        return FAMILIES[spec.family]
    except KeyError:
        raise ParameterError(f"unknown family {spec.family!r}") from None


def _is_payload(spec: DistributionSpec) -> bool:
    return _ops(spec).needs_density


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _maybe_scalar(values: np.ndarray, scalar: bool):
    return float(values) if scalar else values


def support(spec: DistributionSpec) -> Support:
    if _is_payload(spec):
        base = spec.density.support
    else:
        base = _ops(spec).support(spec.params_dict)
    return Support(spec.scale * base.lower + spec.location,
                   spec.scale * base.upper + spec.location)


def log_pdf(spec: DistributionSpec, x):
    """log f(x); -inf outside the support, computed from the log form."""
    arr, scalar = _as_array(x)
    z = (arr - spec.location) / spec.scale
    # overflow at extreme abscissae deliberately saturates to -inf / 0
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        if _is_payload(spec):
            vals = np.asarray(spec.density.log_pdf(z), dtype=float)
        else:
            vals = np.asarray(_ops(spec).log_pdf(spec.params_dict, z), dtype=float)
    return _maybe_scalar(vals - math.log(spec.scale), scalar)


def pdf(spec: DistributionSpec, x):
    """Density f(x); zero outside the support."""
    arr, scalar = _as_array(x)
    lp = log_pdf(spec, arr)
    with np.errstate(over="ignore"):
        vals = np.exp(lp)
    return _maybe_scalar(vals, scalar)


def cdf(spec: DistributionSpec, x):
    arr, scalar = _as_array(x)
    z = (arr - spec.location) / spec.scale
    if _is_payload(spec):
        flat = np.atleast_1d(z)
        vals = np.array([spec.density.cdf(float(t)) for t in flat]).reshape(z.shape)
    else:
        vals = np.clip(np.asarray(_ops(spec).cdf(spec.params_dict, z), dtype=float), 0.0, 1.0)
    return _maybe_scalar(vals, scalar)


def quantile(spec: DistributionSpec, u: float) -> float:
    """Left-continuous inverse CDF: inf{x : F(x) >= u}."""
    if not 0.0 < u < 1.0:
        raise DomainError(f"quantile level must lie in (0, 1), got {u!r}")
    if _is_payload(spec):
        q = spec.density.quantile(u)
        if q is not None:
            return spec.scale * q + spec.location
        return _bisect_quantile(spec, u)
    ops = _ops(spec)
    if ops.quantile is not None:
        return spec.scale * float(ops.quantile(spec.params_dict, u)) + spec.location
    return _bisect_quantile(spec, u)


def _bisect_quantile(spec: DistributionSpec, u: float) -> float:
    sup = support(spec)
    lo, hi = sup.lower, sup.upper
    if math.isinf(lo) or math.isinf(hi):
        center = spec.location
        w = max(spec.scale, 1.0)
        lo_f = lo if math.isfinite(lo) else center - w
        hi_f = hi if math.isfinite(hi) else center + w
        for _ in range(400):
            grown = False
            if math.isinf(lo) and cdf(spec, lo_f) >= u:
                lo_f = center - 2.0 * (center - lo_f) - w
                grown = True
            if math.isinf(hi) and cdf(spec, hi_f) < u:
                hi_f = center + 2.0 * (hi_f - center) + w
                grown = True
            if not grown:
                break
        lo, hi = lo_f, hi_f
    for _ in range(220):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if cdf(spec, mid) >= u:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-13 * max(1.0, abs(hi)):
            break
    return hi


def log_pdf_derivative(spec: DistributionSpec, x):
    """d/dx log f(x) at interior points; analytic where available."""
    arr, scalar = _as_array(x)
    sup = support(spec)
    flat = np.atleast_1d(arr)
    if np.any(flat <= sup.lower) or np.any(flat >= sup.upper):
        raise DomainError("log-density derivative requested at or outside the support boundary")
    z = (arr - spec.location) / spec.scale
    if _is_payload(spec):
        d1 = getattr(spec.density, "logpdf_d1", None)
        if d1 is not None:
            vals = np.asarray(d1(z), dtype=float)
        else:
            vals = _fd_logpdf_d1(spec.density.log_pdf, z, spec.density.support)
    else:
        ops = _ops(spec)
        if ops.d1 is not None:
            vals = np.asarray(ops.d1(spec.params_dict, z), dtype=float)
        else:
            vals = _fd_logpdf_d1(lambda t: ops.log_pdf(spec.params_dict, t), z,
                                 _ops(spec).support(spec.params_dict))
    return _maybe_scalar(vals / spec.scale, scalar)


def _fd_logpdf_d1(logf, z, sup: Support):
    z = np.atleast_1d(np.asarray(z, dtype=float))
    h = np.cbrt(np.finfo(float).eps) * np.maximum(1.0, np.abs(z))
    dist_lo = z - sup.lower
    dist_hi = sup.upper - z
    h = np.minimum(h, 0.45 * np.minimum(dist_lo, dist_hi))
    return (np.asarray(logf(z + h), dtype=float) - np.asarray(logf(z - h), dtype=float)) / (2.0 * h)


def log_pdf_second_derivative(spec: DistributionSpec, x):
    """d^2/dx^2 log f(x); analytic where available, else finite differences."""
    arr, scalar = _as_array(x)
    z = (arr - spec.location) / spec.scale
    if _is_payload(spec):
        d2 = getattr(spec.density, "logpdf_d2", None)
        if d2 is not None:
            vals = np.asarray(d2(z), dtype=float)
        else:
            vals = _fd_logpdf_d2(spec, arr) * spec.scale ** 2
    else:
        ops = _ops(spec)
        if ops.d2 is not None:
            vals = np.asarray(ops.d2(spec.params_dict, z), dtype=float)
        else:
            vals = _fd_logpdf_d2(spec, arr) * spec.scale ** 2
    return _maybe_scalar(vals / spec.scale ** 2, scalar)


def _fd_logpdf_d2(spec, x):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    sup = support(spec)
    h = np.finfo(float).eps ** 0.25 * np.maximum(1.0, np.abs(x))
    h = np.minimum(h, 0.45 * np.minimum(x - sup.lower, sup.upper - x))
    f0 = log_pdf(spec, x)
    return (log_pdf(spec, x + h) + log_pdf(spec, x - h) - 2.0 * f0) / (h * h)


def analytic_facts(spec: DistributionSpec) -> AnalyticFacts:
    """Closed-form facts transported by the affine map; absent fields None."""
    if _is_payload(spec):
        base = spec.density.facts()
    else:
        base = _ops(spec).facts(spec.params_dict)
    s, loc = spec.scale, spec.location

    def move(v):
        return None if v is None else s * v + loc

    infl = None
    if base.inflection_points is not None:
        infl = tuple(s * t + loc for t in base.inflection_points)
    return AnalyticFacts(mode=move(base.mode), median=move(base.median),
                         mean=move(base.mean), moment_sup=base.moment_sup,
                         inflection_points=infl,
                         density_decreasing=base.density_decreasing)


def moment_ceiling(spec: DistributionSpec) -> float:
    return analytic_facts(spec).moment_sup


def density_breakpoints(spec: DistributionSpec) -> tuple[float, ...]:
    """Interior kink abscissae (piecewise edges), affinely transported."""
    if _is_payload(spec) and hasattr(spec.density, "breakpoints"):
        return tuple(spec.scale * b + spec.location for b in spec.density.breakpoints())
    return ()


def logpdf_d1_right_limit(spec: DistributionSpec) -> float | None:
    """lim_{x -> upper support edge} f'(x)/f(x); None when unknown."""
    if _is_payload(spec):
        return None
    ops = _ops(spec)
    if ops.d1_right_limit is None:
        return None
    return ops.d1_right_limit(spec.params_dict) / spec.scale


def tail_weight_bound(spec: DistributionSpec, r: float, y: float, center: float,
                      side: str) -> float | None:
    """Certified upper bound on the tail of a shifted weighted integral.

    For side "+": bounds the integral over (y, inf) of t^r * f(center + t) dt.
    For side "-": bounds the integral over (y, inf) of t^r * f(center - t) dt
    (only meaningful when the support extends to -inf).  Returns None when
    the family carries no certified bound; inf when the bound is not yet
    finite at this cutoff (caller should enlarge y).
    """
    if y <= 0.0 or r < 0.0:
        raise ValueError("tail bound needs y > 0 and r >= 0")
    if _is_payload(spec):
        return None
    ops = _ops(spec)
    c2 = (center - spec.location) / spec.scale
    two_r = 2.0 ** r
    if side == "+":
        if ops.right_tail_bound is None:
            return None
        z0 = (center + y - spec.location) / spec.scale
        w_r = ops.right_tail_bound(spec.params_dict, r, z0)
        w_0 = ops.right_tail_bound(spec.params_dict, 0.0, z0)
        if math.isinf(w_r) or math.isinf(w_0):
            return math.inf
        return (spec.scale ** r) * two_r * (w_r + abs(c2) ** r * w_0)
    if side == "-":
        if ops.left_tail_bound is None:
            return None
        z0 = (center - y - spec.location) / spec.scale
        w_r = ops.left_tail_bound(spec.params_dict, r, z0)
        w_0 = ops.left_tail_bound(spec.params_dict, 0.0, z0)
        if math.isinf(w_r) or math.isinf(w_0):
            return math.inf
        return (spec.scale ** r) * two_r * (w_r + abs(c2) ** r * w_0)
    raise ValueError(f"side must be '+' or '-', got {side!r}")


# ---------------------------------------------------------------------------
# distribution expression parser

_ALIASES = {
    "chi2": "chi_squared",
    "chisquared": "chi_squared",
    "exp": "exponential",
    "loglogistic": "log_logistic",
    "skewnormal": "skew_normal",
}

# per-family positional argument order and mapping onto (params, loc, scale)
_GRAMMAR: dict[str, tuple[tuple[str, ...], Callable[[dict], tuple[dict, float, float]]]] = {
    "levy": (("mu", "lambda"),
             lambda a: ({}, a.get("mu", 0.0), a.get("lambda", 1.0))),
    "chi_squared": (("k",),
                    lambda a: ({"k": a["k"]}, 0.0, 1.0)),
    "weibull": (("k", "lambda"),
                lambda a: ({"k": a["k"]}, 0.0, a.get("lambda", 1.0))),
    "skew_normal": (("alpha",),
                    lambda a: ({"alpha": a["alpha"]}, 0.0, 1.0)),
    "log_logistic": (("beta",),
                     lambda a: ({"beta": a["beta"]}, 0.0, 1.0)),
    "gamma": (("shape", "scale"),
              lambda a: ({"shape": a["shape"]}, 0.0, a.get("scale", 1.0))),
    "exponential": (("lambda",),
                    lambda a: ({}, 0.0, 1.0 / a.get("lambda", 1.0))),
    "uniform": (("a", "b"),
                lambda a: ({}, a.get("a", 0.0), a.get("b", 1.0) - a.get("a", 0.0))),
    "normal": (("mu", "sigma"),
               lambda a: ({}, a.get("mu", 0.0), a.get("sigma", 1.0))),
    "pareto": (("k", "lambda"),
               lambda a: ({"beta": a["lambda"]}, 0.0, a.get("k", 1.0))),
}

_REQUIRED_ARGS = {
    "chi_squared": ("k",), "weibull": ("k",), "skew_normal": ("alpha",),
    "log_logistic": ("beta",), "gamma": ("shape",), "pareto": ("lambda",),
}

_EXPR_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*\((.*)\)\s*$", re.S)
_GRAMMAR_HINT = "family(name=value, ...) e.g. weibull(k=2.5,lambda=1)"


def parse_distribution(text: str) -> DistributionSpec:
    """Parse an expression like ``weibull(k=2.5,lambda=1)`` into a spec.

    Positional arguments follow each family's canonical order; extra
    ``loc=`` / ``scale=`` keys compose an additional affine map on top.
    """
    m = _EXPR_RE.match(text)
    if not m:
        raise ParseError("malformed distribution expression", token=text.strip(),
                         expected=_GRAMMAR_HINT)
    raw_name, body = m.group(1), m.group(2).strip()
    name = _ALIASES.get(raw_name.lower(), raw_name.lower())
    if name not in _GRAMMAR:
        raise ParseError("unknown distribution family", token=raw_name,
                         expected=", ".join(sorted(_GRAMMAR)))
    order, build = _GRAMMAR[name]
    args: dict[str, float] = {}
    extra_loc = 0.0
    extra_scale = 1.0
    if body:
        tokens = [t.strip() for t in body.split(",")]
        positional = 0
        seen_named = False
        for tok in tokens:
            if not tok:
                raise ParseError("empty argument", token=tok, expected=_GRAMMAR_HINT)
            if "=" in tok:
                seen_named = True
                key, _, val = tok.partition("=")
                key = key.strip().lower()
                val = val.strip()
                try:
                    value = float(val)
                except ValueError:
                    raise ParseError("argument value is not a number", token=val,
                                     expected="a real number") from None
                if key == "loc":
                    extra_loc = value
                elif key == "scale":
                    extra_scale = value
                elif key in order:
                    if key in args:
                        raise ParseError("duplicate argument", token=key, expected=_GRAMMAR_HINT)
                    args[key] = value
                else:
                    raise ParseError(f"unknown parameter for {name}", token=key,
                                     expected=", ".join(order + ("loc", "scale")))
            else:
                if seen_named:
                    raise ParseError("positional argument after named argument",
                                     token=tok, expected=_GRAMMAR_HINT)
                if positional >= len(order):
                    raise ParseError(f"too many positional arguments for {name}",
                                     token=tok, expected=", ".join(order))
                try:
                    args[order[positional]] = float(tok)
                except ValueError:
                    raise ParseError("argument value is not a number", token=tok,
                                     expected="a real number") from None
                positional += 1
    for req in _REQUIRED_ARGS.get(name, ()):
        if req not in args:
            raise ParseError(f"{name} requires argument {req!r}", token=req,
                             expected=", ".join(order))
    params, base_loc, base_scale = build(args)
    if name == "uniform" and base_scale <= 0:
        raise ParseError("uniform requires a < b", token=body, expected="uniform(a,b) with a<b")
    if name == "exponential" and args.get("lambda", 1.0) <= 0:
        raise ParseError("exponential rate must be positive", token=body,
                         expected="exponential(lambda>0)")
    location = extra_scale * base_loc + extra_loc
    scale = extra_scale * base_scale
    if scale <= 0:
        raise ParseError("overall scale must be positive", token=body, expected="scale > 0")
    return DistributionSpec.make(name, location=location, scale=scale, **params)


def spec_to_string(spec: DistributionSpec) -> str:
    """Canonical textual form; numbers use shortest exact round-trip repr."""
    p = spec.params_dict
    loc, s = spec.location, spec.scale
    if spec.family == "levy":
        return f"levy(mu={loc!r},lambda={s!r})"
    if spec.family == "exponential":
        base = f"exponential(lambda={1.0 / s!r})"
        return base if loc == 0 else base[:-1] + f",loc={loc!r})"
    if spec.family == "uniform":
        return f"uniform(a={loc!r},b={loc + s!r})"
    if spec.family == "normal":
        return f"normal(mu={loc!r},sigma={s!r})"
    if spec.family == "weibull":
        extra = f",loc={loc!r}" if loc else ""
        return f"weibull(k={p['k']!r},lambda={s!r}{extra})"
    if spec.family == "gamma":
        extra = f",loc={loc!r}" if loc else ""
        return f"gamma(shape={p['shape']!r},scale={s!r}{extra})"
    if spec.family == "pareto":
        extra = f",loc={loc!r}" if loc else ""
        return f"pareto(k={s!r},lambda={p['beta']!r}{extra})"
    if spec.family in ("piecewise", "user_density"):
        label = getattr(spec.density, "label", spec.family)
        return f"{spec.family}({label})"
    args = ",".join(f"{k}={v!r}" for k, v in spec.params)
    extras = ""
    if loc != 0.0:
        extras += f",loc={loc!r}"
    if s != 1.0:
        extras += f",scale={s!r}"
    return f"{spec.family}({args}{extras})"
