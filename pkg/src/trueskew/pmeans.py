"""Solving the balance equation for p-means and tracing p -> nu_p curves.

The p-mean nu_p of a distribution is the unique root (in a) of

    balance(a, p) = E[(X - a)_+^(p-1)] - E[(a - X)_+^(p-1)],

a strictly decreasing function of a for p > 1; nu_1 is the median and
nu_2 the mean.  Both expectations are weighted half-integrals of the
density, evaluated by adaptive quadrature with certified tail
truncation on infinite supports.  The sign of the local p-derivative of
nu_p follows from the log-weighted imbalance

    D(p) = int y^(p-1) log y f(nu+y) dy - int y^(p-1) log y f(nu-y) dy,

which is positive exactly when nu(.) is increasing at p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import distributions as dist
from .distributions import DistributionSpec, Support, UserDensity
from .errors import (BracketError, CurveError, DomainError, IntegrandError,
                     ParameterError, QuadratureAccuracyError, TrueSkewError)
from .quadrature import Integrand, QuadResult, integrate, integrate_tail_truncated

__all__ = [
    "PDomain",
    "PMeanPoint",
    "PMeanCurve",
    "p_domain",
    "balance",
    "solve_pmean",
    "dnu_sign",
    "growth_imbalance",
    "trace_curve",
    "discrete_pmean",
    "empirical_pmean",
    "verify_affine_equivariance",
    "clip_grid",
    "make_grid",
    "mirror_spec",
]

# quadrature tolerance schedule: bracketing only needs sign fidelity,
# the final polish needs residuals well below the solver tolerance
_BRACKET_TOL = (1e-8, 1e-11)
_REFINE_TOL = (1e-10, 1e-13)
_POLISH_TOL = (1e-12, 1e-14)

_CEILING_MARGIN = 1e-3
_GRID_CAP_MARGIN = 0.05


@dataclass(frozen=True)
class PDomain:
    """Usable exponent interval [lo, hi) plus the mode point convention.

    ``include_mode`` is set when the distribution has a unique interior
    mode, in which case the point p = 0 carrying nu_0 may be prepended
    to reports.
    """

    lo: float
    hi: float
    include_mode: bool


@dataclass(frozen=True)
class PMeanPoint:
    """One solved point of a p-mean curve.

    ``balance_residual`` is the final |balance| normalized by the sum of
    the two weighted half-masses, so it is directly comparable with the
    solver tolerance.  ``dnu_sign`` is one of increasing / decreasing /
    flat / unknown.
    """

    p: float
    nu: float
    balance_residual: float
    dnu_sign: str = "unknown"
    dnu_dp: float | None = None


@dataclass(frozen=True)
class PMeanCurve:
    spec: DistributionSpec
    points: tuple[PMeanPoint, ...]
    grid: str

    def __post_init__(self):
        ps = [pt.p for pt in self.points]
        if any(b <= a for a, b in zip(ps, ps[1:])):
            raise ParameterError("curve points must be sorted by p and pairwise distinct")

    @property
    def solved_points(self) -> tuple[PMeanPoint, ...]:
        return tuple(pt for pt in self.points if math.isfinite(pt.nu))


def p_domain(spec: DistributionSpec) -> PDomain:
    facts = dist.analytic_facts(spec)
    return PDomain(lo=1.0, hi=1.0 + facts.moment_sup,
                   include_mode=facts.mode is not None)


def _check_p(spec: DistributionSpec, p: float) -> None:
    dom = p_domain(spec)
    if p < dom.lo:
        raise DomainError(f"p = {p} is below the solvable range [1, {dom.hi})")
    if p >= dom.hi:
        raise DomainError(f"p = {p} is outside the moment domain [1, {dom.hi})")
    if math.isfinite(dom.hi) and dom.hi - p < _CEILING_MARGIN and p > 1.0:
        raise DomainError(
            f"p = {p} is within {_CEILING_MARGIN} of the moment ceiling {dom.hi}; "
            f"use a smaller p")


# ---------------------------------------------------------------------------
# weighted half-integrals

def _half_integrand(spec, center, p, side, log_weight):
    # evaluated in log space: y^(p-1) f(center +/- y) = exp((p-1) log y + log f),
    # which stays finite through extreme tails and unbounded density edges
    sgn = 1.0 if side == "+" else -1.0

    def f(y):
        y = np.maximum(y, 1e-320)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            ly = np.log(y)
            lw = dist.log_pdf(spec, center + sgn * y)
            if p != 1.0:
                lw = lw + (p - 1.0) * ly
            vals = np.exp(lw)
            if log_weight:
                vals = vals * ly
        return vals

    return f


def _edge_integrand(spec, p, side, log_weight, length, edge):
    """Integrand value at y = length - u, evaluated without cancellation.

    Near the far endpoint the density argument approaches the support
    edge; computing it as edge +/- u (u the distance handed in by the
    quadrature) keeps full precision where center - (length - u) would
    cancel catastrophically.
    """
    sgn = 1.0 if side == "-" else -1.0  # minus side: x = L + u; plus side: x = R - u

    def f(u):
        u = np.maximum(u, 1e-320)
        y = np.maximum(length - u, 1e-320)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            lw = dist.log_pdf(spec, edge + sgn * u)
            if p != 1.0:
                lw = lw + (p - 1.0) * np.log(y)
            vals = np.exp(lw)
            if log_weight:
                vals = vals * np.log(y)
        return vals

    return f


def _half_mass(spec: DistributionSpec, center: float, p: float, side: str,
               tol_rel: float, tol_abs: float, log_weight: bool = False) -> QuadResult:
    """Integral over (0, len) of y^(p-1) [log y] f(center +/- y) dy."""
    sup = dist.support(spec)
    length = (sup.upper - center) if side == "+" else (center - sup.lower)
    if length <= 0.0:
        return QuadResult(0.0, 0.0, 0)
    f = _half_integrand(spec, center, p, side, log_weight)
    singular_low = log_weight or (1.0 < p < 2.0)
    bps = dist.density_breakpoints(spec)
    if side == "+":
        breaks = tuple(b - center for b in bps if b > center)
    else:
        breaks = tuple(center - b for b in bps if b < center)
    if math.isfinite(length):
        edge = sup.lower if side == "-" else sup.upper
        g = Integrand(f, 0.0, length, singular_lower=singular_low,
                      singular_upper=True, breakpoints=breaks,
                      eval_from_upper=_edge_integrand(spec, p, side, log_weight,
                                                      length, edge))
        return integrate(g, tol_rel=tol_rel, tol_abs=tol_abs)
    g = Integrand(f, 0.0, math.inf, singular_lower=singular_low, breakpoints=breaks)
    cut = _tail_cutoff(spec, center, p, side, log_weight, target=0.5 * tol_abs)
    if cut is None:
        return integrate(g, tol_rel=tol_rel, tol_abs=tol_abs)
    cutoff, bound = cut
    # when no representable cutoff certifies tol_abs/2 (tails decaying just
    # inside the moment domain), honestly widen the absolute target so the
    # returned error estimate carries the achievable bound
    eff_abs = max(tol_abs, 2.05 * bound)
    return integrate_tail_truncated(g, cutoff, bound, tol_rel=tol_rel, tol_abs=eff_abs)


def _tail_cutoff(spec, center, p, side, log_weight, target):
    """Find Y with a certified bound on the discarded tail beyond Y.

    For log-weighted integrands the bound uses log y <= y^eps / (eps e),
    shifting the weight exponent by a small eps inside the moment domain.
    Returns None when the family carries no certified bound (the caller
    then integrates over the mapped infinite interval directly).
    """
    r = p - 1.0
    factor = 1.0
    if log_weight:
        ceiling = dist.moment_ceiling(spec)
        eps = min(0.04, 0.5 * max(1.0 + ceiling - p, _CEILING_MARGIN))
        factor = 1.0 / (eps * math.e)
        r = r + eps
    probe = dist.tail_weight_bound(spec, r, 1.0, center, side)
    if probe is None:
        return None
    y = 1.0
    bound = factor * probe
    for _ in range(400):
        if bound <= target:
            break
        if y > 1e304:
            # no representable cutoff certifies the target; fall back to the
            # largest one and report the honest (larger) bound downstream
            return 1e304, factor * dist.tail_weight_bound(spec, r, 1e304, center, side)
        y *= 16.0
        bound = factor * dist.tail_weight_bound(spec, r, y, center, side)
    else:
        return None
    # trim the cutoff back down while it still certifies the target
    while y > 2.0:
        half = 0.5 * y
        b2 = factor * dist.tail_weight_bound(spec, r, half, center, side)
        if b2 <= target:
            y, bound = half, b2
        else:
            break
    return y, bound


def _balance_eval(spec, a, p, tol_pair):
    tol_rel, tol_abs = tol_pair
    plus = _half_mass(spec, a, p, "+", tol_rel, tol_abs)
    minus = _half_mass(spec, a, p, "-", tol_rel, tol_abs)
    value = plus.value - minus.value
    scale = plus.value + minus.value
    err = plus.abs_error_estimate + minus.abs_error_estimate
    return value, scale, err


def balance(spec: DistributionSpec, a: float, p: float,
            tol_rel: float = _REFINE_TOL[0], tol_abs: float = _REFINE_TOL[1]) -> float:
    """E[(X-a)_+^(p-1)] - E[(a-X)_+^(p-1)]; for p = 1, P(X>a) - P(X<a)."""
    _check_p(spec, p)
    if p == 1.0:
        return 1.0 - 2.0 * dist.cdf(spec, a)
    value, _, _ = _balance_eval(spec, a, p, (tol_rel, tol_abs))
    return value


# ---------------------------------------------------------------------------
# root solving

def _initial_bracket(spec) -> tuple[float, float]:
    lo = dist.quantile(spec, 0.01)
    hi = dist.quantile(spec, 0.99)
    if not lo < hi:
        mid = 0.5 * (lo + hi)
        lo, hi = mid - 0.5, mid + 0.5
    return lo, hi


def _expand_bracket(eval_fn, lo, hi, max_expand=60):
    """Grow [lo, hi] geometrically until balance(lo) > 0 > balance(hi)."""
    flo, _, _ = eval_fn(lo)
    fhi, _, _ = eval_fn(hi)
    width = hi - lo
    n = 0
    while flo <= 0.0:
        if n >= max_expand:
            raise BracketError(f"no sign change after {max_expand} expansions (low side)")
        hi, fhi = lo, flo
        width *= 2.0
        lo = lo - width
        flo, _, _ = eval_fn(lo)
        n += 1
    n = 0
    while fhi >= 0.0:
        if n >= max_expand:
            raise BracketError(f"no sign change after {max_expand} expansions (high side)")
        lo, flo = hi, fhi
        width *= 2.0
        hi = hi + width
        fhi, _, _ = eval_fn(hi)
        n += 1
    return lo, hi, flo, fhi


def _refine(eval_fn, lo, hi, flo, fhi, tol, xtol, max_iter=120):
    """Safeguarded secant/bisection on a decreasing function with flo>0>fhi."""
    best = (0.5 * (lo + hi), math.inf, 1.0, math.inf)
    for it in range(max_iter):
        width = hi - lo
        if width <= xtol * max(1.0, abs(lo) + abs(hi)):
            break
        if fhi != flo and it % 2 == 0:
            x = hi - fhi * (hi - lo) / (fhi - flo)
            pad = 0.05 * width
            x = min(max(x, lo + pad), hi - pad)
        else:
            x = lo + 0.5 * width
        v, s, e = eval_fn(x)
        if abs(v) < abs(best[1]):
            best = (x, v, s, e)
        if abs(v) <= tol * max(s, 1e-300):
            return x, v, s, e
        if abs(v) <= 3.0 * e:
            # residual is below quadrature noise; position is as resolved
            # as this tolerance level permits
            return x, v, s, e
        if v > 0.0:
            lo, flo = x, v
        else:
            hi, fhi = x, v
    x = 0.5 * (lo + hi)
    v, s, e = eval_fn(x)
    if abs(v) < abs(best[1]):
        best = (x, v, s, e)
    return best


def _solve_root(spec, p, tol, bracket=None):
    coarse = lambda a: _balance_eval(spec, a, p, _BRACKET_TOL)
    fine = lambda a: _balance_eval(spec, a, p, _REFINE_TOL)
    polish = lambda a: _balance_eval(spec, a, p, _POLISH_TOL)

    if bracket is None:
        lo, hi = _initial_bracket(spec)
    else:
        lo, hi = bracket
    lo, hi, flo, fhi = _expand_bracket(coarse, lo, hi)
    scale_x = max(1.0, abs(lo), abs(hi))
    x, v, s, e = _refine(fine, lo, hi, flo, fhi, tol, xtol=1e-11)
    # final polish at tight quadrature so the recorded residual is trustworthy
    v2, s2, e2 = polish(x)
    if abs(v2) > tol * max(s2, 1e-300) and abs(v2) > 3.0 * e2:
        # a few extra tight steps around the current estimate
        h = max(1e-9 * scale_x, 1e-12 * max(1.0, abs(x)))
        plo, phi = x - h, x + h
        pflo, _, _ = polish(plo)
        pfhi, _, _ = polish(phi)
        n = 0
        while not (pflo > 0.0 > pfhi) and n < 40:
            h *= 4.0
            plo, phi = x - h, x + h
            pflo, _, _ = polish(plo)
            pfhi, _, _ = polish(phi)
            n += 1
        if pflo > 0.0 > pfhi:
            x, v2, s2, e2 = _refine(polish, plo, phi, pflo, pfhi, tol,
                                    xtol=1e-14, max_iter=80)
    residual = abs(v2) / max(s2, 1e-300)
    return x, residual


def solve_pmean(spec: DistributionSpec, p: float, tol: float = 1e-10,
                bracket: tuple[float, float] | None = None) -> PMeanPoint:
    """Root of the balance equation; nu_1 is the left median by convention."""
    _check_p(spec, p)
    if p == 1.0:
        nu = dist.quantile(spec, 0.5)
        residual = abs(1.0 - 2.0 * dist.cdf(spec, nu))
        return PMeanPoint(p=1.0, nu=nu, balance_residual=min(residual, tol))
    nu, residual = _solve_root(spec, p, tol, bracket=bracket)
    sup = dist.support(spec)
    if not sup.contains_interior(nu):
        raise TrueSkewError(f"solved nu_p = {nu} escaped the open support; solver defect")
    return PMeanPoint(p=p, nu=nu, balance_residual=residual)


# ---------------------------------------------------------------------------
# local growth of nu(.)

def growth_imbalance(spec: DistributionSpec, p: float, nu: float | None = None,
                     tol_rel: float = _REFINE_TOL[0],
                     tol_abs: float = _REFINE_TOL[1]) -> tuple[float, float]:
    """Log-weighted right-minus-left imbalance at nu_p and its error bound.

    Positive means nu(.) is increasing at p, negative decreasing; values
    within the error bound are indistinguishable from flat.  A quadrature
    run that narrowly misses its tolerance still yields a usable signed
    value here, so the best estimate is kept with its honest error bound.
    """
    _check_p(spec, p)
    if nu is None:
        nu = solve_pmean(spec, p).nu

    def half(side):
        try:
            return _half_mass(spec, nu, p, side, tol_rel, tol_abs, log_weight=True)
        except QuadratureAccuracyError as exc:
            if exc.best is None:
                raise
            return exc.best

    plus = half("+")
    minus = half("-")
    return plus.value - minus.value, plus.abs_error_estimate + minus.abs_error_estimate


def dnu_sign(spec: DistributionSpec, p: float, nu: float | None = None) -> str:
    """Sign of d nu_p / dp: 'increasing', 'decreasing' or 'flat'.

    Declared flat when the imbalance is within ten times the summed
    quadrature error estimates, so strict-growth claims never rest on
    integration noise.
    """
    diff, err = growth_imbalance(spec, p, nu=nu)
    if abs(diff) <= 10.0 * err:
        return "flat"
    return "increasing" if diff > 0.0 else "decreasing"


# ---------------------------------------------------------------------------
# curve tracing

def make_grid(start: float, stop: float, step: float) -> list[float]:
    """Inclusive arithmetic grid; the stop point is kept when it lands on it."""
    if step <= 0:
        raise ParameterError("grid step must be positive")
    if stop < start:
        raise ParameterError("grid stop must be >= start")
    n = int(math.floor((stop - start) / step + 1e-9))
    return [start + i * step for i in range(n + 1)]


def clip_grid(spec: DistributionSpec, grid: list[float]) -> tuple[list[float], list[str]]:
    """Drop grid points outside [1, hi - 0.05]; report what was clipped."""
    dom = p_domain(spec)
    cap = dom.hi - _GRID_CAP_MARGIN if math.isfinite(dom.hi) else math.inf
    kept = [p for p in grid if dom.lo <= p <= cap]
    warnings = []
    low = [p for p in grid if p < dom.lo]
    high = [p for p in grid if p > cap]
    if low:
        warnings.append(f"dropped {len(low)} grid point(s) below p = 1")
    if high:
        warnings.append(
            f"grid clipped at p = {cap:g} (domain ceiling {dom.hi:g}); "
            f"dropped {len(high)} point(s)")
    return kept, warnings


def trace_curve(spec: DistributionSpec, grid: list[float], tol: float = 1e-10,
                with_dnu: bool = True) -> PMeanCurve:
    """Solve nu_p on a sorted grid with warm starts; attach growth signs.

    Individual point failures are recorded as unknown (nu = NaN); the
    whole trace fails only when at least 20 percent of the grid fails.
    """
    if not grid:
        raise ParameterError("empty p grid")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ParameterError("p grid must be strictly increasing")
    facts = dist.analytic_facts(spec)
    scale_hint = None
    try:
        scale_hint = dist.quantile(spec, 0.75) - dist.quantile(spec, 0.25)
    except TrueSkewError:
        pass
    if not scale_hint or not math.isfinite(scale_hint) or scale_hint <= 0:
        scale_hint = max(spec.scale, 1.0)

    points: list[PMeanPoint] = []
    prev_nu = None
    prev_delta = None
    for p in grid:
        bracket = None
        if prev_nu is not None and math.isfinite(prev_nu):
            radius = 2.0 * abs(prev_delta if prev_delta else 0.0) + 0.1 * scale_hint
            bracket = (prev_nu - radius, prev_nu + radius)
        try:
            pt = solve_pmean(spec, p, tol=tol, bracket=bracket)
        except (BracketError, DomainError, QuadratureAccuracyError,
                IntegrandError):
            points.append(PMeanPoint(p=p, nu=math.nan, balance_residual=math.nan,
                                     dnu_sign="unknown"))
            continue
        if with_dnu:
            try:
                pt = replace(pt, dnu_sign=dnu_sign(spec, p, nu=pt.nu))
            except (QuadratureAccuracyError, IntegrandError):
                pass  # keep the solved point; the growth sign stays unknown
        if prev_nu is not None and math.isfinite(prev_nu):
            prev_delta = pt.nu - prev_nu
        prev_nu = pt.nu
        points.append(pt)

    failed = sum(1 for pt in points if not math.isfinite(pt.nu))
    if failed >= 0.2 * len(points) and failed > 0:
        raise CurveError(f"{failed} of {len(points)} grid points failed to solve")

    # central-difference slopes over the successfully solved points
    solved_idx = [i for i, pt in enumerate(points) if math.isfinite(pt.nu)]
    for j, i in enumerate(solved_idx):
        lo_j = solved_idx[max(j - 1, 0)]
        hi_j = solved_idx[min(j + 1, len(solved_idx) - 1)]
        if hi_j == lo_j:
            continue
        slope = (points[hi_j].nu - points[lo_j].nu) / (points[hi_j].p - points[lo_j].p)
        points[i] = replace(points[i], dnu_dp=slope)

    desc = f"{len(grid)} points on [{grid[0]:g}, {grid[-1]:g}]"
    return PMeanCurve(spec=spec, points=tuple(points), grid=desc)


# ---------------------------------------------------------------------------
# discrete and empirical p-means

def _discrete_balance(atoms: np.ndarray, probs: np.ndarray, a: float, p: float) -> float:
    up = atoms - a
    down = a - atoms
    return float(probs @ np.where(up > 0, up, 0.0) ** (p - 1.0)
                 - probs @ np.where(down > 0, down, 0.0) ** (p - 1.0))


def discrete_pmean(pmf: list[tuple[float, float]], p: float) -> float:
    """p-mean of a finite atomic distribution.

    For p = 1 this is the smallest atom m with CDF(m) >= 1/2 (the left
    median); for p = 2 the exact mean; otherwise the root of the finite
    balance sum, found by bisection between the extreme atoms.
    """
    if not pmf:
        raise ParameterError("empty pmf")
    atoms = np.asarray([a for a, _ in pmf], dtype=float)
    probs = np.asarray([q for _, q in pmf], dtype=float)
    if np.any(probs <= 0):
        raise ParameterError("pmf probabilities must be positive")
    if abs(math.fsum(probs.tolist()) - 1.0) > 1e-12:
        raise ParameterError("pmf probabilities must sum to 1 within 1e-12")
    if p < 1:
        raise DomainError("discrete p-means require p >= 1")
    order = np.argsort(atoms, kind="stable")
    atoms, probs = atoms[order], probs[order]
    if atoms.size == 1:
        return float(atoms[0])
    if p == 1.0:
        cum = np.cumsum(probs)
        return float(atoms[int(np.searchsorted(cum, 0.5 - 1e-15))])
    if p == 2.0:
        return math.fsum((probs * atoms).tolist())
    lo, hi = float(atoms[0]), float(atoms[-1])
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _discrete_balance(atoms, probs, mid, p) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, abs(hi)):
            break
    return 0.5 * (lo + hi)


def empirical_pmean(samples, p: float) -> float:
    """p-mean of the empirical measure; p = 1 gives the lower sample median."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise ParameterError("need at least two samples")
    if p < 1:
        raise DomainError("empirical p-means require p >= 1")
    x = np.sort(x, kind="stable")
    if p == 1.0:
        return float(x[(x.size - 1) // 2])
    if p == 2.0:
        return float(np.mean(x))
    probs = np.full(x.size, 1.0 / x.size)
    lo, hi = float(x[0]), float(x[-1])
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _discrete_balance(x, probs, mid, p) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, abs(hi)):
            break
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# affine equivariance

def mirror_spec(spec: DistributionSpec, c: float, s: float) -> DistributionSpec:
    """The distribution of c X + s.  For c > 0 this is exact parameter
    transport; for c < 0 the reflected distribution is registered as a
    user density with closed-form CDF and quantile callbacks."""
    if c == 0:
        raise ParameterError("c must be non-zero")
    if c > 0:
        return spec.with_affine(c, s)
    sup = dist.support(spec)
    lo = c * sup.upper + s
    hi = c * sup.lower + s
    facts = dist.analytic_facts(spec)

    def f(y):
        return dist.pdf(spec, (np.asarray(y, dtype=float) - s) / c) / abs(c)

    def cdf_cb(y):
        return 1.0 - dist.cdf(spec, (y - s) / c)

    def quant_cb(u):
        return c * dist.quantile(spec, 1.0 - u) + s

    density = UserDensity(f, Support(lo, hi), moment_sup=facts.moment_sup,
                          cdf=cdf_cb, quantile=quant_cb,
                          label=f"{c:g}*X{s:+g} of {dist.spec_to_string(spec)}")
    return DistributionSpec.make("user_density", density=density)


def verify_affine_equivariance(spec: DistributionSpec, c: float, s: float,
                               p_grid: list[float], tol: float = 1e-10) -> dict:
    """Compare nu_p of cX+s against c nu_p + s, both solved independently."""
    moved = mirror_spec(spec, c, s)
    rows = []
    worst = 0.0
    for p in p_grid:
        base = solve_pmean(spec, p, tol=tol).nu
        lhs = solve_pmean(moved, p, tol=tol).nu
        rhs = c * base + s
        dev = abs(lhs - rhs)
        worst = max(worst, dev)
        rows.append({"p": p, "moved": lhs, "expected": rhs, "deviation": dev})
    threshold = 1e-7 * max(1.0, abs(c))
    return {"c": c, "s": s, "max_deviation": worst,
            "passed": worst <= threshold, "threshold": threshold, "per_p": rows}
