"""Exact piecewise-polynomial densities and their convolution.

Pieces are half-open intervals [a, b) carrying polynomial coefficient
vectors (ascending powers).  All structural arithmetic -- validation,
antiderivatives, moments, convolution -- runs in exact rational
arithmetic (fractions.Fraction); floats appear only at density
evaluation time.  Convolution of two densities is computed symbolically:
output breakpoints are all pairwise sums of input breakpoints and each
output piece is the exact integral of the product, so mass is conserved
to the last bit.

The module also reproduces the summation counterexample: a two-level
histogram density (lam on (0,1], 1-lam on [1,2)) is truly positively
skewed for every lam in (1/2, 1), yet the p-means of the sum of two
independent copies are *decreasing* at p = 1 for lam = 3/5, so true
positive skewness is not closed under addition.  The class of decreasing
linear densities, by contrast, keeps certifying positive after
convolution ("closure check").
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import criteria as cr
from . import pmeans as pm
from .distributions import AnalyticFacts, DistributionSpec, Support
from .errors import ParameterError

__all__ = [
    "PiecewisePolyDensity",
    "piecewise_spec",
    "convolve",
    "linear_density",
    "uniform_density",
    "counterexample_density",
    "counterexample_report",
    "linear_closure_check",
]

_F = Fraction
_INTEGRAL_SLACK = _F(1, 10 ** 12)


# -- exact polynomial helpers (coefficient tuples, ascending powers) ---------

def _trim(c: tuple[_F, ...]) -> tuple[_F, ...]:
    i = len(c)
    while i > 1 and c[i - 1] == 0:
        i -= 1
    return tuple(c[:i])


def _padd(a, b):
    n = max(len(a), len(b))
    return _trim(tuple((a[i] if i < len(a) else _F(0)) + (b[i] if i < len(b) else _F(0))
                       for i in range(n)))


def _pscale(a, s):
    return _trim(tuple(c * s for c in a))


def _pmul(a, b):
    out = [_F(0)] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai == 0:
            continue
        for j, bj in enumerate(b):
            out[i + j] += ai * bj
    return _trim(tuple(out))


def _pint(a):
    """Antiderivative with zero constant term."""
    return (_F(0),) + tuple(c / (i + 1) for i, c in enumerate(a))


def _pder(a):
    if len(a) == 1:
        return (_F(0),)
    return tuple(c * i for i, c in enumerate(a))[1:] or (_F(0),)


def _peval_frac(a, x: _F) -> _F:
    acc = _F(0)
    for c in reversed(a):
        acc = acc * x + c
    return acc


def _peval_float(a, x):
    acc = np.zeros_like(np.asarray(x, dtype=float))
    for c in reversed(a):
        acc = acc * x + float(c)
    return acc


def _binom(n: int, k: int) -> int:
    return math.comb(n, k)


def _to_fraction(v) -> _F:
    if isinstance(v, _F):
        return v
    if isinstance(v, str):
        return _F(v)
    if isinstance(v, int):
        return _F(v)
    if isinstance(v, float):
        return _F(v)
    raise ParameterError(f"cannot interpret {v!r} as an exact rational")


@dataclass(frozen=True)
class _Piece:
    a: _F
    b: _F
    coeffs: tuple[_F, ...]


class PiecewisePolyDensity:
    """Finitely many polynomial pieces on contiguous bounded intervals."""

    def __init__(self, pieces: Iterable[tuple], label: str = "piecewise"):
        built: list[_Piece] = []
        for a, b, coeffs in pieces:
            fa, fb = _to_fraction(a), _to_fraction(b)
            fc = _trim(tuple(_to_fraction(c) for c in coeffs))
            if not fa < fb:
                raise ParameterError(f"piece interval [{fa}, {fb}) is empty")
            built.append(_Piece(fa, fb, fc))
        if not built:
            raise ParameterError("piecewise density needs at least one piece")
        built.sort(key=lambda p: p.a)
        for p, q in zip(built, built[1:]):
            if p.b != q.a:
                raise ParameterError(
                    f"pieces must be contiguous and non-overlapping; gap at {p.b} vs {q.a}")
        self.pieces = tuple(built)
        self.label = label
        self.support = Support(float(built[0].a), float(built[-1].b))
        self._edges = np.array([float(p.a) for p in built] + [float(built[-1].b)])
        self._float_coeffs = [tuple(float(c) for c in p.coeffs) for p in built]
        self._check_nonnegative()
        total = self.total_mass()
        if abs(total - 1) > _INTEGRAL_SLACK:
            raise ParameterError(f"piecewise density integrates to {float(total)!r}, not 1")
        # exact cumulative mass at each left edge
        cum = _F(0)
        self._cum = []
        for p in built:
            self._cum.append(cum)
            anti = _pint(p.coeffs)
            cum += _peval_frac(anti, p.b) - _peval_frac(anti, p.a)
        self._cum.append(cum)

    def _check_nonnegative(self):
        for p in self.pieces:
            xs = np.linspace(float(p.a), float(p.b), 65)
            vals = _peval_float(p.coeffs, xs)
            if np.min(vals) < -1e-12 * max(1.0, float(np.max(np.abs(vals)))):
                raise ParameterError(
                    f"piece on [{p.a}, {p.b}) dips negative (min {np.min(vals):.3e})")

    def total_mass(self) -> _F:
        total = _F(0)
        for p in self.pieces:
            anti = _pint(p.coeffs)
            total += _peval_frac(anti, p.b) - _peval_frac(anti, p.a)
        return total

    def moment(self, k: int) -> _F:
        """Exact integral of x^k times the density."""
        xk = tuple([_F(0)] * k + [_F(1)])
        total = _F(0)
        for p in self.pieces:
            anti = _pint(_pmul(xk, p.coeffs))
            total += _peval_frac(anti, p.b) - _peval_frac(anti, p.a)
        return total

    def mean(self) -> float:
        return float(self.moment(1))

    # -- density protocol used by the distributions dispatch ----------------

    def pdf(self, x):
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros_like(arr)
        idx = np.searchsorted(self._edges, arr, side="right") - 1
        inside = (idx >= 0) & (idx < len(self.pieces)) & (arr < self._edges[-1])
        for i in np.unique(idx[inside]):
            sel = inside & (idx == i)
            out[sel] = _peval_float(self.pieces[i].coeffs, arr[sel])
        return np.maximum(out, 0.0).reshape(np.shape(x)) if np.shape(x) else float(np.maximum(out[0], 0.0))

    def log_pdf(self, x):
        vals = np.atleast_1d(np.asarray(self.pdf(x), dtype=float))
        with np.errstate(divide="ignore"):
            out = np.where(vals > 0.0, np.log(np.maximum(vals, 1e-320)), -np.inf)
        return out.reshape(np.shape(x)) if np.shape(x) else float(out[0])

    def cdf(self, x: float) -> float:
        if x <= self._edges[0]:
            return 0.0
        if x >= self._edges[-1]:
            return 1.0
        i = int(np.searchsorted(self._edges, x, side="right") - 1)
        i = min(max(i, 0), len(self.pieces) - 1)
        p = self.pieces[i]
        anti = _pint(p.coeffs)
        local = _peval_float(anti, np.asarray(x)) - float(_peval_frac(anti, p.a))
        return float(min(max(float(self._cum[i]) + float(local), 0.0), 1.0))

    def quantile(self, u: float) -> float:
        lo, hi = self._edges[0], self._edges[-1]
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.cdf(mid) >= u:
                hi = mid
            else:
                lo = mid
            if hi - lo <= 1e-15 * max(1.0, abs(hi)):
                break
        return hi

    def breakpoints(self) -> tuple[float, ...]:
        return tuple(self._edges[1:-1])

    def mode(self) -> float | None:
        """Unique global maximizer, or None when the maximum is a plateau."""
        candidates: dict[float, float] = {}
        for p, fc in zip(self.pieces, self._float_coeffs):
            xs = [float(p.a), float(p.b)]
            der = _pder(p.coeffs)
            if len(der) > 1 or der[0] != 0:
                roots = np.roots(list(map(float, reversed(der)))) if len(der) > 1 else []
                for r in np.atleast_1d(roots):
                    if abs(r.imag) < 1e-12 and float(p.a) < r.real < float(p.b):
                        xs.append(float(r.real))
            for x in xs:
                candidates[round(x, 14)] = max(candidates.get(round(x, 14), -np.inf),
                                               float(_peval_float(fc, np.asarray(x))))
        best_x, best_v = max(candidates.items(), key=lambda kv: (kv[1], -kv[0]))
        near = [x for x, v in candidates.items() if v >= best_v * (1.0 - 1e-12) and x != best_x]
        if near:
            # a flat stretch at the top means the maximizer is not unique
            for p in self.pieces:
                der = _pder(p.coeffs)
                if all(c == 0 for c in der):
                    val = float(_peval_float(p.coeffs, np.asarray(float(p.a))))
                    if val >= best_v * (1.0 - 1e-12):
                        return None
            return None if any(abs(x - best_x) > 1e-9 for x in near) else best_x
        return best_x

    def exact_monotone(self) -> str | None:
        """'decreasing' / 'increasing' for exactly-verified monotone shapes.

        Exact verification is implemented for pieces of degree <= 1 (the
        slopes and junction jumps decide); higher-degree pieces return
        None and callers fall back to a numeric scan.
        """
        if any(len(p.coeffs) > 2 for p in self.pieces):
            return None
        slopes = [p.coeffs[1] if len(p.coeffs) == 2 else _F(0) for p in self.pieces]
        vals = []
        for p in self.pieces:
            vals.append((_peval_frac(p.coeffs, p.a), _peval_frac(p.coeffs, p.b)))
        non_increasing = all(s <= 0 for s in slopes) and all(
            vals[i][1] >= vals[i + 1][0] for i in range(len(vals) - 1))
        strict_drop = any(s < 0 for s in slopes) or any(
            vals[i][1] > vals[i + 1][0] for i in range(len(vals) - 1))
        if non_increasing and strict_drop:
            return "decreasing"
        non_decreasing = all(s >= 0 for s in slopes) and all(
            vals[i][1] <= vals[i + 1][0] for i in range(len(vals) - 1))
        strict_rise = any(s > 0 for s in slopes) or any(
            vals[i][1] < vals[i + 1][0] for i in range(len(vals) - 1))
        if non_decreasing and strict_rise:
            return "increasing"
        return None

    def facts(self) -> AnalyticFacts:
        mode = self.mode()
        return AnalyticFacts(mode=mode, median=None, mean=self.mean(),
                             moment_sup=math.inf,
                             density_decreasing=self.exact_monotone() == "decreasing")

    # -- serialization -------------------------------------------------------

    def to_json_obj(self) -> list[dict]:
        return [{"interval": [str(p.a), str(p.b)],
                 "coefficients": [str(c) for c in p.coeffs]}
                for p in self.pieces]

    @classmethod
    def from_json_obj(cls, obj: Sequence[dict], label: str = "piecewise") -> "PiecewisePolyDensity":
        pieces = []
        for entry in obj:
            try:
                a, b = entry["interval"]
                coeffs = entry["coefficients"]
            except (KeyError, TypeError, ValueError):
                raise ParameterError(
                    "piecewise JSON entries need 'interval': [a, b] and 'coefficients'")
            pieces.append((a, b, coeffs))
        return cls(pieces, label=label)

    def __repr__(self):
        return f"PiecewisePolyDensity({len(self.pieces)} pieces on [{self.support.lower:g}, {self.support.upper:g}))"


def piecewise_spec(density: PiecewisePolyDensity) -> DistributionSpec:
    return DistributionSpec.make("piecewise", density=density)


# ---------------------------------------------------------------------------
# exact convolution

def _zpoly_from_qshift(q: tuple[_F, ...]) -> list[tuple[_F, ...]]:
    """Coefficients (in x) of Q(z - x), each entry a polynomial in z."""
    deg = len(q) - 1
    out = []
    for i in range(deg + 1):
        zc = [_F(0)] * (deg - i + 1)
        for j in range(i, deg + 1):
            zc[j - i] += q[j] * _binom(j, i) * (-1) ** i
        out.append(_trim(tuple(zc)))
    return out


def _xzpoly_mul_const(xz: list[tuple[_F, ...]], p: tuple[_F, ...]) -> list[tuple[_F, ...]]:
    """(poly in x with z-poly coefficients) times (constant poly in x)."""
    out = [(_F(0),)] * (len(xz) + len(p) - 1)
    for i, ci in enumerate(xz):
        for j, pj in enumerate(p):
            if pj == 0:
                continue
            out[i + j] = _padd(out[i + j], _pscale(ci, pj))
    return out


def _xzpoly_int(xz: list[tuple[_F, ...]]) -> list[tuple[_F, ...]]:
    return [(_F(0),)] + [_pscale(c, _F(1, i + 1)) for i, c in enumerate(xz)]


def _xzpoly_eval_const(xz: list[tuple[_F, ...]], c: _F) -> tuple[_F, ...]:
    acc = (_F(0),)
    power = _F(1)
    for coeff in xz:
        acc = _padd(acc, _pscale(coeff, power))
        power *= c
    return acc


def _xzpoly_eval_zminus(xz: list[tuple[_F, ...]], c: _F) -> tuple[_F, ...]:
    """Substitute x = z - c and collect a polynomial in z."""
    acc = (_F(0),)
    for i, coeff in enumerate(xz):
        # (z - c)^i expanded in z
        binpoly = tuple(_binom(i, m) * (-c) ** (i - m) for m in range(i + 1))
        acc = _padd(acc, _pmul(coeff, binpoly))
    return acc


def convolve(f: PiecewisePolyDensity, g: PiecewisePolyDensity) -> PiecewisePolyDensity:
    """Exact density of the sum of independent variables with densities f, g."""
    cuts: set[_F] = set()
    for p in f.pieces:
        for q in g.pieces:
            cuts.update((p.a + q.a, p.a + q.b, p.b + q.a, p.b + q.b))
    grid = sorted(cuts)
    out_pieces: list[tuple[_F, _F, tuple[_F, ...]]] = []
    for lo, hi in zip(grid[:-1], grid[1:]):
        zmid = (lo + hi) / 2
        acc = (_F(0),)
        for p in f.pieces:
            for q in g.pieces:
                if not (p.a + q.a < hi and lo < p.b + q.b):
                    continue
                if zmid <= p.a + q.a or zmid >= p.b + q.b:
                    continue
                # integrate P(x) Q(z - x) dx over the active x-range
                integrand = _xzpoly_mul_const(_zpoly_from_qshift(q.coeffs), p.coeffs)
                anti = _xzpoly_int(integrand)
                # lower bound: x = max(p.a, z - q.b)
                if zmid - q.b <= p.a:
                    lower = _xzpoly_eval_const(anti, p.a)
                else:
                    lower = _xzpoly_eval_zminus(anti, q.b)
                # upper bound: x = min(p.b, z - q.a)
                if zmid - q.a >= p.b:
                    upper = _xzpoly_eval_const(anti, p.b)
                else:
                    upper = _xzpoly_eval_zminus(anti, q.a)
                acc = _padd(acc, _padd(upper, _pscale(lower, _F(-1))))
        out_pieces.append((lo, hi, acc))
    out_pieces = [(a, b, c) for a, b, c in out_pieces if any(v != 0 for v in c)]
    result = PiecewisePolyDensity(out_pieces, label=f"({f.label})*({g.label})")
    if result.total_mass() != 1:
        raise ParameterError("convolution lost mass; inputs were not both normalized")
    return result


# ---------------------------------------------------------------------------
# stock densities

def linear_density(h) -> PiecewisePolyDensity:
    """The decreasing linear density f(x) = h - h^2 x / 2 on [0, 2/h]."""
    hf = _to_fraction(h)
    if hf <= 0:
        raise ParameterError("h must be positive")
    return PiecewisePolyDensity([(0, 2 / hf, (hf, -hf * hf / 2))], label=f"linear(h={h})")


def uniform_density(a, b) -> PiecewisePolyDensity:
    fa, fb = _to_fraction(a), _to_fraction(b)
    if not fa < fb:
        raise ParameterError("uniform density needs a < b")
    return PiecewisePolyDensity([(fa, fb, (1 / (fb - fa),))], label=f"uniform({a},{b})")


def counterexample_density(lam) -> PiecewisePolyDensity:
    """Two-level histogram: lam on (0, 1], 1 - lam on [1, 2); lam in (1/2, 1)."""
    lf = _to_fraction(lam)
    if not _F(1, 2) < lf < 1:
        raise ParameterError(f"lambda must lie strictly between 1/2 and 1, got {lam!r}")
    return PiecewisePolyDensity([(0, 1, (lf,)), (1, 2, (1 - lf,))],
                                label=f"two-level(lambda={lam})")


# ---------------------------------------------------------------------------
# reports

def _median_from_cdf_polynomial(density: PiecewisePolyDensity) -> float:
    """Root of the exact piecewise CDF polynomial at level 1/2."""
    # locate the piece whose cumulative range brackets 1/2
    for i, p in enumerate(density.pieces):
        lo_mass, hi_mass = density._cum[i], density._cum[i + 1]
        if lo_mass <= _F(1, 2) <= hi_mass:
            anti = _pint(p.coeffs)
            shift = lo_mass - _peval_frac(anti, p.a) - _F(1, 2)
            poly = _padd(anti, (shift,))
            roots = np.roots(list(map(float, reversed(poly))))
            real = [float(r.real) for r in roots
                    if abs(r.imag) < 1e-10 and float(p.a) - 1e-12 <= r.real <= float(p.b) + 1e-12]
            if real:
                return min(real, key=lambda r: abs(density.cdf(r) - 0.5))
    raise ParameterError("median not bracketed by the CDF pieces")


def counterexample_report(lam, tol: float = 1e-10) -> dict:
    """Summation counterexample at mixing level lam in (1/2, 1).

    Both summands are certified truly positive via the monotone-density
    route; the self-convolution's median and log-weighted growth
    imbalance at p = 1 are then computed, a negative imbalance showing
    that the sum is *not* truly positively skewed.
    """
    X = counterexample_density(lam)
    spec_x = piecewise_spec(X)
    verdict_x = cr.check_monotone_density(spec_x)
    if verdict_x is None:
        raise ParameterError("summand density failed the monotone certificate")
    Z = convolve(X, X)
    spec_z = piecewise_spec(Z)
    nu1 = pm.solve_pmean(spec_z, 1.0, tol=tol).nu
    nu1_exact = _median_from_cdf_polynomial(Z)
    imbalance, err = pm.growth_imbalance(spec_z, 1.0, nu=nu1)
    decreasing = imbalance < -10.0 * err
    mode_z = Z.mode()
    conclusion = ("sum_not_truly_positive" if decreasing or (mode_z is not None and nu1 < mode_z)
                  else "inconclusive_at_p1")
    return {
        "lambda": float(_to_fraction(lam)),
        "summand_conclusion": verdict_x.conclusion,
        "summand_grade": verdict_x.certificate_grade,
        "summand_evidence": [e.to_json_dict() for e in verdict_x.evidence],
        "sum_pieces": Z.to_json_obj(),
        "sum_median": nu1,
        "sum_median_cdf_root": nu1_exact,
        "sum_mode": mode_z,
        "growth_imbalance_at_p1": imbalance,
        "growth_imbalance_error": err,
        "decreasing_at_p1": bool(decreasing),
        "conclusion": conclusion,
    }


def linear_closure_check(h1, h2, p_max: float = 12.0, tol: float = 1e-10) -> dict:
    """Convolve two decreasing linear densities and certify the sum."""
    f1 = linear_density(h1)
    f2 = linear_density(h2)
    Z = convolve(f1, f2)
    spec_z = piecewise_spec(Z)
    grid = list(np.linspace(1.0, p_max, 12))
    verdict = cr.numeric_certify(spec_z, p_grid=grid, tol=tol)
    return {
        "h1": float(_to_fraction(h1)),
        "h2": float(_to_fraction(h2)),
        "sum_support": [Z.support.lower, Z.support.upper],
        "sum_mean": Z.mean(),
        "conclusion": verdict.conclusion,
        "grade": verdict.certificate_grade,
        "evidence": [e.to_json_dict() for e in verdict.evidence],
    }
