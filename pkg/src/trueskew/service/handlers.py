"""Pure request -> response handlers, shared by the HTTP app and the CLI.

Handlers raise the library's error types; transport layers translate
them (HTTP status codes, CLI exit codes).
"""

from __future__ import annotations

import math
from typing import Any

import numpy as np

from .. import criteria, distributions, mvsn, piecewise, pmeans
from ..errors import ParameterError
from .models import (CounterexampleRequest, CounterexampleResponse, CurvePointModel,
                     CurveRequest, CurveResponse, EvidenceModel, MvsnEntryModel,
                     MvsnRequest, MvsnResponse, MvsnTangentModel, PGridSpec,
                     VerdictRequest, VerdictResponse)


def resolve_distribution(dist_input) -> distributions.DistributionSpec:
    """Accept a distribution expression string or inline piecewise pieces."""
    if isinstance(dist_input, str):
        return distributions.parse_distribution(dist_input)
    pieces = [(m.interval[0], m.interval[1], m.coefficients) for m in dist_input]
    density = piecewise.PiecewisePolyDensity(pieces)
    return piecewise.piecewise_spec(density)


def _dist_manifest_entry(dist_input) -> Any:
    if isinstance(dist_input, str):
        return dist_input
    return [m.model_dump() for m in dist_input]


def resolve_grid(p, spec) -> tuple[list[float], list[str]]:
    if isinstance(p, PGridSpec):
        raw = pmeans.make_grid(p.start, p.stop, p.step)
    else:
        raw = sorted(set(float(x) for x in p))
        if not raw:
            raise ParameterError("empty p grid")
    return pmeans.clip_grid(spec, raw)


def run_curve(req: CurveRequest) -> CurveResponse:
    spec = resolve_distribution(req.dist)
    grid, warnings = resolve_grid(req.p, spec)
    if not grid:
        raise ParameterError("the whole p grid lies outside the exponent domain")
    curve = pmeans.trace_curve(spec, grid, tol=req.tol, with_dnu=req.with_growth_signs)
    dom = pmeans.p_domain(spec)
    points = [CurvePointModel(p=pt.p,
                              nu=None if not math.isfinite(pt.nu) else pt.nu,
                              dnu_sign=pt.dnu_sign,
                              dnu_dp=pt.dnu_dp,
                              residual=None if not math.isfinite(pt.balance_residual)
                              else pt.balance_residual)
              for pt in curve.points]
    manifest = {
        "command": "curve",
        "dist": _dist_manifest_entry(req.dist),
        "p": grid,
        "tol": req.tol,
        "with_growth_signs": req.with_growth_signs,
    }
    return CurveResponse(dist=distributions.spec_to_string(spec),
                         domain_lo=dom.lo,
                         domain_hi=None if math.isinf(dom.hi) else dom.hi,
                         points=points, warnings=warnings, manifest=manifest)


def run_verdict(req: VerdictRequest) -> VerdictResponse:
    spec = resolve_distribution(req.dist)
    grid = None
    if req.p is not None:
        grid, _ = resolve_grid(req.p, spec)
        if not grid:
            raise ParameterError("the whole p grid lies outside the exponent domain")
    verdict = criteria.certify(spec, p_grid=grid, tol=req.tol)
    doc = verdict.to_json_dict()
    manifest = {
        "command": "verdict",
        "dist": _dist_manifest_entry(req.dist),
        "p": grid,
        "tol": req.tol,
    }
    return VerdictResponse(dist=distributions.spec_to_string(spec),
                           conclusion=doc["conclusion"],
                           certificate_grade=doc["certificate_grade"],
                           evidence=[EvidenceModel(**e) for e in doc["evidence"]],
                           witness=doc["witness"],
                           manifest=manifest)


def run_counterexample(req: CounterexampleRequest) -> CounterexampleResponse:
    report = piecewise.counterexample_report(req.lam, tol=req.tol)
    manifest = {"command": "counterexample", "lambda": req.lam, "tol": req.tol}
    return CounterexampleResponse(
        lam=report["lambda"],
        summand_conclusion=report["summand_conclusion"],
        summand_grade=report["summand_grade"],
        sum_median=report["sum_median"],
        sum_median_cdf_root=report["sum_median_cdf_root"],
        sum_mode=report["sum_mode"],
        growth_imbalance_at_p1=report["growth_imbalance_at_p1"],
        growth_imbalance_error=report["growth_imbalance_error"],
        decreasing_at_p1=report["decreasing_at_p1"],
        conclusion=report["conclusion"],
        sum_pieces=report["sum_pieces"],
        manifest=manifest,
    )


def run_mvsn(req: MvsnRequest) -> MvsnResponse:
    spec = mvsn.MVSNSpec.make(req.lambda_skew, mu=req.mu, sigma=req.sigma)
    if isinstance(req.p, PGridSpec):
        grid = pmeans.make_grid(req.p.start, req.p.stop, req.p.step)
    else:
        grid = sorted(set(float(x) for x in req.p))
    traj = mvsn.trajectory(spec, grid, n=req.n, seed=req.seed, tol=req.tol)
    lam = np.asarray(req.lambda_skew, dtype=float)
    symmetric = float(lam @ lam) == 0.0
    note = None
    colinearity = None
    if symmetric:
        note = "symmetric (lambda = 0): trajectory is constant up to Monte-Carlo noise; tangents omitted"
    elif not traj.tangents:
        note = "no tangent cleared the jackknife reliability threshold"
    else:
        colinearity = mvsn.colinearity_score(traj, lam)
    reliable_ps = {p for p, _ in traj.tangents}
    tangents = [MvsnTangentModel(p=p, tau=list(tau), reliable=True)
                for p, tau in traj.tangents]
    grid_rows = None
    if req.emit_density_grid and spec.dim == 2:
        rows, _ = mvsn.density_grid(spec)
        grid_rows = rows.tolist()
    manifest = {
        "command": "mvsn",
        "lambda": list(req.lambda_skew),
        "mu": list(spec.mu),
        "sigma": [list(r) for r in spec.sigma],
        "mu_sigma_defaulted": req.mu is None and req.sigma is None,
        "n": req.n,
        "seed": req.seed,
        "p": grid,
        "tol": req.tol,
        "emit_density_grid": req.emit_density_grid,
        "reliability": traj.diagnostics.get("reliability", []),
    }
    return MvsnResponse(
        entries=[MvsnEntryModel(p=p, nu=list(nu), converged=ok)
                 for p, nu, ok in traj.entries],
        tangents=tangents,
        colinearity_with_skew=colinearity,
        note=note,
        density_grid=grid_rows,
        manifest=manifest,
    )
