"""Command line front end: a thin client over the service handlers.

Every command builds the same request model the HTTP service accepts,
runs the shared handler in-process, and writes the products to --out
(CSV or JSON, 17 significant digits) plus a ``<out>.manifest.json``
sidecar from which the run can be replayed exactly via ``--config``.

Exit codes: 0 success, 1 usage or input error, 2 computational failure.
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import click

from . import __version__
from .errors import (BracketError, CurveError, DomainError, IntegrandError,
                     OptimizationError, ParameterError, ParseError,
                     QuadratureAccuracyError, TrueSkewError, UnreliableResultError)
from .service import handlers
from .service.models import (CounterexampleRequest, CurveRequest, MvsnRequest,
                             PGridSpec, PiecewisePieceModel, VerdictRequest)

_USAGE_ERRORS = (ParseError, ParameterError, DomainError)
_COMPUTE_ERRORS = (BracketError, CurveError, IntegrandError, OptimizationError,
                   QuadratureAccuracyError, UnreliableResultError)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def _parse_p(text: str):
    """'1:8:0.5' -> arithmetic grid; '1,2,4' -> explicit list."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ParseError("malformed p grid", token=text, expected="start:stop:step")
        try:
            start, stop, step = (float(v) for v in parts)
        except ValueError:
            raise ParseError("p grid bounds must be numbers", token=text,
                             expected="start:stop:step") from None
        return PGridSpec(start=start, stop=stop, step=step)
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ParseError("malformed p list", token=text,
                         expected="comma-separated numbers or start:stop:step") from None


def _parse_dist(text: str):
    """Expression, or a path to a piecewise-density JSON file."""
    text = text.strip()
    path = text[1:] if text.startswith("@") else text
    if path.endswith(".json"):
        try:
            obj = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ParseError(f"cannot read piecewise density file: {exc}", token=path)
        except json.JSONDecodeError as exc:
            raise ParseError(f"piecewise density file is not valid JSON: {exc}", token=path)
        if not isinstance(obj, list):
            raise ParseError("piecewise density JSON must be a list of pieces",
                             token=path, expected='[{"interval": [a,b], "coefficients": [...]}]')
        return [PiecewisePieceModel(**entry) for entry in obj]
    return text


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        obj = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ParseError(f"cannot read config: {exc}", token=path)
    except json.JSONDecodeError as exc:
        raise ParseError(f"config is not valid JSON: {exc}", token=path)
    if not isinstance(obj, dict):
        raise ParseError("config must be a JSON object", token=path)
    obj.pop("command", None)
    return obj


def _merged_request(model_cls, flags: dict, config: dict):
    merged = {k: v for k, v in flags.items() if v is not None}
    merged.update(config)  # an explicit config file overrides flags
    return model_cls(**merged)


def _write_product(out: str | None, text: str, manifest: dict) -> None:
    if out is None:
        click.echo(text, nl=False)
        return
    path = Path(out)
    path.write_text(text)
    Path(str(path) + ".manifest.json").write_text(
        json.dumps(manifest, indent=2, default=_fmt) + "\n")


def _warn(lines):
    for line in lines:
        click.echo(f"warning: {line}", err=True)


@click.group(name="pmean")
@click.version_option(__version__, prog_name="pmean")
def cli():
    """p-mean curves, skewness verdicts and trajectories."""


@cli.command("curve")
@click.option("--dist", "dist_text", help="distribution expression or piecewise JSON path")
@click.option("--p", "p_text", help="exponent grid, start:stop:step or comma list")
@click.option("--tol", type=float, default=None, help="solver tolerance (default 1e-10)")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv")
@click.option("--config", "config_path", type=click.Path(exists=False), default=None,
              help="JSON request overriding flags (e.g. a run manifest)")
def cmd_curve(dist_text, p_text, tol, out, fmt, config_path):
    """Trace p -> nu_p and write a table: p,nu,dnu_sign,dnu_dp,residual."""
    config = _load_config(config_path)
    flags = {"dist": _parse_dist(dist_text) if dist_text else None,
             "p": _parse_p(p_text) if p_text else None,
             "tol": tol}
    if "dist" not in config and flags["dist"] is None:
        raise click.UsageError("--dist is required (or provide it via --config)")
    resp = handlers.run_curve(_merged_request(CurveRequest, flags, config))
    _warn(resp.warnings)
    if fmt == "csv":
        lines = ["p,nu,dnu_sign,dnu_dp,residual"]
        for pt in resp.points:
            lines.append(",".join([_fmt(pt.p), _fmt(pt.nu), pt.dnu_sign,
                                   _fmt(pt.dnu_dp), _fmt(pt.residual)]))
        text = "\n".join(lines) + "\n"
    else:
        text = resp.model_dump_json(indent=2) + "\n"
    _write_product(out, text, resp.manifest)


@cli.command("verdict")
@click.option("--dist", "dist_text", help="distribution expression or piecewise JSON path")
@click.option("--p", "p_text", default=None, help="certification grid override")
@click.option("--tol", type=float, default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--config", "config_path", type=click.Path(exists=False), default=None)
def cmd_verdict(dist_text, p_text, tol, out, config_path):
    """Run the certification pipeline and write the verdict document (JSON)."""
    config = _load_config(config_path)
    flags = {"dist": _parse_dist(dist_text) if dist_text else None,
             "p": _parse_p(p_text) if p_text else None,
             "tol": tol}
    if "dist" not in config and flags["dist"] is None:
        raise click.UsageError("--dist is required (or provide it via --config)")
    resp = handlers.run_verdict(_merged_request(VerdictRequest, flags, config))
    _write_product(out, resp.model_dump_json(indent=2) + "\n", resp.manifest)


@cli.command("counterexample")
@click.option("--lambda", "lam", type=float, help="mixing level in (1/2, 1)")
@click.option("--tol", type=float, default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--config", "config_path", type=click.Path(exists=False), default=None)
def cmd_counterexample(lam, tol, out, config_path):
    """Summation counterexample report: positive summands, non-positive sum."""
    config = _load_config(config_path)
    flags = {"lam": lam, "tol": tol}
    if "lambda" in config:
        config["lam"] = config.pop("lambda")
    if "lam" not in config and lam is None:
        raise click.UsageError("--lambda is required (or provide it via --config)")
    if "lam" not in config and not 0.5 < lam < 1.0:
        raise click.UsageError(f"--lambda must lie strictly between 1/2 and 1, got {lam}")
    resp = handlers.run_counterexample(
        _merged_request(CounterexampleRequest, flags, config))
    _write_product(out, resp.model_dump_json(indent=2, by_alias=True) + "\n",
                   resp.manifest)


@cli.command("mvsn")
@click.option("--lambda", "lam_text", help="skewness vector, e.g. 5,5")
@click.option("--mu", "mu_text", default=None, help="location vector (default zeros)")
@click.option("--sigma", "sigma_text", default=None,
              help="covariance rows separated by ';', e.g. '1,0;0,1' (default identity)")
@click.option("--n", type=int, default=None, help="sample size (default 100000)")
@click.option("--seed", type=int, default=None, help="rng seed (default 0)")
@click.option("--p", "p_text", default=None, help="exponent grid (default 1:4:0.5)")
@click.option("--tol", type=float, default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--density-grid/--no-density-grid", "want_grid", default=True,
              help="also write a grid-evaluated density CSV (2-variate only)")
@click.option("--config", "config_path", type=click.Path(exists=False), default=None)
def cmd_mvsn(lam_text, mu_text, sigma_text, n, seed, p_text, tol, out, want_grid,
             config_path):
    """Seeded multivariate trajectory: CSV of nu_p and tangent directions.

    Writes the trajectory table to --out, the replayable manifest to
    <out>.manifest.json and, for 2-variate runs, a density grid to
    <out>.density.csv.
    """
    config = _load_config(config_path)
    if "lambda" in config:
        config["lambda_skew"] = config.pop("lambda")
    flags = {
        "lambda_skew": [float(v) for v in lam_text.split(",")] if lam_text else None,
        "mu": [float(v) for v in mu_text.split(",")] if mu_text else None,
        "sigma": [[float(v) for v in row.split(",")] for row in sigma_text.split(";")]
        if sigma_text else None,
        "n": n,
        "seed": seed,
        "p": _parse_p(p_text) if p_text else None,
        "tol": tol,
        "emit_density_grid": want_grid,
    }
    if "lambda_skew" not in config and flags["lambda_skew"] is None:
        raise click.UsageError("--lambda is required (or provide it via --config)")
    resp = handlers.run_mvsn(_merged_request(MvsnRequest, flags, config))
    if resp.note:
        click.echo(f"note: {resp.note}", err=True)
    k = len(resp.manifest["lambda"])
    header = (["p"] + [f"nu_{i + 1}" for i in range(k)]
              + [f"tau_{i + 1}" for i in range(k)] + ["tangent_reliable"])
    tangent_by_p = {t.p: t for t in resp.tangents}
    lines = [",".join(header)]
    for entry in resp.entries:
        t = tangent_by_p.get(entry.p)
        taus = [_fmt(v) for v in t.tau] if t else [""] * k
        lines.append(",".join([_fmt(entry.p)] + [_fmt(v) for v in entry.nu]
                              + taus + [str(bool(t)).lower()]))
    _write_product(out, "\n".join(lines) + "\n", resp.manifest)
    if out is not None and resp.density_grid is not None:
        rows = ["x,y,density"] + [",".join(_fmt(v) for v in row)
                                  for row in resp.density_grid]
        Path(str(Path(out)) + ".density.csv").write_text("\n".join(rows) + "\n")
    if resp.colinearity_with_skew is not None:
        click.echo(f"colinearity with the skewness direction: "
                   f"{resp.colinearity_with_skew:.6f}", err=True)


@cli.command("serve")
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def cmd_serve(host, port):
    """Run the HTTP service (same handlers as the CLI)."""
    import uvicorn

    from .service.app import app
    uvicorn.run(app, host=host, port=port)


def main(argv=None) -> int:
    """Entry point with the stable exit-code contract."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:  # --help, --version
        return int(exc.exit_code)
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 1
    except _USAGE_ERRORS as exc:
        click.echo(f"usage error: {exc}", err=True)
        return 1
    except _COMPUTE_ERRORS as exc:
        click.echo(f"computation failed: {exc}", err=True)
        return 2
    except TrueSkewError as exc:
        click.echo(f"computation failed: {exc}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
