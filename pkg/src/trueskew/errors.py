"""Exception hierarchy shared across the package.

Input problems (bad parameters, malformed expressions, out-of-domain
requests) are distinguished from computational failures (budget
exhaustion, lost brackets, non-convergence) so that callers such as the
CLI can map them onto stable exit codes.
"""

from __future__ import annotations


class TrueSkewError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(TrueSkewError, ValueError):
    """Invalid distribution parameters or malformed domain objects."""


class ParseError(TrueSkewError, ValueError):
    """Malformed distribution expression or grid expression.

    Carries the offending token and a short statement of the expected
    grammar so the CLI can print actionable messages.
    """

    def __init__(self, message: str, token: str | None = None, expected: str | None = None):
        parts = [message]
        if token is not None:
            parts.append(f"offending token: {token!r}")
        if expected is not None:
            parts.append(f"expected: {expected}")
        super().__init__("; ".join(parts))
        self.token = token
        self.expected = expected


class DomainError(TrueSkewError):
    """A requested exponent p or abscissa lies outside the valid domain."""


class BracketError(TrueSkewError):
    """Root bracketing failed to produce a sign change."""


class QuadratureAccuracyError(TrueSkewError):
    """Adaptive quadrature could not meet its tolerance within budget.

    ``best`` holds the best available estimate (a QuadResult) so callers
    can decide whether to accept it with the inflated error bound.
    """

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class IntegrandError(TrueSkewError):
    """An integrand produced NaN/inf; carries the offending abscissa."""

    def __init__(self, message: str, abscissa: float):
        super().__init__(f"{message} (abscissa {abscissa!r})")
        self.abscissa = abscissa


class OptimizationError(TrueSkewError):
    """An iterative minimizer failed to converge; carries diagnostics."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class CurveError(TrueSkewError):
    """Too many point failures while tracing a p-mean curve."""


class UnreliableResultError(TrueSkewError):
    """A direction estimate was requested but no reliable tangent exists."""
