"""Request/response models shared by the HTTP service and the CLI.

Every compute request is replayable: the response echoes the resolved
configuration as a manifest block, and feeding that manifest back (CLI
``--config`` or request body) reproduces the run bit for bit.
"""

from __future__ import annotations

import math
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class PGridSpec(BaseModel):
    """Arithmetic exponent grid: start, stop inclusive when it lands on it."""

    start: float = 1.0
    stop: float = 8.0
    step: float = 0.5

    @model_validator(mode="after")
    def _check(self):
        if self.step <= 0:
            raise ValueError("grid step must be positive")
        if self.stop < self.start:
            raise ValueError("grid stop must be >= start")
        return self


class PiecewisePieceModel(BaseModel):
    """One polynomial piece; numbers may be exact rationals as 'p/q' strings."""

    interval: tuple[float | str, float | str]
    coefficients: list[float | str]


DistInput = str | list[PiecewisePieceModel]


class CurveRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    dist: DistInput
    p: PGridSpec | list[float] = Field(default_factory=PGridSpec)
    tol: float = 1e-10
    with_growth_signs: bool = True


class CurvePointModel(BaseModel):
    p: float
    nu: float | None
    dnu_sign: str
    dnu_dp: float | None
    residual: float | None


class CurveResponse(BaseModel):
    dist: str
    domain_lo: float
    domain_hi: float | None
    points: list[CurvePointModel]
    warnings: list[str]
    manifest: dict[str, Any]


class VerdictRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    dist: DistInput
    p: PGridSpec | list[float] | None = None
    tol: float = 1e-10


class EvidenceModel(BaseModel):
    criterion: str
    detail: str
    passed: bool
    data: dict[str, Any] = Field(default_factory=dict)


class VerdictResponse(BaseModel):
    dist: str
    conclusion: Literal["truly_positive", "truly_negative", "symmetric",
                        "not_truly_positive", "indeterminate"]
    certificate_grade: Literal["analytic", "numeric", "refuted"]
    evidence: list[EvidenceModel]
    witness: dict[str, Any] | None
    manifest: dict[str, Any]


class CounterexampleRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    lam: float = Field(alias="lambda", gt=0.5, lt=1.0,
                       description="mixing level of the two-level summand density")
    tol: float = 1e-10


class CounterexampleResponse(BaseModel):
    lam: float = Field(alias="lambda")
    summand_conclusion: str
    summand_grade: str
    sum_median: float
    sum_median_cdf_root: float
    sum_mode: float | None
    growth_imbalance_at_p1: float
    growth_imbalance_error: float
    decreasing_at_p1: bool
    conclusion: str
    sum_pieces: list[dict[str, Any]]
    manifest: dict[str, Any]

    model_config = ConfigDict(populate_by_name=True)


class MvsnRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    lambda_skew: list[float] = Field(alias="lambda")
    mu: list[float] | None = None
    sigma: list[list[float]] | None = None
    n: int = Field(default=100_000, ge=1)
    seed: int = 0
    p: PGridSpec | list[float] = Field(default_factory=lambda: PGridSpec(start=1.0, stop=4.0, step=0.5))
    tol: float = 1e-8
    emit_density_grid: bool = True

    @field_validator("lambda_skew")
    @classmethod
    def _finite(cls, v):
        if not v or any(not math.isfinite(x) for x in v):
            raise ValueError("lambda must be a non-empty vector of finite reals")
        return v


class MvsnEntryModel(BaseModel):
    p: float
    nu: list[float]
    converged: bool


class MvsnTangentModel(BaseModel):
    p: float
    tau: list[float]
    reliable: bool


class MvsnResponse(BaseModel):
    entries: list[MvsnEntryModel]
    tangents: list[MvsnTangentModel]
    colinearity_with_skew: float | None
    note: str | None
    density_grid: list[list[float]] | None
    manifest: dict[str, Any]


class HealthResponse(BaseModel):
    status: str
    version: str
    families: list[str]
