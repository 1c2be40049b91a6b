"""Request and response models shared by the HTTP service and the CLI.

Response models mirror the core dataclasses field for field, so a JSON
payload round-trips into the same numbers the library returns in process.
"""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict

from .channel import DEFAULT_LOSS_DB_PER_KM


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


# ---------------------------------------------------------------- requests


class RateRequest(StrictModel):
    """Exactly one of tau and distance_km selects the link."""

    tau: float | None = None
    distance_km: float | None = None
    epsilon: float = 0.0
    xi: float = 1.0
    mu: float | None = None
    loss_rate_db_per_km: float = DEFAULT_LOSS_DB_PER_KM


class ThresholdRequest(StrictModel):
    epsilon: float = 0.0
    xi: float = 1.0
    mu: float | None = None
    loss_rate_db_per_km: float = DEFAULT_LOSS_DB_PER_KM


class SweepRequest(StrictModel):
    d_min: float = 0.0
    d_max: float = 170.0
    step: float = 5.0
    epsilon: float = 0.0
    xi: float = 1.0
    mu: float | None = None
    loss_rate_db_per_km: float = DEFAULT_LOSS_DB_PER_KM


class VerifyRequest(StrictModel):
    """The verification table is fixed; the request carries no knobs."""


class EmulateRequest(StrictModel):
    tau: float | None = None
    distance_km: float | None = None
    epsilon: float = 0.0
    mu: float = 1.0e4
    eta: float = 1.0
    n: int = 100000
    seed: int = 0
    xi: float = 1.0
    loss_rate_db_per_km: float = DEFAULT_LOSS_DB_PER_KM


# ---------------------------------------------------------------- responses


class HealthResponse(StrictModel):
    status: str = "ok"
    version: str = ""


class RateReportModel(StrictModel):
    """Mirror of rates.RateReport."""

    rate: float
    tau: float
    epsilon: float
    chi: float
    chi_loss: float
    distance_km: float
    nu1: float
    nu2: float
    log_term: float | None = None
    xi: float = 1.0
    mu: float | None = None
    iab: float | None = None
    holevo: float | None = None


class ThresholdResponse(StrictModel):
    """Mirror of rates.ThresholdResult."""

    status: str
    tau_star: float | None = None
    distance_km: float | None = None
    searched_floor_km: float


class SweepRowModel(StrictModel):
    """Mirror of rates.SweepPoint."""

    d_km: float
    status: str
    note: str = ""
    report: RateReportModel | None = None


class SweepResponse(StrictModel):
    epsilon: float
    xi: float
    mu: float | None = None
    loss_rate_db_per_km: float
    rows: list[SweepRowModel]


class VerifyCheckModel(StrictModel):
    """One row of the closed-form versus oracle residual table."""

    check: str
    tau: float | None = None
    epsilon: float | None = None
    reference: float
    value: float
    residual: float
    tolerance: float
    passed: bool


class VerifyResponse(StrictModel):
    checks: list[VerifyCheckModel]
    passed: bool


class EstimationResultModel(StrictModel):
    """Mirror of montecarlo.EstimationResult."""

    tau_hat: float
    tau_se: float
    epsilon_hat: float
    epsilon_se: float
    iab_hat: float
    iab_se: float
    n_rounds: int
    n_subbatches: int


class EmulateResponse(StrictModel):
    estimate: EstimationResultModel
    rate_at_estimate: RateReportModel | None = None
    note: str = ""
