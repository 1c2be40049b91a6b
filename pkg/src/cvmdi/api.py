"""HTTP service exposing the rate, threshold, sweep, verify, and emulate
operations. The CLI is a thin client of these endpoints; everything they
return is also available in process through `service`.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from . import __version__, service
from .errors import ValidationError
from .schemas import (
    EmulateRequest,
    EmulateResponse,
    HealthResponse,
    RateReportModel,
    RateRequest,
    SweepRequest,
    SweepResponse,
    ThresholdRequest,
    ThresholdResponse,
    VerifyRequest,
    VerifyResponse,
)

app = FastAPI(
    title="cvmdi",
    description="Key rates for a continuous-variable relay protocol with an "
    "untrusted-channel arm: closed forms, a covariance-matrix oracle, and a "
    "sampled emulation.",
    version=__version__,
)


def _guarded(fn, request):
    try:
        return fn(request)
    except ValidationError as exc:
        raise HTTPException(status_code=422, detail=str(exc))


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(version=__version__)


@app.post("/rate", response_model=RateReportModel)
def rate(request: RateRequest) -> RateReportModel:
    return _guarded(service.compute_rate, request)


@app.post("/threshold", response_model=ThresholdResponse)
def threshold(request: ThresholdRequest) -> ThresholdResponse:
    return _guarded(service.find_threshold, request)


@app.post("/sweep", response_model=SweepResponse)
def sweep(request: SweepRequest) -> SweepResponse:
    return _guarded(service.run_sweep, request)


@app.post("/verify", response_model=VerifyResponse)
def verify(request: VerifyRequest) -> VerifyResponse:
    return _guarded(service.run_verify, request)


@app.post("/emulate", response_model=EmulateResponse)
def emulate(request: EmulateRequest) -> EmulateResponse:
    return _guarded(service.run_emulate, request)
