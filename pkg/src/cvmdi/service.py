"""Orchestration shared by the HTTP endpoints and the command line.

Every entry point takes a request model and returns a response model;
rejected inputs raise errors.ValidationError subclasses, which the API
maps to 422 and the CLI to a nonzero exit code.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from . import montecarlo, oracle, rates
from .channel import ChannelParams, FiberModel, tau_from_distance
from .errors import ValidationError
from .schemas import (
    EmulateRequest,
    EmulateResponse,
    EstimationResultModel,
    RateReportModel,
    RateRequest,
    SweepRequest,
    SweepResponse,
    SweepRowModel,
    ThresholdRequest,
    ThresholdResponse,
    VerifyCheckModel,
    VerifyRequest,
    VerifyResponse,
)

# Frozen references for the verification table. The spot values were frozen
# from an independent high-precision evaluation of the closed forms; the
# oracle rows are bounded by the closed-form agreement tolerance.
IDENTITY_GRID_TOL = 1e-12
ORACLE_AGREEMENT_TOL = 1e-3
CALIBRATION_CLOSURE_TOL = 1e-8
SPOT_VALUE_TOL = 1e-9
PURE_LOSS_34DB_RATE = 0.00028724986036579634
PURE_LOSS_TAU_HALF_RATE = 0.55730495911103659
ORACLE_MU = 1.0e6


def _resolve_tau(tau: float | None, distance_km: float | None, fiber: FiberModel) -> float:
    if (tau is None) == (distance_km is None):
        raise ValidationError("provide exactly one of tau and distance_km")
    if tau is not None:
        return float(tau)
    return tau_from_distance(distance_km, fiber)


def _report_model(report: rates.RateReport) -> RateReportModel:
    return RateReportModel(**dataclasses.asdict(report))


def compute_rate(request: RateRequest) -> RateReportModel:
    """Key rate for one link: closed form at xi = 1, oracle otherwise."""
    fiber = FiberModel(request.loss_rate_db_per_km)
    tau = _resolve_tau(request.tau, request.distance_km, fiber)
    if request.xi == 1.0 and request.mu is None:
        return _report_model(rates.rate_asymptotic(tau, request.epsilon, fiber))
    params = ChannelParams.from_epsilon(tau, request.epsilon)
    if request.mu is None:
        _, report = oracle.optimize_modulation(params, request.xi, fiber)
    else:
        report = oracle.numeric_rate(request.mu, params, request.xi, fiber)
    return _report_model(report)


def find_threshold(request: ThresholdRequest) -> ThresholdResponse:
    fiber = FiberModel(request.loss_rate_db_per_km)
    result = rates.security_threshold(request.epsilon, request.xi, request.mu, fiber)
    return ThresholdResponse(
        status=result.status,
        tau_star=result.tau_star,
        distance_km=result.distance_km,
        searched_floor_km=result.searched_floor_km,
    )


def run_sweep(request: SweepRequest) -> SweepResponse:
    fiber = FiberModel(request.loss_rate_db_per_km)
    if request.step <= 0.0:
        raise ValidationError(f"step must be positive, got {request.step}")
    if request.d_max < request.d_min:
        raise ValidationError("d_max must not be below d_min")
    count = int(np.floor((request.d_max - request.d_min) / request.step + 1e-9)) + 1
    grid = request.d_min + request.step * np.arange(count)
    points = rates.sweep(grid, request.epsilon, request.xi, request.mu, fiber)
    rows = [
        SweepRowModel(
            d_km=p.d_km,
            status=p.status,
            note=p.note,
            report=None if p.report is None else _report_model(p.report),
        )
        for p in points
    ]
    return SweepResponse(
        epsilon=request.epsilon,
        xi=request.xi,
        mu=request.mu,
        loss_rate_db_per_km=request.loss_rate_db_per_km,
        rows=rows,
    )


def run_verify(request: VerifyRequest) -> VerifyResponse:
    """Cross-route residual table: the package checking itself.

    Rows cover the pure-loss identity on a fine grid, frozen spot values,
    closed form versus oracle at large modulation, and closure of the
    omega <-> epsilon calibration loop.
    """
    del request  # no knobs
    checks = []

    taus = np.logspace(-4.0, np.log10(0.99), 1000)
    residual = max(
        abs(rates.rate_asymptotic(t, 0.0).rate - rates.rate_pure_loss(t).rate) for t in taus
    )
    checks.append(
        VerifyCheckModel(
            check="identity: asymptotic rate at epsilon = 0 equals pure-loss rate "
            "(max over 1000-point log grid)",
            reference=0.0,
            value=residual,
            residual=residual,
            tolerance=IDENTITY_GRID_TOL,
            passed=residual <= IDENTITY_GRID_TOL,
        )
    )

    for tau, reference in ((0.5, PURE_LOSS_TAU_HALF_RATE), (10.0**-3.4, PURE_LOSS_34DB_RATE)):
        value = rates.rate_pure_loss(tau).rate
        checks.append(
            VerifyCheckModel(
                check="frozen spot value: pure-loss rate",
                tau=tau,
                epsilon=0.0,
                reference=reference,
                value=value,
                residual=abs(value - reference),
                tolerance=SPOT_VALUE_TOL,
                passed=abs(value - reference) <= SPOT_VALUE_TOL,
            )
        )

    for tau in (0.9, 0.5, 0.1):
        for epsilon in (0.0, 0.02, 0.05):
            closed = rates.rate_asymptotic(tau, epsilon).rate
            params = ChannelParams.from_epsilon(tau, epsilon)
            numeric = oracle.numeric_rate(ORACLE_MU, params).rate
            residual = abs(numeric - closed)
            checks.append(
                VerifyCheckModel(
                    check=f"oracle at mu = {ORACLE_MU:.0e} agrees with closed form",
                    tau=tau,
                    epsilon=epsilon,
                    reference=closed,
                    value=numeric,
                    residual=residual,
                    tolerance=ORACLE_AGREEMENT_TOL,
                    passed=residual <= ORACLE_AGREEMENT_TOL,
                )
            )

    from .channel import epsilon_from_omega, omega_from_epsilon

    target = 0.05
    omega = omega_from_epsilon(0.3, target)
    back = epsilon_from_omega(0.3, omega)
    checks.append(
        VerifyCheckModel(
            check="calibration loop closure: epsilon -> omega -> epsilon",
            tau=0.3,
            epsilon=target,
            reference=target,
            value=back,
            residual=abs(back - target),
            tolerance=CALIBRATION_CLOSURE_TOL,
            passed=abs(back - target) <= CALIBRATION_CLOSURE_TOL,
        )
    )

    return VerifyResponse(checks=checks, passed=all(c.passed for c in checks))


def run_emulate(request: EmulateRequest) -> EmulateResponse:
    """Simulate, re-scale, estimate, then price the estimated channel."""
    fiber = FiberModel(request.loss_rate_db_per_km)
    tau = _resolve_tau(request.tau, request.distance_km, fiber)
    params = ChannelParams.from_epsilon(tau, request.epsilon)
    config = montecarlo.BatchConfig(
        mu=request.mu, params=params, eta=request.eta, n=request.n, seed=request.seed
    )
    batch = montecarlo.rescale_detection(montecarlo.simulate_batch(config))
    estimate = montecarlo.estimate_channel(batch)

    notes = []
    eps_hat = estimate.epsilon_hat
    if eps_hat < 0.0:
        notes.append(f"estimated epsilon {eps_hat:.3e} clipped at 0 for the rate")
        eps_hat = 0.0
    tau_hat = estimate.tau_hat
    if tau_hat >= 1.0:
        notes.append(f"estimated tau {tau_hat:.6f} clipped below 1 for the rate")
        tau_hat = 1.0 - 1e-9

    rate_model = None
    try:
        rate_model = compute_rate(
            RateRequest(
                tau=tau_hat,
                epsilon=eps_hat,
                xi=request.xi,
                mu=request.mu if request.xi < 1.0 else None,
                loss_rate_db_per_km=request.loss_rate_db_per_km,
            )
        )
    except ValidationError as exc:
        notes.append(f"no rate at the estimated parameters: {exc}")

    return EmulateResponse(
        estimate=EstimationResultModel(**dataclasses.asdict(estimate)),
        rate_at_estimate=rate_model,
        note="; ".join(notes),
    )
