"""Closed-form key rates, security thresholds, and distance sweeps.

The asymptotic (mu -> infinity) rate of the relay protocol over a one-arm
link of transmissivity tau with equivalent noise chi = 2 (1 + tau) / tau
+ epsilon is

    R = h(nu1) - h(nu2) + log_term,
    nu1 = chi / (1 + tau) - 1,
    nu2 = (tau chi - (1 + tau)^2) / (1 - tau^2),
    log_term = log2( 2 (1 + tau) / (e (1 - tau) chi) ),

with h the thermal entropy from `gaussian`. The expressions below are
algebraically identical rearrangements that stay exact at epsilon = 0 and
for tau near 0 or 1, where the literal forms cancel. Reconciliation
efficiency xi < 1 scales only the mutual information, never the Holevo
term, so the xi < 1 path defers to the finite-modulation oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .channel import (
    ChannelParams,
    DEFAULT_FIBER,
    FiberModel,
    TAU_FLOOR,
    chi_loss,
    chi_total,
    distance_from_tau,
    tau_from_distance,
)
from .errors import DomainError, InvalidRegimeError, ValidationError
from .gaussian import LN2, h_entropy

LOG2E = 1.0 / LN2

# Residual allowed between a reported rate and its h/log decomposition.
REPORT_IDENTITY_TOL = 1e-12
# Threshold bisection: transmissivity bracket width at which to stop.
THRESHOLD_TAU_TOL = 1e-10
THRESHOLD_MAX_ITER = 200


def report_distance_km(tau: float, fiber: FiberModel = DEFAULT_FIBER) -> float:
    """Fiber length for a report field; tolerates tau below the search floor."""
    t = float(tau)
    if not (0.0 < t <= 1.0):
        raise DomainError(f"tau must lie in (0, 1], got {t}")
    return -10.0 * math.log10(t) / fiber.loss_rate_db_per_km


@dataclass(frozen=True)
class RateReport:
    """A key rate together with the pieces it decomposes into.

    Closed-form reports carry log_term and satisfy
    rate = h(nu1) - h(nu2) + log_term to REPORT_IDENTITY_TOL. Oracle
    reports carry the conditional-state spectrum in nu1, nu2 and leave
    log_term unset, reporting iab, holevo, and mu instead. chi always
    equals chi_loss + epsilon.
    """

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

    def __post_init__(self) -> None:
        if self.nu1 < 1.0 or self.nu2 < 1.0:
            raise InvalidRegimeError(
                f"report requires nu1, nu2 >= 1, got {self.nu1}, {self.nu2}"
            )
        if abs(self.chi - (self.chi_loss + self.epsilon)) > REPORT_IDENTITY_TOL * self.chi:
            raise InvalidRegimeError("chi must equal chi_loss + epsilon")
        if self.log_term is not None:
            recomposed = h_entropy(self.nu1) - h_entropy(self.nu2) + self.log_term
            if abs(self.rate - recomposed) > REPORT_IDENTITY_TOL * max(1.0, abs(self.rate)):
                raise InvalidRegimeError("rate does not match its decomposition")


def _validate_open_tau(tau: float) -> float:
    t = float(tau)
    if not (0.0 < t < 1.0):
        raise DomainError(f"tau must lie in the open interval (0, 1), got {t}")
    return t


def _validate_epsilon(epsilon: float) -> float:
    e = float(epsilon)
    if not math.isfinite(e) or e < 0.0:
        raise DomainError(f"epsilon must be non-negative, got {e}")
    return e


def rate_pure_loss(tau: float, fiber: FiberModel = DEFAULT_FIBER) -> RateReport:
    """Asymptotic rate over a pure-loss link (epsilon = 0).

    R = h((2 - tau)/tau) + log2(tau / ((1 - tau) e)); strictly positive and
    increasing on (0, 1), approaching tau / (2 ln 2) as tau -> 0. log1p
    keeps the tau -> 1 endpoint and the small-tau tail exact.
    """
    t = _validate_open_tau(tau)
    nu1 = (2.0 - t) / t
    log_term = (math.log(t) - math.log1p(-t)) / LN2 - LOG2E
    return RateReport(
        rate=h_entropy(nu1) + log_term,
        tau=t,
        epsilon=0.0,
        chi=chi_loss(t),
        chi_loss=chi_loss(t),
        distance_km=report_distance_km(t, fiber),
        nu1=nu1,
        nu2=1.0,
        log_term=log_term,
    )


def rate_asymptotic(
    tau: float, epsilon: float, fiber: FiberModel = DEFAULT_FIBER
) -> RateReport:
    """Asymptotic rate with excess noise epsilon on top of the loss floor.

    Uses nu1 = (2 - tau)/tau + epsilon/(1 + tau) and
    nu2 = 1 + tau epsilon / ((1 - tau)(1 + tau)), which equal the literal
    chi expressions but collapse to the pure-loss values exactly at
    epsilon = 0. Raises InvalidRegimeError if either argument leaves the
    h domain (cannot happen for epsilon >= 0; kept as a guard).
    """
    t = _validate_open_tau(tau)
    e = _validate_epsilon(epsilon)
    chi = chi_total(t, e)
    nu1 = (2.0 - t) / t + e / (1.0 + t)
    nu2 = 1.0 + t * e / ((1.0 - t) * (1.0 + t))
    if nu1 < 1.0 or nu2 < 1.0:
        raise InvalidRegimeError(
            f"rate formula invalid at tau = {t}, epsilon = {e}: entropy argument below 1"
        )
    log_term = (math.log(2.0 * (1.0 + t)) - math.log1p(-t) - math.log(chi)) / LN2 - LOG2E
    return RateReport(
        rate=h_entropy(nu1) - h_entropy(nu2) + log_term,
        tau=t,
        epsilon=e,
        chi=chi,
        chi_loss=chi_loss(t),
        distance_km=report_distance_km(t, fiber),
        nu1=nu1,
        nu2=nu2,
        log_term=log_term,
    )


@dataclass(frozen=True)
class ThresholdResult:
    """Outcome of the security-threshold search.

    status is "bounded" (tau_star and distance_km set), "unbounded" (the
    rate stays positive all the way down to the supported transmissivity
    floor), or "insecure" (no positive rate anywhere in the bracket).
    searched_floor_km records the distance equivalent of the floor.
    """

    status: str
    tau_star: float | None
    distance_km: float | None
    searched_floor_km: float

    def __post_init__(self) -> None:
        if self.status not in ("bounded", "unbounded", "insecure"):
            raise DomainError(f"unknown threshold status {self.status!r}")


def _rate_value(
    tau: float,
    epsilon: float,
    xi: float,
    mu: float | None,
    fiber: FiberModel,
) -> float:
    """Rate at one transmissivity: closed form at xi = 1, oracle below."""
    if xi == 1.0 and mu is None:
        return rate_asymptotic(tau, epsilon, fiber).rate
    from . import oracle

    params = ChannelParams.from_epsilon(tau, epsilon)
    if mu is None:
        return oracle.optimize_modulation(params, xi, fiber)[1].rate
    return oracle.numeric_rate(mu, params, xi, fiber).rate


def security_threshold(
    epsilon: float,
    xi: float = 1.0,
    mu: float | None = None,
    fiber: FiberModel = DEFAULT_FIBER,
) -> ThresholdResult:
    """Largest loss at which the rate stays positive, as (tau*, distance).

    Bisection over tau in [TAU_FLOOR, 1 - TAU_FLOOR]. With xi = 1 and mu
    unset the asymptotic closed form is used; otherwise the rate comes from
    the finite-mu oracle (mu fixed if given, else optimized per point). On
    the oracle path the floor rises to the smallest tau whose epsilon
    calibration is numerically resolvable; searched_floor_km reports the
    floor actually used.
    """
    e = _validate_epsilon(epsilon)
    lo, hi = TAU_FLOOR, 1.0 - TAU_FLOOR

    def rate_at(tau: float) -> float:
        return _rate_value(tau, e, xi, mu, fiber)

    while True:
        try:
            floor_rate = rate_at(lo)
            break
        except InvalidRegimeError:
            # The oracle path cannot calibrate epsilon this deep into the
            # loss; search from the nearest feasible floor and say so.
            lo *= 10.0
            if lo >= hi:
                raise
    floor_km = distance_from_tau(lo, fiber)

    if floor_rate > 0.0:
        return ThresholdResult("unbounded", None, None, floor_km)
    if rate_at(hi) <= 0.0:
        return ThresholdResult("insecure", None, None, floor_km)
    for _ in range(THRESHOLD_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if rate_at(mid) > 0.0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= THRESHOLD_TAU_TOL:
            break
    tau_star = 0.5 * (lo + hi)
    return ThresholdResult("bounded", tau_star, distance_from_tau(tau_star, fiber), floor_km)


@dataclass(frozen=True)
class SweepPoint:
    """One row of a distance sweep.

    status is "ok" (report set), "diverging" (the tau = 1 zero-distance
    boundary, where the asymptotic rate grows without bound), or "invalid"
    (outside the supported domain; note says why). Failures of single
    points never abort the sweep.
    """

    d_km: float
    status: str
    report: RateReport | None
    note: str = ""


def sweep(
    distances_km: Sequence[float],
    epsilon: float,
    xi: float = 1.0,
    mu: float | None = None,
    fiber: FiberModel = DEFAULT_FIBER,
) -> list:
    """Rate at each fiber length, longest-surviving diagnostics included."""
    e = _validate_epsilon(epsilon)
    points = []
    for d in distances_km:
        d = float(d)
        if d < 0.0:
            points.append(SweepPoint(d, "invalid", None, "negative distance"))
            continue
        if d == 0.0:
            points.append(
                SweepPoint(d, "diverging", None, "tau = 1 boundary: asymptotic rate unbounded")
            )
            continue
        try:
            tau = tau_from_distance(d, fiber)
        except DomainError as exc:
            points.append(SweepPoint(d, "invalid", None, str(exc)))
            continue
        try:
            if xi == 1.0 and mu is None:
                report = rate_asymptotic(tau, e, fiber)
            else:
                from . import oracle

                params = ChannelParams.from_epsilon(tau, e)
                if mu is None:
                    report = oracle.optimize_modulation(params, xi, fiber)[1]
                else:
                    report = oracle.numeric_rate(mu, params, xi, fiber)
        except ValidationError as exc:
            points.append(SweepPoint(d, "invalid", None, str(exc)))
            continue
        points.append(SweepPoint(d, "ok", report))
    return points
