"""Bob's link: thermal-loss channel, fiber conversions, noise bookkeeping.

Only the arm between Bob and the relay is attacked; Alice's arm is lossless
and the relay is ideal. The channel is a beam splitter of transmissivity tau
mixing the signal with a thermal mode of variance omega >= 1 (omega = 1 is
pure loss). Excess noise epsilon is the equivalent channel noise referred to
the asymptotic rate formula: the epsilon <-> omega mapping is defined
operationally by the calibration measurement in `oracle`, not by a hardcoded
formula, so the two routes stay independent and can check each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, InvalidRegimeError, ValidationError
from .gaussian import CovarianceMatrix, MeanVector

# Transmissivities below this floor are outside the supported search range.
TAU_FLOOR = 1e-8
# Calibration inversion: bisection until the measured-epsilon residual is here.
CALIBRATION_RESIDUAL_TOL = 1e-10
CALIBRATION_MAX_ITER = 200
# No physical omega beyond this is representable in the sweep domain.
OMEGA_CEILING = 1e12

DEFAULT_LOSS_DB_PER_KM = 0.2


@dataclass(frozen=True)
class FiberModel:
    """Exponential fiber loss at a fixed rate in dB per km."""

    loss_rate_db_per_km: float = DEFAULT_LOSS_DB_PER_KM

    def __post_init__(self) -> None:
        r = float(self.loss_rate_db_per_km)
        if not math.isfinite(r) or r <= 0.0:
            raise DomainError(f"fiber loss rate must be positive, got {r}")
        object.__setattr__(self, "loss_rate_db_per_km", r)


DEFAULT_FIBER = FiberModel()


def tau_from_distance(distance_km: float, fiber: FiberModel = DEFAULT_FIBER) -> float:
    """Transmissivity of a fiber of the given length: 10^(-rate*d/10)."""
    d = float(distance_km)
    if not math.isfinite(d) or d < 0.0:
        raise DomainError(f"distance_km must be non-negative, got {d}")
    tau = 10.0 ** (-fiber.loss_rate_db_per_km * d / 10.0)
    if tau < TAU_FLOOR:
        raise DomainError(
            f"distance_km = {d} gives transmissivity {tau:.3e} below the "
            f"supported floor {TAU_FLOOR:.0e}"
        )
    return tau


def distance_from_tau(tau: float, fiber: FiberModel = DEFAULT_FIBER) -> float:
    """Fiber length realizing the given transmissivity; inverse of the above."""
    t = float(tau)
    if not (TAU_FLOOR <= t <= 1.0):
        raise DomainError(
            f"tau must lie in [{TAU_FLOOR:.0e}, 1] for a fiber length, got {t}"
        )
    return -10.0 * math.log10(t) / fiber.loss_rate_db_per_km


def chi_loss(tau: float) -> float:
    """Loss-equivalent noise 2 (1 + tau) / tau of the one-arm relay link."""
    t = float(tau)
    if not (0.0 < t <= 1.0):
        raise DomainError(f"tau must lie in (0, 1], got {t}")
    return 2.0 * (1.0 + t) / t


def chi_total(tau: float, epsilon: float) -> float:
    """Total equivalent noise chi = chi_loss + epsilon."""
    e = float(epsilon)
    if not math.isfinite(e) or e < 0.0:
        raise DomainError(f"epsilon must be non-negative, got {e}")
    return chi_loss(tau) + e


def _validate_tau_omega(tau: float, omega: float) -> tuple:
    t, w = float(tau), float(omega)
    if not (0.0 < t <= 1.0):
        raise DomainError(f"tau must lie in (0, 1], got {t}")
    if not math.isfinite(w) or w < 1.0:
        raise DomainError(f"omega must be >= 1, got {w}")
    return t, w


@lru_cache(maxsize=4096)
def omega_from_epsilon(tau: float, epsilon: float) -> float:
    """Ancilla variance omega that produces excess noise epsilon at this tau.

    Inverted numerically: bisection on omega until the calibration
    measurement (`oracle.calibrated_epsilon`) reproduces the requested
    epsilon to within CALIBRATION_RESIDUAL_TOL. epsilon = 0 maps to
    omega = 1 exactly. tau = 1 supports no ancilla admixture, so any
    epsilon > 0 there is unsatisfiable.
    """
    t = float(tau)
    e = float(epsilon)
    if not (0.0 < t <= 1.0):
        raise DomainError(f"tau must lie in (0, 1], got {t}")
    if not math.isfinite(e) or e < 0.0:
        raise DomainError(f"epsilon must be non-negative, got {e}")
    if e == 0.0:
        return 1.0
    if t == 1.0:
        raise DomainError("tau = 1 admits no excess noise: epsilon > 0 is unsatisfiable")

    from .oracle import calibrated_epsilon  # deferred: oracle sits above channel

    def residual(omega: float) -> float:
        return calibrated_epsilon(t, omega) - e

    lo, hi = 1.0, 2.0
    while residual(hi) < 0.0:
        lo, hi = hi, hi * 2.0
        if hi > OMEGA_CEILING:
            raise DomainError(
                f"epsilon = {e} at tau = {t} needs omega beyond {OMEGA_CEILING:.0e}"
            )
    best = hi
    for _ in range(CALIBRATION_MAX_ITER):
        mid = 0.5 * (lo + hi)
        r = residual(mid)
        best = mid
        if abs(r) <= CALIBRATION_RESIDUAL_TOL:
            return mid
        if r < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= np.finfo(float).eps * hi:
            break
    if abs(residual(best)) > 1e3 * CALIBRATION_RESIDUAL_TOL:
        # Deep-loss wall: epsilon sits below the float noise of the
        # chi_loss ~ 2/tau bookkeeping, so no omega reproduces it.
        raise InvalidRegimeError(
            f"calibration cannot resolve epsilon = {e} at tau = {t}: "
            "the requested excess noise is below the evaluation noise "
            "of the loss floor at this transmissivity"
        )
    return best


def epsilon_from_omega(tau: float, omega: float) -> float:
    """Excess noise produced by ancilla variance omega at this tau.

    Defined through the same calibration measurement used by
    omega_from_epsilon, so the pair of maps closes on itself. omega = 1 is
    pure loss and maps to epsilon = 0 exactly.
    """
    t, w = _validate_tau_omega(tau, omega)
    if w == 1.0:
        return 0.0
    if t == 1.0:
        raise DomainError("tau = 1 admits no ancilla admixture with omega > 1")

    from .oracle import calibrated_epsilon

    return calibrated_epsilon(t, w)


@dataclass(frozen=True)
class ChannelParams:
    """One-arm channel: transmissivity tau, ancilla variance omega, and the
    equivalent excess noise epsilon they produce.

    The three fields are kept mutually consistent: build instances through
    pure_loss, from_epsilon, or from_omega rather than guessing a triple.
    """

    tau: float
    omega: float
    epsilon: float

    def __post_init__(self) -> None:
        t, w = _validate_tau_omega(self.tau, self.omega)
        e = float(self.epsilon)
        if not math.isfinite(e) or e < 0.0:
            raise DomainError(f"epsilon must be non-negative, got {e}")
        if (w == 1.0) != (e == 0.0):
            raise ValidationError(
                "inconsistent channel: omega = 1 and epsilon = 0 must come together"
            )
        if t == 1.0 and w != 1.0:
            raise DomainError("tau = 1 admits no ancilla admixture")
        object.__setattr__(self, "tau", t)
        object.__setattr__(self, "omega", w)
        object.__setattr__(self, "epsilon", e)

    @classmethod
    def pure_loss(cls, tau: float) -> "ChannelParams":
        return cls(tau=tau, omega=1.0, epsilon=0.0)

    @classmethod
    def from_epsilon(cls, tau: float, epsilon: float) -> "ChannelParams":
        return cls(tau=tau, omega=omega_from_epsilon(tau, epsilon), epsilon=epsilon)

    @classmethod
    def from_omega(cls, tau: float, omega: float) -> "ChannelParams":
        return cls(tau=tau, omega=omega, epsilon=epsilon_from_omega(tau, omega))


def loss_block_update(
    cm: CovarianceMatrix,
    mean: MeanVector | None,
    mode: int,
    tau: float,
    omega: float,
):
    """Thermal-loss map on one mode, written directly on the blocks.

    V_mode -> tau V_mode + (1 - tau) omega I, cross blocks scale by
    sqrt(tau), the mode's mean scales by sqrt(tau). Equivalent to adjoining
    a thermal ancilla of variance omega, mixing on a beam splitter of
    transmissivity tau, and tracing the ancilla out.
    """
    t, w = _validate_tau_omega(tau, omega)
    if not (0 <= mode < cm.n_modes):
        raise ValidationError(f"mode index {mode} out of range for {cm.n_modes} modes")
    if mean is not None and mean.n_modes != cm.n_modes:
        raise ValidationError("mean vector and covariance matrix disagree on mode count")

    m = cm.entries.copy()
    rows = slice(2 * mode, 2 * mode + 2)
    st = math.sqrt(t)
    m[rows, :] *= st
    m[:, rows] *= st
    m[rows, rows] = t * cm.entries[rows, rows] + (1.0 - t) * w * np.eye(2)
    new_cm = CovarianceMatrix(m)
    if mean is None:
        return new_cm, None
    v = mean.entries.copy()
    v[rows] *= st
    return new_cm, MeanVector(v)


def thermal_loss_apply(
    cm: CovarianceMatrix,
    mean: MeanVector | None,
    mode: int,
    params: ChannelParams,
):
    """Apply the channel described by params to one mode of a state."""
    return loss_block_update(cm, mean, mode, params.tau, params.omega)
