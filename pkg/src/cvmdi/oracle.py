"""Entanglement-based oracle: the key rate derived from covariance matrices.

Independent route to the same quantities as the closed forms in `rates`.
Each party holds a two-mode squeezed vacuum of local variance mu and sends
one mode to the relay; Bob's travels through the thermal-loss channel. The
relay mixes the incoming modes on a balanced beam splitter and homodynes
q on the difference port and p on the sum port (a CV Bell measurement whose
outcome gamma is broadcast). Everything downstream conditions on gamma.

Eve purifies the channel ancilla, so her information is bounded by
S(ab | gamma) minus the entropy left after the relay-side party's heterodyne
of the retained mode a: chi_E = S(ab|gamma) - S(b | gamma, a outcome).
The mutual information uses the same conditional state with one unit of
vacuum added per heterodyne.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .channel import ChannelParams, DEFAULT_FIBER, FiberModel, chi_loss, chi_total, loss_block_update
from .errors import DomainError
from .gaussian import (
    CovarianceMatrix,
    PINV_CUTOFF,
    apply_beamsplitter,
    direct_sum,
    gaussian_mutual_information,
    heterodyne_condition,
    homodyne_condition,
    symplectic_eigenvalues,
    tmsv_cm,
    von_neumann_entropy,
)
from .rates import RateReport, report_distance_km

# Mode layout of the four-mode protocol state before the relay measurement.
MODE_ALICE_KEPT = 0
MODE_ALICE_SENT = 1
MODE_BOB_KEPT = 2
MODE_BOB_SENT = 3

# Modulation pair used to refer the channel to an equivalent noise: the
# product equivalent_noise(mu) * (mu - 1) is exactly affine in mu, so two
# moderate points extrapolate to mu -> infinity without large-mu roundoff.
CALIBRATION_MU_PAIR = (1.0e3, 1.0e4)

# Golden-section search bracket, in ln mu.
LOG_MU_RANGE = (0.0, 12.0)
LOG_MU_TOL = 1e-9
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class ProtocolState:
    """Relay-conditioned two-mode state of the retained modes (a, b).

    conditional_ab_cm orders Alice's retained mode first. audit maps stage
    names to the intermediate covariance matrices that produced it.
    """

    conditional_ab_cm: CovarianceMatrix
    mu: float
    params: ChannelParams
    audit: Mapping[str, CovarianceMatrix]


def _validate_mu(mu: float) -> float:
    m = float(mu)
    if not math.isfinite(m) or m < 1.0:
        raise DomainError(f"modulation variance mu must be >= 1, got {m}")
    return m


def _validate_xi(xi: float) -> float:
    x = float(xi)
    if not (0.0 < x <= 1.0):
        raise DomainError(f"reconciliation efficiency xi must lie in (0, 1], got {x}")
    return x


def _conditional_ab(mu: float, tau: float, omega: float):
    """Source -> channel -> relay pipeline on raw channel numbers."""
    source = direct_sum(tmsv_cm(mu), tmsv_cm(mu))
    after_channel, _ = loss_block_update(source, None, MODE_BOB_SENT, tau, omega)
    # Difference port lands on Alice's sent slot, sum port on Bob's.
    mixed, _ = apply_beamsplitter(after_channel, None, MODE_BOB_SENT, MODE_ALICE_SENT, 0.5)
    after_q = homodyne_condition(mixed, MODE_ALICE_SENT, "q")
    # Removing mode 1 shifts the sum port from slot 3 to slot 2.
    conditional = homodyne_condition(after_q, 2, "p")
    audit = {
        "source": source,
        "after_channel": after_channel,
        "after_relay_splitter": mixed,
        "after_difference_homodyne": after_q,
        "conditional_ab": conditional,
    }
    return conditional, audit


def build_protocol_state(mu: float, params: ChannelParams) -> ProtocolState:
    """Run the protocol pipeline and keep every intermediate CM for audit.

    The conditional CM does not depend on the Bell outcome itself, only on
    which quadratures were measured, so a single state stands for the whole
    outcome ensemble.
    """
    mu = _validate_mu(mu)
    conditional, audit = _conditional_ab(mu, params.tau, params.omega)
    return ProtocolState(
        conditional_ab_cm=conditional,
        mu=mu,
        params=params,
        audit=MappingProxyType(audit),
    )


def bell_condition(cm: CovarianceMatrix, mode_i: int, mode_j: int) -> CovarianceMatrix:
    """Condition directly on the commuting pair (q_i - q_j, p_i + p_j)/sqrt(2).

    One-step equivalent of the balanced beam splitter followed by the two
    homodynes; kept as an independent composite for cross-checking.
    """
    n = cm.n_modes
    if mode_i == mode_j or not (0 <= mode_i < n) or not (0 <= mode_j < n):
        raise DomainError("bell_condition needs two distinct in-range modes")
    rt = 1.0 / math.sqrt(2.0)
    sel = np.zeros((2, 2 * n))
    sel[0, 2 * mode_i] = rt
    sel[0, 2 * mode_j] = -rt
    sel[1, 2 * mode_i + 1] = rt
    sel[1, 2 * mode_j + 1] = rt
    keep = [c for m in range(n) if m not in (mode_i, mode_j) for c in (2 * m, 2 * m + 1)]
    measured = sel @ cm.entries @ sel.T
    cross = cm.entries[keep, :] @ sel.T
    inv = np.linalg.pinv(measured, rcond=PINV_CUTOFF, hermitian=True)
    return CovarianceMatrix(cm.entries[np.ix_(keep, keep)] - cross @ inv @ cross.T)


def numeric_iab(state: ProtocolState) -> float:
    """Mutual information of the two heterodyne outcomes, in bits per round.

    Heterodyning adds one unit of vacuum per quadrature, so the outcome
    statistics are Gaussian with covariance V_ab + I.
    """
    sigma = state.conditional_ab_cm.entries + np.eye(4)
    return gaussian_mutual_information(sigma, (0, 1))


def numeric_holevo(state: ProtocolState) -> float:
    """Holevo bound on Eve's information about the reconciled variable.

    Eve holds the purification of the conditional (a, b) state, so
    S(E|gamma) = S(ab|gamma), and after the relay-side heterodyne of mode a
    (whose outcome is the reconciliation variable) S(E|gamma, a) = S(b|...).
    """
    joint = von_neumann_entropy(state.conditional_ab_cm)
    remaining = von_neumann_entropy(heterodyne_condition(state.conditional_ab_cm, 0))
    return max(0.0, joint - remaining)


def numeric_rate(
    mu: float,
    params: ChannelParams,
    xi: float = 1.0,
    fiber: FiberModel = DEFAULT_FIBER,
) -> RateReport:
    """Key rate at finite modulation: xi * I_AB - chi_E, with diagnostics.

    nu1 and nu2 report the symplectic spectrum of the conditional (a, b)
    state; log_term is left unset because no closed-form split applies here.
    """
    mu = _validate_mu(mu)
    xi = _validate_xi(xi)
    state = build_protocol_state(mu, params)
    iab = numeric_iab(state)
    holevo = numeric_holevo(state)
    spectrum = symplectic_eigenvalues(state.conditional_ab_cm)
    return RateReport(
        rate=xi * iab - holevo,
        tau=params.tau,
        epsilon=params.epsilon,
        chi=chi_total(params.tau, params.epsilon),
        chi_loss=chi_loss(params.tau),
        distance_km=report_distance_km(params.tau, fiber),
        nu1=max(spectrum.eigenvalues[0], 1.0),
        nu2=max(spectrum.eigenvalues[1], 1.0),
        log_term=None,
        xi=xi,
        mu=mu,
        iab=iab,
        holevo=holevo,
    )


def equivalent_noise(mu: float, tau: float, omega: float) -> float:
    """Channel noise referred through the mutual information at modulation mu.

    chi_hat(mu) = (mu - 1) / (2**I_AB(mu) - 1). For this protocol
    chi_hat(mu) (mu - 1) is exactly affine in mu, which the calibration
    below exploits.
    """
    mu = _validate_mu(mu)
    if mu == 1.0:
        raise DomainError("equivalent noise is undefined without modulation (mu = 1)")
    conditional, _ = _conditional_ab(mu, tau, omega)
    iab = gaussian_mutual_information(conditional.entries + np.eye(4), (0, 1))
    return (mu - 1.0) / math.expm1(iab * math.log(2.0))


@lru_cache(maxsize=4096)
def calibrated_epsilon(tau: float, omega: float) -> float:
    """Excess noise of the (tau, omega) channel over pure loss at the same tau.

    Measured, not postulated: the equivalent noise is extrapolated to
    mu -> infinity from CALIBRATION_MU_PAIR using the affine identity above,
    and the pure-loss floor 2 (1 + tau) / tau is subtracted.
    """
    mu_lo, mu_hi = CALIBRATION_MU_PAIR
    g_lo = equivalent_noise(mu_lo, tau, omega) * (mu_lo - 1.0)
    g_hi = equivalent_noise(mu_hi, tau, omega) * (mu_hi - 1.0)
    chi_infinity = (g_hi - g_lo) / (mu_hi - mu_lo)
    return max(0.0, chi_infinity - chi_loss(tau))


def optimize_modulation(
    params: ChannelParams,
    xi: float,
    fiber: FiberModel = DEFAULT_FIBER,
):
    """Best finite modulation for the given channel and efficiency.

    Golden-section search on ln mu over LOG_MU_RANGE. At xi = 1 the rate is
    non-decreasing in mu, so no interior optimum exists and the upper edge
    of the bracket is reported. Ties on a flat objective resolve to the
    largest mu probed.
    """
    xi = _validate_xi(xi)

    def rate_at(log_mu: float) -> float:
        return numeric_rate(math.exp(log_mu), params, xi, fiber).rate

    lo, hi = LOG_MU_RANGE
    if xi == 1.0:
        mu_star = math.exp(hi)
        return mu_star, numeric_rate(mu_star, params, xi, fiber)

    probes = []
    x1 = hi - _INVPHI * (hi - lo)
    x2 = lo + _INVPHI * (hi - lo)
    f1, f2 = rate_at(x1), rate_at(x2)
    probes += [(f1, x1), (f2, x2)]
    while hi - lo > LOG_MU_TOL:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INVPHI * (hi - lo)
            f2 = rate_at(x2)
            probes.append((f2, x2))
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INVPHI * (hi - lo)
            f1 = rate_at(x1)
            probes.append((f1, x1))
    _, best_log_mu = max(probes)
    mu_star = math.exp(best_log_mu)
    return mu_star, numeric_rate(mu_star, params, xi, fiber)
