"""Sampled prepare-and-measure emulation of the relay protocol.

Each round draws coherent amplitudes alpha (Alice) and beta (Bob) with
per-quadrature modulation variance (mu - 1)/4 in amplitude units, sends
Bob's mode through the thermal-loss channel, interferes the two modes on
the relay's balanced beam splitter, and measures q on the difference port
and p on the sum port through a detector of efficiency eta. The broadcast
variable is gamma = (q_minus + i p_plus) / sqrt(2); after trusted-loss
re-scaling it estimates alpha - sqrt(tau) beta* with Gaussian noise.

Randomness is counter-based: round r owns Philox counter blocks
[3r, 3r + 3), i.e. twelve 64-bit words, so any slice of rounds can be
regenerated independently and results never depend on how generation or
reduction is sharded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import IO, Iterator

import numpy as np
from scipy.special import ndtri

from .channel import ChannelParams
from .errors import DomainError, EstimationError, ValidationError
from .gaussian import gaussian_mutual_information

NORMALS_PER_ROUND = 12
BLOCKS_PER_ROUND = 3  # Philox emits four 64-bit words per counter block
MIN_ESTIMATION_ROUNDS = 1000
SUBBATCHES = 10

CSV_HEADER = "round,alpha_re,alpha_im,beta_re,beta_im,gamma_re,gamma_im"

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class BatchConfig:
    """Inputs that fully determine a simulated batch."""

    mu: float
    params: ChannelParams
    eta: float = 1.0
    n: int = 10000
    seed: int = 0

    def __post_init__(self) -> None:
        if not math.isfinite(float(self.mu)) or float(self.mu) < 1.0:
            raise DomainError(f"modulation variance mu must be >= 1, got {self.mu}")
        if not (0.0 < float(self.eta) <= 1.0):
            raise DomainError(f"detector efficiency eta must lie in (0, 1], got {self.eta}")
        if int(self.n) < 1:
            raise DomainError(f"round count n must be positive, got {self.n}")
        if int(self.seed) < 0:
            raise DomainError(f"seed must be a non-negative integer, got {self.seed}")
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "eta", float(self.eta))
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class Round:
    """One protocol round: the prepared amplitudes and the relay broadcast."""

    index: int
    alpha: complex
    beta: complex
    gamma_raw: complex
    gamma: complex


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """Column-oriented batch of rounds plus the config that produced it.

    gamma_raw holds the detector output as measured; gamma holds the
    working copy that rescale_detection divides by sqrt(eta). rescaled
    records whether that happened.
    """

    config: BatchConfig
    alpha: np.ndarray
    beta: np.ndarray
    gamma_raw: np.ndarray
    gamma: np.ndarray
    rescaled: bool = False

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "gamma_raw", "gamma"):
            arr = np.asarray(getattr(self, name), dtype=complex)
            if arr.shape != (self.config.n,):
                raise ValidationError(f"{name} must have shape ({self.config.n},)")
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return self.config.n

    def rounds(self) -> Iterator[Round]:
        for i in range(self.config.n):
            yield Round(
                index=i,
                alpha=complex(self.alpha[i]),
                beta=complex(self.beta[i]),
                gamma_raw=complex(self.gamma_raw[i]),
                gamma=complex(self.gamma[i]),
            )


def round_normals(seed: int, first_round: int, n_rounds: int) -> np.ndarray:
    """Standard normals for rounds [first_round, first_round + n_rounds).

    Returns an (n_rounds, 12) array. Uniforms come from the top 53 bits of
    each Philox word, offset half a step off the lattice edges, and are
    mapped through the normal inverse CDF; the counter is positioned at the
    first round's block, which makes sharded and whole-batch generation
    bitwise identical.
    """
    if first_round < 0 or n_rounds < 0:
        raise ValidationError("round range must be non-negative")
    bitgen = np.random.Philox(key=int(seed))
    bitgen.advance(BLOCKS_PER_ROUND * int(first_round))  # advance counts blocks
    raw = bitgen.random_raw(NORMALS_PER_ROUND * int(n_rounds))
    u = ((raw >> np.uint64(11)) + 0.5) * 2.0**-53
    return ndtri(u).reshape(int(n_rounds), NORMALS_PER_ROUND)


def simulate_batch(config: BatchConfig) -> SampleBatch:
    """Sample n rounds of the protocol; bitwise deterministic in the seed.

    Per-round normal layout: modulation (4), coherent-state vacua at the
    sources (4), channel ancilla (2), detector vacuum (2).
    """
    z = round_normals(config.seed, 0, config.n)
    p = config.params
    sd = math.sqrt((config.mu - 1.0) / 4.0)
    alpha = sd * (z[:, 0] + 1j * z[:, 1])
    beta = sd * (z[:, 2] + 1j * z[:, 3])

    q_a = 2.0 * alpha.real + z[:, 4]
    p_a = 2.0 * alpha.imag + z[:, 5]
    st, sr = math.sqrt(p.tau), math.sqrt((1.0 - p.tau) * p.omega)
    q_b = st * (2.0 * beta.real + z[:, 6]) + sr * z[:, 8]
    p_b = st * (2.0 * beta.imag + z[:, 7]) + sr * z[:, 9]

    q_minus = (q_a - q_b) / _SQRT2
    p_plus = (p_a + p_b) / _SQRT2
    se, sv = math.sqrt(config.eta), math.sqrt(1.0 - config.eta)
    q_det = se * q_minus + sv * z[:, 10]
    p_det = se * p_plus + sv * z[:, 11]
    gamma_raw = (q_det + 1j * p_det) / _SQRT2

    return SampleBatch(
        config=config,
        alpha=alpha,
        beta=beta,
        gamma_raw=gamma_raw,
        gamma=gamma_raw,
        rescaled=False,
    )


def rescale_detection(batch: SampleBatch) -> SampleBatch:
    """Refer the detector output back to the relay: gamma = gamma_raw / sqrt(eta).

    Detector loss is trusted, so dividing out sqrt(eta) restores the relay
    scale and turns the efficiency into extra (known) Gaussian noise. At
    eta = 1 the data are unchanged.
    """
    eta = batch.config.eta
    if eta <= 0.0:
        raise DomainError(f"detector efficiency must be positive, got {eta}")
    return replace(batch, gamma=batch.gamma_raw / math.sqrt(eta), rescaled=True)


def _require_estimable(batch: SampleBatch, what: str) -> None:
    if batch.config.n < MIN_ESTIMATION_ROUNDS:
        raise EstimationError(
            f"{what} needs at least {MIN_ESTIMATION_ROUNDS} rounds, got {batch.config.n}"
        )
    if batch.config.eta < 1.0 and not batch.rescaled:
        raise EstimationError(
            f"{what} assumes trusted-loss re-scaled data: run rescale_detection first"
        )


@dataclass(frozen=True)
class EstimationResult:
    """Channel estimates with standard errors from disjoint sub-batches."""

    tau_hat: float
    tau_se: float
    epsilon_hat: float
    epsilon_se: float
    iab_hat: float
    iab_se: float
    n_rounds: int
    n_subbatches: int

    def __post_init__(self) -> None:
        if min(self.tau_se, self.epsilon_se, self.iab_se) <= 0.0:
            raise ValidationError("standard errors must be positive")
        if self.n_subbatches < SUBBATCHES:
            raise ValidationError(f"need at least {SUBBATCHES} sub-batches")


def _tau_epsilon_on(alpha, beta, gamma, eta):
    """Point estimates of (tau, epsilon) on one slice of rounds.

    gamma estimates alpha - sqrt(tau) beta*, so stacking the real and
    imaginary parts gives a one-parameter regression for sqrt(tau). The
    residual variance is then stripped of the vacuum floor and the trusted
    detector penalty (1 - eta)/(2 eta), leaving the channel's excess noise
    referred through the loss bookkeeping chi = chi_loss + epsilon.
    """
    u = np.concatenate([(alpha - gamma).real, (alpha - gamma).imag])
    v = np.concatenate([beta.real, -beta.imag])
    denom = float(v @ v)
    if denom <= 0.0:
        raise EstimationError("estimation impossible: no modulation on Bob's side")
    s_hat = float(u @ v) / denom
    tau_hat = s_hat * s_hat
    if tau_hat <= 0.0:
        raise EstimationError("estimated transmissivity is not positive")
    resid = u - s_hat * v
    var_r = float(resid @ resid) / resid.size
    trusted = (1.0 - eta) / (2.0 * eta)
    epsilon_hat = (1.0 + tau_hat) / tau_hat * (4.0 * (var_r - trusted) - 2.0)
    return tau_hat, epsilon_hat


def _conditional_mi_on(alpha, beta, gamma) -> float:
    """Plug-in Gaussian MI of (alpha; beta) conditioned on the broadcast."""
    if not (np.abs(alpha).max() > 0.0 and np.abs(beta).max() > 0.0):
        return 0.0
    z = np.column_stack([alpha.real, alpha.imag, beta.real, beta.imag])
    g = np.column_stack([gamma.real, gamma.imag])
    z = z - z.mean(axis=0)
    g = g - g.mean(axis=0)
    coeff, *_ = np.linalg.lstsq(g, z, rcond=None)
    resid = z - g @ coeff
    cov = resid.T @ resid / (resid.shape[0] - 1)
    return gaussian_mutual_information(cov, (0, 1))


def estimate_channel(batch: SampleBatch) -> EstimationResult:
    """Estimate (tau, epsilon, I_AB) from a batch, with standard errors.

    Point estimates use the full sample; standard errors come from the
    spread of the same estimators over SUBBATCHES disjoint consecutive
    sub-batches. A batch without modulation (mu = 1) carries no channel
    information and is rejected.
    """
    _require_estimable(batch, "channel estimation")
    if batch.config.mu == 1.0:
        raise EstimationError("estimation impossible at mu = 1: no modulation")

    eta = batch.config.eta
    tau_hat, epsilon_hat = _tau_epsilon_on(batch.alpha, batch.beta, batch.gamma, eta)
    iab_hat = _conditional_mi_on(batch.alpha, batch.beta, batch.gamma)

    cuts = np.array_split(np.arange(batch.config.n), SUBBATCHES)
    taus, epss, mis = [], [], []
    for idx in cuts:
        t, e = _tau_epsilon_on(batch.alpha[idx], batch.beta[idx], batch.gamma[idx], eta)
        taus.append(t)
        epss.append(e)
        mis.append(_conditional_mi_on(batch.alpha[idx], batch.beta[idx], batch.gamma[idx]))

    def se(vals) -> float:
        return float(np.std(vals, ddof=1) / math.sqrt(len(vals)))

    return EstimationResult(
        tau_hat=tau_hat,
        tau_se=se(taus),
        epsilon_hat=epsilon_hat,
        epsilon_se=se(epss),
        iab_hat=iab_hat,
        iab_se=se(mis),
        n_rounds=batch.config.n,
        n_subbatches=SUBBATCHES,
    )


def empirical_iab(batch: SampleBatch) -> float:
    """Mutual information of the modulated amplitudes given the broadcast.

    Conditioning on gamma reproduces, in the large-sample limit, exactly
    the heterodyne mutual information of the entanglement-based picture.
    The estimate is symmetric under exchanging the two parties. A batch
    with literally zero modulation on either side returns 0; any other
    singular sample covariance is an error.
    """
    _require_estimable(batch, "mutual-information estimation")
    return _conditional_mi_on(batch.alpha, batch.beta, batch.gamma)


def write_batch_csv(batch: SampleBatch, destination) -> None:
    """Write rounds as CSV with 17 significant digits (lossless round-trip)."""
    if isinstance(destination, (str, Path)):
        with open(destination, "w", encoding="utf-8") as stream:
            _write_rows(batch, stream)
    else:
        _write_rows(batch, destination)


def _write_rows(batch: SampleBatch, stream: IO[str]) -> None:
    stream.write(CSV_HEADER + "\n")
    for r in batch.rounds():
        fields = (
            r.alpha.real, r.alpha.imag,
            r.beta.real, r.beta.imag,
            r.gamma.real, r.gamma.imag,
        )
        stream.write(str(r.index) + "," + ",".join(f"{x:.17g}" for x in fields) + "\n")
