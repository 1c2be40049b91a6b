"""Gaussian-state algebra in shot-noise units.

Conventions, fixed once here and relied on everywhere else:

* the vacuum quadrature variance is 1 (shot-noise units);
* quadratures are ordered (q1, p1, q2, p2, ...);
* a coherent state of complex amplitude alpha has mean (2 Re alpha, 2 Im alpha);
* all entropies are in bits.

Under this normalization a heterodyne outcome adds exactly one unit of vacuum
noise per quadrature, and the relay variable gamma = (q_minus + i p_plus)/sqrt(2)
estimates alpha - beta* with unit-variance noise, which is what ties the
covariance algebra below to the sampled protocol in `montecarlo`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import CovarianceError, DegenerateCovarianceError, DomainError, ValidationError

LN2 = math.log(2.0)

# Relative symmetry tolerance for accepted covariance input.
SYMMETRY_RTOL = 1e-12
# Allowed dip of a symplectic eigenvalue below 1 before a state is rejected.
BONA_FIDE_TOL = 1e-9
# Roundoff in an assembled covariance perturbs its symplectic eigenvalues by
# up to ~ ||S||^2 * eps * ||V|| with S the Williamson basis and
# ||S||^2 <= cond(V)^(1/2); the bona fide check must absorb exactly that
# much, or strongly squeezed states get rejected for float noise.
EIG_NOISE_FACTOR = 8.0
# Pseudo-inverse cutoff for conditioning on measured quadratures, relative to
# the largest singular value of the measured block.
PINV_CUTOFF = 1e-12


def h_entropy(x: float) -> float:
    """Entropy, in bits, of a thermal state with quadrature variance x >= 1.

    h(x) = ((x+1)/2) log2((x+1)/2) - ((x-1)/2) log2((x-1)/2), with the
    0 log 0 = 0 convention at x = 1.

    Evaluated as (b log1p(1/b) + log1p(b)) / ln 2 with b = (x-1)/2, which is
    algebraically identical but keeps full precision both as x -> 1 and for
    large x, where the textbook difference of two large logs cancels badly.
    """
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"h_entropy argument must be finite, got {x}")
    if x < 1.0:
        raise DomainError(f"h_entropy argument must be >= 1, got {x}")
    if x == 1.0:
        return 0.0
    b = 0.5 * (x - 1.0)
    return (b * math.log1p(1.0 / b) + math.log1p(b)) / LN2


def symplectic_form(n_modes: int) -> np.ndarray:
    """The 2n x 2n symplectic form Omega in (q1, p1, ...) ordering."""
    if n_modes < 1:
        raise ValidationError("need at least one mode")
    omega = np.zeros((2 * n_modes, 2 * n_modes))
    for k in range(n_modes):
        omega[2 * k, 2 * k + 1] = 1.0
        omega[2 * k + 1, 2 * k] = -1.0
    return omega


def _cholesky_or_raise(matrix: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError:
        raise CovarianceError("covariance matrix is not positive definite")


def _values_from_cholesky(chol: np.ndarray) -> np.ndarray:
    """Symplectic spectrum from a Cholesky factor, descending.

    With V = L L^T, spec(Omega V) = spec(L^T Omega L) by the cyclic
    property, and L^T Omega L is antisymmetric, hence normal: its singular
    values list each symplectic eigenvalue twice and come out with absolute
    error on the order of eps * nu_max. The naive eigensolve of Omega V is
    non-normal and loses half the digits on the degenerate spectrum of pure
    states; closed-form 2x2 invariants cancel catastrophically for strongly
    squeezed states. Both are avoided here.
    """
    n = chol.shape[0] // 2
    conj = chol.T @ symplectic_form(n) @ chol
    pairs = np.linalg.svd(conj, compute_uv=False)
    return pairs[::2].copy()


def _symplectic_values(matrix: np.ndarray) -> np.ndarray:
    """Raw symplectic spectrum of a symmetric PD matrix, descending."""
    return _values_from_cholesky(_cholesky_or_raise(matrix))


def _bona_fide_slack(matrix: np.ndarray, chol: np.ndarray) -> float:
    """How far below 1 float noise alone can push a symplectic eigenvalue."""
    sing = np.linalg.svd(chol, compute_uv=False)
    sqrt_cond = float(sing[0] / sing[-1])  # cond(V)^(1/2) since V = L L^T
    scale = max(1.0, float(np.abs(matrix).max()))
    return BONA_FIDE_TOL + EIG_NOISE_FACTOR * np.finfo(float).eps * sqrt_cond * scale


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    """Validated quadrature covariance of an n-mode Gaussian state.

    Construction rejects matrices that are not symmetric, not positive
    definite, or that violate the uncertainty bound (some symplectic
    eigenvalue below 1 beyond tolerance). The stored array is symmetrized
    and read-only.
    """

    entries: np.ndarray

    def __post_init__(self) -> None:
        m = np.array(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise CovarianceError("covariance matrix must be square")
        if m.shape[0] == 0 or m.shape[0] % 2:
            raise CovarianceError("covariance matrix must be 2n x 2n with n >= 1")
        if not np.all(np.isfinite(m)):
            raise CovarianceError("covariance matrix must be finite")
        scale = max(1.0, float(np.abs(m).max()))
        if not np.allclose(m, m.T, rtol=0.0, atol=SYMMETRY_RTOL * scale):
            raise CovarianceError("covariance matrix is not symmetric")
        m = 0.5 * (m + m.T)
        chol = _cholesky_or_raise(m)  # also certifies m > 0
        nu_min = float(_values_from_cholesky(chol).min())
        if nu_min < 1.0 - _bona_fide_slack(m, chol):
            raise CovarianceError(
                f"uncertainty bound violated: smallest symplectic eigenvalue {nu_min!r}"
            )
        m.flags.writeable = False
        object.__setattr__(self, "entries", m)

    @property
    def n_modes(self) -> int:
        return self.entries.shape[0] // 2

    def mode_block(self, i: int, j: int) -> np.ndarray:
        """The 2x2 covariance block between modes i and j."""
        return self.entries[2 * i : 2 * i + 2, 2 * j : 2 * j + 2].copy()


@dataclass(frozen=True, eq=False)
class MeanVector:
    """Quadrature mean of an n-mode Gaussian state, ordered like the CM."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        v = np.array(self.entries, dtype=float)
        if v.ndim != 1 or v.size == 0 or v.size % 2:
            raise ValidationError("mean vector must have length 2n with n >= 1")
        if not np.all(np.isfinite(v)):
            raise ValidationError("mean vector must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "entries", v)

    @property
    def n_modes(self) -> int:
        return self.entries.size // 2

    @classmethod
    def zeros(cls, n_modes: int) -> "MeanVector":
        return cls(np.zeros(2 * n_modes))

    @classmethod
    def coherent(cls, amplitudes: Iterable[complex]) -> "MeanVector":
        """Mean of a product of coherent states, (2 Re a, 2 Im a) per mode."""
        amps = list(amplitudes)
        out = np.empty(2 * len(amps))
        for k, a in enumerate(amps):
            out[2 * k] = 2.0 * complex(a).real
            out[2 * k + 1] = 2.0 * complex(a).imag
        return cls(out)


@dataclass(frozen=True)
class SymplecticSpectrum:
    """Symplectic eigenvalues of a state, sorted descending.

    Values are stored exactly as computed. The uncertainty bound itself is
    enforced where the covariance matrix (and with it the float tolerance
    implied by its conditioning) is available; values here may sit within
    that tolerance below 1 and are clamped only where entropies are taken.
    """

    eigenvalues: tuple

    def __post_init__(self) -> None:
        vals = tuple(float(v) for v in self.eigenvalues)
        if not vals:
            raise ValidationError("empty symplectic spectrum")
        if any(b > a + 1e-15 for a, b in zip(vals, vals[1:])):
            raise ValidationError("symplectic spectrum must be sorted descending")
        if min(vals) <= 0.0:
            raise ValidationError(f"symplectic eigenvalue must be positive: {min(vals)!r}")
        object.__setattr__(self, "eigenvalues", vals)

    def __iter__(self):
        return iter(self.eigenvalues)

    def __len__(self) -> int:
        return len(self.eigenvalues)


def symplectic_eigenvalues(cm: CovarianceMatrix) -> SymplecticSpectrum:
    """Symplectic spectrum of a validated covariance matrix, descending."""
    return SymplecticSpectrum(tuple(_symplectic_values(cm.entries)))


def von_neumann_entropy(cm: CovarianceMatrix) -> float:
    """State entropy in bits: sum of h over the symplectic spectrum.

    Eigenvalues within tolerance below 1 are treated as exactly 1.
    """
    return sum(h_entropy(max(v, 1.0)) for v in symplectic_eigenvalues(cm))


def tmsv_cm(mu: float) -> CovarianceMatrix:
    """Two-mode squeezed vacuum with local thermal variance mu >= 1.

    [[mu I, c Z], [c Z, mu I]] with c = sqrt(mu^2 - 1) and Z = diag(1, -1).
    mu = 1 is the two-mode vacuum.
    """
    mu = float(mu)
    if not math.isfinite(mu) or mu < 1.0:
        raise DomainError(f"tmsv_cm requires mu >= 1, got {mu}")
    c = math.sqrt(mu * mu - 1.0) if mu > 1.0 else 0.0
    m = np.diag([mu, mu, mu, mu])
    m[0, 2] = m[2, 0] = c
    m[1, 3] = m[3, 1] = -c
    return CovarianceMatrix(m)


def direct_sum(*cms: CovarianceMatrix) -> CovarianceMatrix:
    """Covariance of a product state: block-diagonal stack of the inputs."""
    if not cms:
        raise ValidationError("direct_sum needs at least one covariance matrix")
    size = sum(c.entries.shape[0] for c in cms)
    out = np.zeros((size, size))
    at = 0
    for c in cms:
        k = c.entries.shape[0]
        out[at : at + k, at : at + k] = c.entries
        at += k
    return CovarianceMatrix(out)


def partial_trace(cm: CovarianceMatrix, keep_modes: Sequence[int]) -> CovarianceMatrix:
    """Reduced covariance over the listed modes, in the listed order."""
    keep = list(keep_modes)
    if not keep or len(set(keep)) != len(keep):
        raise ValidationError("keep_modes must be non-empty and distinct")
    if any(k < 0 or k >= cm.n_modes for k in keep):
        raise ValidationError("keep_modes out of range")
    idx = [c for k in keep for c in (2 * k, 2 * k + 1)]
    return CovarianceMatrix(cm.entries[np.ix_(idx, idx)])


def _check_mode(cm: CovarianceMatrix, mode: int) -> None:
    if not (0 <= mode < cm.n_modes):
        raise ValidationError(f"mode index {mode} out of range for {cm.n_modes} modes")


def apply_beamsplitter(
    cm: CovarianceMatrix,
    mean: MeanVector | None,
    mode_i: int,
    mode_j: int,
    transmissivity: float,
):
    """Beam splitter of transmissivity t between two modes.

    Convention: out_i = sqrt(t) in_i + sqrt(1-t) in_j and
    out_j = -sqrt(1-t) in_i + sqrt(t) in_j. Returns (cm, mean); a None mean
    passes through untouched.
    """
    t = float(transmissivity)
    if not (0.0 <= t <= 1.0):
        raise DomainError(f"transmissivity must lie in [0, 1], got {t}")
    _check_mode(cm, mode_i)
    _check_mode(cm, mode_j)
    if mode_i == mode_j:
        raise ValidationError("beam splitter needs two distinct modes")
    if mean is not None and mean.n_modes != cm.n_modes:
        raise ValidationError("mean vector and covariance matrix disagree on mode count")

    ct, rt = math.sqrt(t), math.sqrt(1.0 - t)
    s = np.eye(2 * cm.n_modes)
    for off in (0, 1):
        a, b = 2 * mode_i + off, 2 * mode_j + off
        s[a, a] = ct
        s[a, b] = rt
        s[b, a] = -rt
        s[b, b] = ct
    new_cm = CovarianceMatrix(s @ cm.entries @ s.T)
    new_mean = None if mean is None else MeanVector(s @ mean.entries)
    return new_cm, new_mean


def _condition(cm: CovarianceMatrix, mode: int, measured_cov: np.ndarray) -> CovarianceMatrix:
    """Schur complement of one measured mode with a pseudo-inverse cutoff."""
    keep = [c for m in range(cm.n_modes) if m != mode for c in (2 * m, 2 * m + 1)]
    drop = [2 * mode, 2 * mode + 1]
    a = cm.entries[np.ix_(keep, keep)]
    b = cm.entries[np.ix_(keep, drop)]
    inv = np.linalg.pinv(measured_cov, rcond=PINV_CUTOFF, hermitian=True)
    return CovarianceMatrix(a - b @ inv @ b.T)


def homodyne_condition(cm: CovarianceMatrix, mode: int, quadrature: str) -> CovarianceMatrix:
    """Conditional CM of the remaining modes after homodyning one quadrature.

    quadrature is "q" or "p". The outcome value itself never enters: for
    Gaussian states the conditional covariance is outcome independent.
    """
    _check_mode(cm, mode)
    if cm.n_modes < 2:
        raise ValidationError("conditioning would leave no modes")
    if quadrature not in ("q", "p"):
        raise ValidationError(f'quadrature must be "q" or "p", got {quadrature!r}')
    pi = np.diag([1.0, 0.0]) if quadrature == "q" else np.diag([0.0, 1.0])
    c = cm.mode_block(mode, mode)
    return _condition(cm, mode, pi @ c @ pi)


def heterodyne_condition(cm: CovarianceMatrix, mode: int) -> CovarianceMatrix:
    """Conditional CM after a heterodyne (both quadratures, unit vacuum added)."""
    _check_mode(cm, mode)
    if cm.n_modes < 2:
        raise ValidationError("conditioning would leave no modes")
    return _condition(cm, mode, cm.mode_block(mode, mode) + np.eye(2))


def _logdet_pd(matrix: np.ndarray, label: str) -> float:
    try:
        chol = np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError:
        raise DegenerateCovarianceError(f"{label} covariance is not positive definite")
    return 2.0 * float(np.sum(np.log(np.diag(chol))))


def gaussian_mutual_information(joint_cov, partition: Sequence[int]) -> float:
    """Mutual information, in bits, between two halves of a Gaussian vector.

    joint_cov is a plain classical covariance (outcome statistics, not a
    quantum CM, so no uncertainty bound applies); partition lists the
    coordinate indices of the first group, the complement forms the second.
    I = (log det Sigma_X + log det Sigma_Y - log det Sigma) / (2 ln 2).
    """
    sigma = np.array(joint_cov, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1] or sigma.shape[0] < 2:
        raise ValidationError("joint covariance must be square, at least 2x2")
    scale = max(1.0, float(np.abs(sigma).max()))
    if not np.allclose(sigma, sigma.T, rtol=0.0, atol=SYMMETRY_RTOL * scale):
        raise ValidationError("joint covariance must be symmetric")
    sigma = 0.5 * (sigma + sigma.T)
    first = sorted(set(int(i) for i in partition))
    if any(i < 0 or i >= sigma.shape[0] for i in first):
        raise ValidationError("partition index out of range")
    second = [i for i in range(sigma.shape[0]) if i not in first]
    if not first or not second:
        raise ValidationError("partition must split the coordinates into two non-empty groups")
    ld_x = _logdet_pd(sigma[np.ix_(first, first)], "first-group")
    ld_y = _logdet_pd(sigma[np.ix_(second, second)], "second-group")
    ld = _logdet_pd(sigma, "joint")
    return max(0.0, 0.5 * (ld_x + ld_y - ld) / LN2)
