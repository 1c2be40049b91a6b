"""Key rates for a continuous-variable relay protocol with one lossy arm.

Two parties modulate coherent states toward a local relay whose Bell-type
measurement broadcast ties their data together; only Bob's arm crosses the
untrusted channel. The package computes the asymptotic closed-form key
rate, rederives it numerically from covariance matrices, emulates the
protocol round by round, and serves everything over HTTP and a CLI.
"""

__version__ = "0.1.0"

from .channel import (
    ChannelParams,
    DEFAULT_FIBER,
    FiberModel,
    TAU_FLOOR,
    chi_loss,
    chi_total,
    distance_from_tau,
    epsilon_from_omega,
    omega_from_epsilon,
    tau_from_distance,
    thermal_loss_apply,
)
from .errors import (
    CovarianceError,
    DegenerateCovarianceError,
    DomainError,
    EstimationError,
    InvalidRegimeError,
    ValidationError,
)
from .gaussian import (
    CovarianceMatrix,
    MeanVector,
    SymplecticSpectrum,
    apply_beamsplitter,
    direct_sum,
    gaussian_mutual_information,
    h_entropy,
    heterodyne_condition,
    homodyne_condition,
    partial_trace,
    symplectic_eigenvalues,
    symplectic_form,
    tmsv_cm,
    von_neumann_entropy,
)
from .montecarlo import (
    BatchConfig,
    EstimationResult,
    Round,
    SampleBatch,
    empirical_iab,
    estimate_channel,
    rescale_detection,
    simulate_batch,
    write_batch_csv,
)
from .oracle import (
    ProtocolState,
    bell_condition,
    build_protocol_state,
    calibrated_epsilon,
    equivalent_noise,
    numeric_holevo,
    numeric_iab,
    numeric_rate,
    optimize_modulation,
)
from .rates import (
    RateReport,
    SweepPoint,
    ThresholdResult,
    rate_asymptotic,
    rate_pure_loss,
    security_threshold,
    sweep,
)

__all__ = [
    "__version__",
    "BatchConfig",
    "ChannelParams",
    "CovarianceMatrix",
    "CovarianceError",
    "DEFAULT_FIBER",
    "DegenerateCovarianceError",
    "DomainError",
    "EstimationError",
    "EstimationResult",
    "FiberModel",
    "InvalidRegimeError",
    "MeanVector",
    "ProtocolState",
    "RateReport",
    "Round",
    "SampleBatch",
    "SweepPoint",
    "SymplecticSpectrum",
    "TAU_FLOOR",
    "ThresholdResult",
    "ValidationError",
    "apply_beamsplitter",
    "bell_condition",
    "build_protocol_state",
    "calibrated_epsilon",
    "chi_loss",
    "chi_total",
    "direct_sum",
    "distance_from_tau",
    "empirical_iab",
    "epsilon_from_omega",
    "equivalent_noise",
    "estimate_channel",
    "gaussian_mutual_information",
    "h_entropy",
    "heterodyne_condition",
    "homodyne_condition",
    "numeric_holevo",
    "numeric_iab",
    "numeric_rate",
    "omega_from_epsilon",
    "optimize_modulation",
    "partial_trace",
    "rate_asymptotic",
    "rate_pure_loss",
    "rescale_detection",
    "security_threshold",
    "simulate_batch",
    "symplectic_eigenvalues",
    "symplectic_form",
    "sweep",
    "tau_from_distance",
    "thermal_loss_apply",
    "tmsv_cm",
    "von_neumann_entropy",
    "write_batch_csv",
]
