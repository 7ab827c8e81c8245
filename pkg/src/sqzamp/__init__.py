"""Loss and phase-noise model for squeezed light with phase-sensitive amplification.

Quadrature ordering throughout the package is ``(X-, X+)``: the phase
quadrature first, the amplitude quadrature second. Variances are in units
of the vacuum variance.
"""

__version__ = "0.1.0"

from .errors import ConfigError, DomainError, MisuseError, ModelError, NumericalError
from .quadrature import (
    CavityParams,
    CavityRates,
    cavity_rates_from_params,
    conjugate_rotation,
    freq_output_transfer,
    gain_from_pump,
    opa_matrices,
    opo_matrices,
    pump_from_gain,
    rotation,
)
from .chain import (
    ChainSetup,
    ChannelEfficiencies,
    ChannelTransfer,
    PhaseNoiseMode,
    QuadVariance,
    amplified_chain,
    amplified_variance,
    build_chain,
    chain_variance,
    conventional_chain,
    conventional_variance,
    gaussian_phase_average,
    phase_noise_projection,
    variance_from_chain,
)
from .metrics import (
    MetricsReport,
    SignalModel,
    effective_efficiency,
    effective_efficiency_limit,
    effective_squeezing,
    effective_squeezing_limit,
    effective_squeezing_with_noise,
    from_decibels,
    metrics_report,
    signal_gain,
    snr_amplified,
    snr_conventional,
    snr_enhancement,
    to_decibels,
)
from .oracle import OracleConfig, OracleEstimate, convergence_report, estimate_variance
