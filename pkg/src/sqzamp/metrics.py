"""Figures of merit derived from the chain variances."""

import math
from dataclasses import asdict, dataclass

from .chain import amplified_v_minus, chain_variance, conventional_variance
from .errors import DomainError, MisuseError

#: Default signal: 1 dB above the vacuum variance.
DEFAULT_P_SIG = 10.0**0.1


def to_decibels(v):
    """``10 log10(v)``; negative values mean below vacuum."""
    if not v > 0.0:
        raise DomainError(f"decibel conversion needs a positive value, got {v!r}")
    return 10.0 * math.log10(v)


def from_decibels(db):
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class SignalModel:
    """Signal power in units of the vacuum variance."""

    p_sig: float = DEFAULT_P_SIG

    def __post_init__(self):
        p = float(self.p_sig)
        if not (math.isfinite(p) and p > 0.0):
            raise DomainError(f"p_sig must be positive and finite, got {self.p_sig!r}")
        object.__setattr__(self, "p_sig", p)


def signal_gain(opa):
    """Power gain of the amplifier on the phase quadrature, ``(2 eta/(1-x) - 1)^2``."""
    return (2.0 * opa.escape_efficiency / (1.0 - opa.pump) - 1.0) ** 2


def effective_efficiency(opa, eta_det):
    """Single-beamsplitter efficiency equivalent to the amplifier plus detection.

    Parameters
    ----------
    opa : CavityParams
        Amplifier escape efficiency and gain.
    eta_det : float
        Detection efficiency after the amplifier.

    Returns
    -------
    float
        ``eta_det (2 eta_opa + x - 1)^2 / ((1 - x)^2 + 4 x eta_det eta_opa)``.
        Equals ``eta_det (2 eta_opa - 1)^2`` without gain and tends to
        ``eta_opa`` as the gain diverges (see :func:`effective_efficiency_limit`).
    """
    if not 0.0 <= eta_det <= 1.0:
        raise DomainError(f"eta_det must lie in [0, 1], got {eta_det!r}")
    x = opa.pump
    eta = opa.escape_efficiency
    return eta_det * (2.0 * eta + x - 1.0) ** 2 / ((1.0 - x) ** 2 + 4.0 * x * eta_det * eta)


def effective_efficiency_limit(eta_opa):
    """Infinite-gain value of :func:`effective_efficiency`, independent of detection."""
    return float(eta_opa)


def _squeeze_term(setup, eta_eff):
    x = setup.opo.pump
    return 1.0 - 4.0 * x * setup.eta_sqz_tilde * eta_eff / (1.0 + x) ** 2


def effective_squeezing(setup):
    """Recoverable squeezing of the amplified scheme without phase noise.

    This is the amplified phase-quadrature variance divided by the same
    chain with a vacuum seed.
    """
    if not setup.amplified:
        raise MisuseError("effective_squeezing needs an amplifier (opa) in the setup")
    if not setup.noiseless:
        raise MisuseError("effective_squeezing is noise-free; use effective_squeezing_with_noise")
    return _squeeze_term(setup, effective_efficiency(setup.opa, setup.eta_det))


def effective_squeezing_limit(setup):
    """:func:`effective_squeezing` in the infinite amplifier gain limit (the amplifier gain is ignored)."""
    if not setup.amplified:
        raise MisuseError("effective_squeezing_limit needs an amplifier (opa) in the setup")
    return _squeeze_term(setup, effective_efficiency_limit(setup.opa.escape_efficiency))


def effective_squeezing_with_noise(setup):
    """Effective squeezing including phase noise, from chain assembly.

    The reference chain has the squeezer off and no squeezer phase noise,
    but keeps the amplifier and its phase noise.
    """
    return chain_variance(setup).v_minus / chain_variance(setup.vacuum_seeded()).v_minus


def _conventional_v_minus(setup):
    if setup.noiseless:
        return conventional_variance(setup).v_minus
    return chain_variance(setup).v_minus


def _amplified_v_minus(setup):
    if setup.noiseless:
        return amplified_v_minus(setup)
    return chain_variance(setup).v_minus


def snr_conventional(setup, sig=None):
    if setup.amplified:
        raise MisuseError("snr_conventional needs a conventional setup; see ChainSetup.conventional()")
    sig = sig or SignalModel()
    return setup.eta_det * sig.p_sig / _conventional_v_minus(setup)


def snr_amplified(setup, sig=None):
    if not setup.amplified:
        raise MisuseError("snr_amplified needs an amplifier (opa) in the setup")
    sig = sig or SignalModel()
    gain = signal_gain(setup.opa)
    return setup.eta_prop * setup.eta_det * gain * sig.p_sig / _amplified_v_minus(setup)


def snr_enhancement(setup):
    """SNR of the amplified scheme over that of its conventional counterpart.

    The signal power cancels. Written in variance form so it stays finite
    when ``eta_det = 0``.
    """
    if not setup.amplified:
        raise MisuseError("snr_enhancement needs an amplifier (opa) in the setup")
    v_conv = _conventional_v_minus(setup.conventional())
    return setup.eta_prop * signal_gain(setup.opa) * v_conv / _amplified_v_minus(setup)


def _db_or_none(v):
    if v is None:
        return None
    return to_decibels(v) if v > 0.0 else -math.inf


@dataclass(frozen=True)
class MetricsReport:
    """All figures of merit for one setup.

    Amplifier-only fields are ``None`` for the conventional scheme.
    """

    scheme: str
    v_minus: float
    v_plus: float
    snr_conv: float
    v_eff: float | None = None
    eta_eff: float | None = None
    snr_amp: float | None = None
    epsilon: float | None = None

    @property
    def v_minus_db(self):
        return _db_or_none(self.v_minus)

    @property
    def v_plus_db(self):
        return _db_or_none(self.v_plus)

    @property
    def v_eff_db(self):
        return _db_or_none(self.v_eff)

    @property
    def eta_eff_db(self):
        return _db_or_none(self.eta_eff)

    @property
    def snr_conv_db(self):
        return _db_or_none(self.snr_conv)

    @property
    def snr_amp_db(self):
        return _db_or_none(self.snr_amp)

    @property
    def epsilon_db(self):
        return _db_or_none(self.epsilon)

    def to_dict(self):
        out = asdict(self)
        for name in ("v_minus", "v_plus", "v_eff", "eta_eff", "snr_conv", "snr_amp", "epsilon"):
            out[f"{name}_db"] = getattr(self, f"{name}_db")
        return out


def metrics_report(setup, sig=None):
    sig = sig or SignalModel()
    if not setup.amplified:
        v = conventional_variance(setup) if setup.noiseless else chain_variance(setup)
        return MetricsReport(
            scheme="conventional",
            v_minus=v.v_minus,
            v_plus=v.v_plus,
            snr_conv=snr_conventional(setup, sig),
        )
    v = chain_variance(setup)
    v_minus = _amplified_v_minus(setup)
    snr_conv = snr_conventional(setup.conventional(), sig)
    snr_amp = snr_amplified(setup, sig)
    if setup.noiseless:
        v_eff = effective_squeezing(setup)
    else:
        v_eff = effective_squeezing_with_noise(setup)
    return MetricsReport(
        scheme="amplified",
        v_minus=v_minus,
        v_plus=v.v_plus,
        snr_conv=snr_conv,
        v_eff=v_eff,
        eta_eff=effective_efficiency(setup.opa, setup.eta_det),
        snr_amp=snr_amp,
        epsilon=snr_enhancement(setup),
    )
