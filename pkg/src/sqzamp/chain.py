"""Detection chains: per-port transfer functions and output variances.

Every vacuum entry port (squeezer input ``in`` and loss ``lo``, propagation
loss ``prop``, amplifier loss ``la``, detection loss ``det``) contributes
independent unit-variance noise to the detected quadratures. A chain is the
list of transfer matrices from those ports to the photodetector.
"""

import enum
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError, MisuseError
from .quadrature import CavityParams, _check_efficiency, conjugate_rotation, opa_matrices, opo_matrices, rotation

#: Slack on the uncertainty bound ``V- * V+ >= 1``.
UNCERTAINTY_SLACK = 1e-9

PORTS = ("in", "lo", "prop", "la", "det")


class PhaseNoiseMode(str, enum.Enum):
    """How phase-noise angles enter the model.

    ``DETERMINISTIC`` substitutes the angle directly into the rotations.
    ``GAUSSIAN_RMS`` treats it as the standard deviation of a zero-mean
    normal jitter and returns the exact average over that jitter.
    """

    DETERMINISTIC = "deterministic"
    GAUSSIAN_RMS = "gaussian_rms"


@dataclass(frozen=True)
class ChannelEfficiencies:
    eta_prop: float = 0.99
    eta_det: float = 0.7

    def __post_init__(self):
        object.__setattr__(self, "eta_prop", _check_efficiency("eta_prop", self.eta_prop))
        object.__setattr__(self, "eta_det", _check_efficiency("eta_det", self.eta_det))


def _check_angle(name, theta):
    theta = float(theta)
    if not math.isfinite(theta):
        raise DomainError(f"{name} must be finite, got {theta!r}")
    if abs(theta) >= math.pi / 2:
        warnings.warn(f"{name}={theta!r} rad is far outside the small-angle regime", stacklevel=3)
    return theta


@dataclass(frozen=True)
class ChainSetup:
    """A complete experiment: squeezer, optional amplifier, losses and phase noise.

    Leaving ``opa`` as ``None`` selects the conventional scheme, where
    ``efficiencies.eta_prop`` is ignored.
    """

    opo: CavityParams
    opa: CavityParams | None = None
    efficiencies: ChannelEfficiencies = field(default_factory=ChannelEfficiencies)
    theta_opo: float = 0.0
    theta_opa: float = 0.0
    phase_noise_mode: PhaseNoiseMode = PhaseNoiseMode.DETERMINISTIC

    def __post_init__(self):
        object.__setattr__(self, "theta_opo", _check_angle("theta_opo", self.theta_opo))
        object.__setattr__(self, "theta_opa", _check_angle("theta_opa", self.theta_opa))
        object.__setattr__(self, "phase_noise_mode", PhaseNoiseMode(self.phase_noise_mode))
        if self.opa is None and self.theta_opa != 0.0:
            raise MisuseError("theta_opa requires an amplifier (opa) in the setup")

    @property
    def amplified(self):
        return self.opa is not None

    @property
    def eta_det(self):
        return self.efficiencies.eta_det

    @property
    def eta_prop(self):
        return self.efficiencies.eta_prop

    @property
    def eta_sqz(self):
        """Squeezer escape efficiency times detection efficiency."""
        return self.opo.escape_efficiency * self.eta_det

    @property
    def eta_sqz_tilde(self):
        """Squeezer escape efficiency times propagation efficiency (amplified scheme)."""
        return self.opo.escape_efficiency * self.eta_prop

    @property
    def noiseless(self):
        return self.theta_opo == 0.0 and self.theta_opa == 0.0

    def evolve(self, **changes):
        """Copy with some fields replaced (``dataclasses.replace``)."""
        return replace(self, **changes)

    def vacuum_seeded(self):
        """The same chain with the squeezer switched off and no squeezer phase noise."""
        return replace(self, opo=replace(self.opo, gain=1.0), theta_opo=0.0)

    def conventional(self):
        """Conventional-scheme counterpart: amplifier and propagation loss removed."""
        return replace(self, opa=None, theta_opa=0.0)

    @classmethod
    def from_values(
        cls,
        g_opo,
        g_opa=None,
        eta_opo=0.98,
        eta_opa=0.98,
        eta_prop=0.99,
        eta_det=0.7,
        theta_opo=0.0,
        theta_opa=0.0,
        phase_noise_mode=PhaseNoiseMode.DETERMINISTIC,
    ):
        """Build a setup from scalars; defaults are the realistic parameter set."""
        opa = None if g_opa is None else CavityParams(eta_opa, g_opa)
        return cls(
            opo=CavityParams(eta_opo, g_opo),
            opa=opa,
            efficiencies=ChannelEfficiencies(eta_prop, eta_det),
            theta_opo=theta_opo,
            theta_opa=theta_opa,
            phase_noise_mode=phase_noise_mode,
        )


@dataclass(frozen=True)
class ChannelTransfer:
    port: str
    matrix: np.ndarray

    def __post_init__(self):
        if self.port not in PORTS:
            raise ValueError(f"unknown port {self.port!r}; expected one of {PORTS}")
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (2, 2) or not np.all(np.isfinite(m)):
            raise ValueError(f"transfer matrix for port {self.port!r} must be a finite 2x2 array")
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True)
class QuadVariance:
    """Variances of the phase (``v_minus``) and amplitude (``v_plus``) quadratures."""

    v_minus: float
    v_plus: float

    def __post_init__(self):
        v_minus, v_plus = float(self.v_minus), float(self.v_plus)
        if not (v_minus > 0.0 and v_plus > 0.0):
            raise DomainError(f"variances must be positive, got ({v_minus!r}, {v_plus!r})")
        if v_minus * v_plus < 1.0 - UNCERTAINTY_SLACK:
            raise DomainError(f"variances ({v_minus!r}, {v_plus!r}) violate the uncertainty bound")
        object.__setattr__(self, "v_minus", v_minus)
        object.__setattr__(self, "v_plus", v_plus)

    @property
    def product(self):
        return self.v_minus * self.v_plus

    def as_tuple(self):
        return (self.v_minus, self.v_plus)


def conventional_chain(setup, theta_opo=None):
    """Transfer functions ``in``, ``lo``, ``det`` of the conventional scheme."""
    if setup.amplified:
        raise MisuseError("conventional_chain called on an amplified setup; use amplified_chain")
    th_o = setup.theta_opo if theta_opo is None else theta_opo
    eta_det = setup.eta_det
    m_in, m_l = opo_matrices(setup.opo)
    a = math.sqrt(eta_det)
    return [
        ChannelTransfer("in", a * conjugate_rotation(m_in, th_o)),
        ChannelTransfer("lo", a * conjugate_rotation(m_l, th_o)),
        ChannelTransfer("det", math.sqrt(1.0 - eta_det) * np.eye(2, dtype=complex)),
    ]


def amplified_chain(setup, theta_opo=None, theta_opa=None):
    """Transfer functions ``in``, ``lo``, ``prop``, ``la``, ``det`` of the amplified scheme.

    Phase noise enters as rotations nested so that the amplifier rotation
    encloses the squeezer stage: ``R_a M_a R_o M_o R_o^-1 R_a^-1``.
    """
    if not setup.amplified:
        raise MisuseError("amplified_chain called on a setup without an amplifier")
    th_o = setup.theta_opo if theta_opo is None else theta_opo
    th_a = setup.theta_opa if theta_opa is None else theta_opa
    eta_prop, eta_det = setup.eta_prop, setup.eta_det
    o_in, o_l = opo_matrices(setup.opo)
    a_in, a_l = opa_matrices(setup.opa)
    r_a = rotation(th_a)
    through = math.sqrt(eta_prop * eta_det)
    return [
        ChannelTransfer("in", through * r_a @ a_in @ conjugate_rotation(o_in, th_o) @ r_a.T),
        ChannelTransfer("lo", through * r_a @ a_in @ conjugate_rotation(o_l, th_o) @ r_a.T),
        ChannelTransfer("prop", math.sqrt((1.0 - eta_prop) * eta_det) * conjugate_rotation(a_in, th_a)),
        ChannelTransfer("la", math.sqrt(eta_det) * conjugate_rotation(a_l, th_a)),
        ChannelTransfer("det", math.sqrt(1.0 - eta_det) * np.eye(2, dtype=complex)),
    ]


def build_chain(setup, theta_opo=None, theta_opa=None):
    """Dispatch to :func:`conventional_chain` or :func:`amplified_chain`."""
    if setup.amplified:
        return amplified_chain(setup, theta_opo, theta_opa)
    return conventional_chain(setup, theta_opo)


def _covariance_diag(channels):
    if not channels:
        raise MisuseError("variance_from_chain needs at least one channel")
    labels = [c.port for c in channels]
    if len(set(labels)) != len(labels):
        raise MisuseError(f"duplicate port labels in chain: {labels}")
    total = np.zeros(2)
    for c in channels:
        total += np.sum(np.abs(c.matrix) ** 2, axis=1)
    return total


def variance_from_chain(channels):
    """Output variances for independent unit-variance vacuum at every port.

    ``V_i = sum over channels and inputs j of |T[i, j]|^2``.
    """
    v_minus, v_plus = _covariance_diag(channels)
    return QuadVariance(v_minus, v_plus)


def _gaussian_weights(theta_rms):
    # E[cos^2] and E[sin^2] for theta ~ Normal(0, theta_rms)
    damp = math.exp(-2.0 * theta_rms**2)
    return (1.0 + damp) / 2.0, (1.0 - damp) / 2.0


def chain_variance(setup):
    """Output variances of ``setup`` honouring its phase-noise mode.

    In gaussian mode the result is the exact expectation over independent
    normal jitter of both angles. Each variance is a trigonometric
    polynomial of degree two in each angle, so the expectation is a
    weighted sum of the chain evaluated at angles 0 and pi/2.
    """
    if setup.phase_noise_mode is PhaseNoiseMode.DETERMINISTIC or setup.noiseless:
        return variance_from_chain(build_chain(setup))
    w_o = _gaussian_weights(setup.theta_opo)
    w_a = _gaussian_weights(setup.theta_opa) if setup.amplified else (1.0, 0.0)
    quarter = math.pi / 2
    total = np.zeros(2)
    for i, th_o in enumerate((0.0, quarter)):
        for j, th_a in enumerate((0.0, quarter)):
            weight = w_o[i] * w_a[j]
            if weight == 0.0:
                continue
            total += weight * _covariance_diag(build_chain(setup, th_o, th_a))
    return QuadVariance(total[0], total[1])


def _require_noiseless(setup, name):
    if not setup.noiseless:
        raise MisuseError(
            f"{name} is the phase-noise-free closed form; use chain_variance "
            "or phase_noise_projection for nonzero angles"
        )


def conventional_variance(setup):
    """Closed-form variances of the conventional scheme (no phase noise)."""
    if setup.amplified:
        raise MisuseError("conventional_variance called on an amplified setup")
    _require_noiseless(setup, "conventional_variance")
    x = setup.opo.pump
    eta = setup.eta_sqz
    return QuadVariance(1.0 - 4.0 * x * eta / (1.0 + x) ** 2, 1.0 + 4.0 * x * eta / (1.0 - x) ** 2)


def amplified_v_minus(setup):
    """Closed-form phase-quadrature variance of the amplified scheme."""
    if not setup.amplified:
        raise MisuseError("amplified variance needs an amplifier (opa) in the setup")
    _require_noiseless(setup, "amplified_variance")
    x_o, x_a = setup.opo.pump, setup.opa.pump
    eta_opa, eta_det = setup.opa.escape_efficiency, setup.eta_det
    vacuum = 1.0 + 4.0 * x_a * eta_det * eta_opa / (1.0 - x_a) ** 2
    squeeze = 4.0 * x_o * setup.eta_sqz_tilde / (1.0 + x_o) ** 2
    transfer = eta_det * (2.0 * eta_opa + x_a - 1.0) ** 2 / (1.0 - x_a) ** 2
    return vacuum - squeeze * transfer


def amplified_variance(setup):
    """Variances of the amplified scheme.

    ``v_minus`` is the closed form; there is no closed form for the
    amplitude quadrature, so ``v_plus`` comes from chain assembly.
    """
    v_minus = amplified_v_minus(setup)
    v_plus = variance_from_chain(amplified_chain(setup)).v_plus
    return QuadVariance(v_minus, v_plus)


def phase_noise_projection(v, theta):
    """Variance detected in the phase quadrature after a rotation by ``theta``."""
    return v.v_minus * math.cos(theta) ** 2 + v.v_plus * math.sin(theta) ** 2


def gaussian_phase_average(v, theta_rms):
    """Expectation of :func:`phase_noise_projection` over ``theta ~ Normal(0, theta_rms)``."""
    if theta_rms < 0.0:
        raise DomainError(f"theta_rms must be >= 0, got {theta_rms!r}")
    w_cos, w_sin = _gaussian_weights(theta_rms)
    return v.v_minus * w_cos + v.v_plus * w_sin
