"""Single-cavity building blocks.

Gains, pump parameters, the zero-frequency transfer matrices of a degenerate
parametric cavity (used either as the squeezer or as the amplifier),
rotation matrices for phase noise, and a Fourier-domain solver for one
cavity.

All 2x2 matrices act on the column ``(X-, X+)`` and are returned as complex
numpy arrays, so the zero-frequency (real) and sideband (complex) results
share one representation.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericalError

#: Largest pump parameter accepted; closer to threshold is rejected.
MAX_PUMP = 1.0 - 1e-9

#: Condition number above which the cavity solve is refused.
MAX_CONDITION = 1e12

#: Quadrature conversion from (dA, dA^dagger) to (dX-, dX+).
GAMMA = np.array([[-1j, 1j], [1.0, 1.0]])
GAMMA_INV = np.linalg.inv(GAMMA)


def pump_from_gain(gain):
    """Normalized pump parameter ``x = 1 - 1/sqrt(G)`` for a nonlinear gain ``G >= 1``."""
    gain = float(gain)
    if not math.isfinite(gain) or gain < 1.0:
        raise DomainError(f"nonlinear gain must be finite and >= 1, got {gain!r}")
    x = 1.0 - 1.0 / math.sqrt(gain)
    if x > MAX_PUMP:
        raise DomainError(f"gain {gain!r} puts the cavity within 1e-9 of threshold")
    return x


def gain_from_pump(x):
    """Nonlinear gain ``1/(1-x)^2`` for a pump parameter ``0 <= x < 1``."""
    x = float(x)
    if not math.isfinite(x) or x < 0.0:
        raise DomainError(f"pump parameter must be finite and >= 0, got {x!r}")
    if x > MAX_PUMP:
        raise DomainError(f"pump parameter {x!r} is at or above oscillation threshold")
    return 1.0 / (1.0 - x) ** 2


def _check_efficiency(name, value):
    value = float(value)
    if not (0.0 <= value <= 1.0):
        raise DomainError(f"{name} must lie in [0, 1], got {value!r}")
    return value


@dataclass(frozen=True)
class CavityParams:
    """Escape efficiency and nonlinear gain of one parametric cavity."""

    escape_efficiency: float
    gain: float = 1.0

    def __post_init__(self):
        object.__setattr__(
            self, "escape_efficiency", _check_efficiency("escape_efficiency", self.escape_efficiency)
        )
        object.__setattr__(self, "gain", float(self.gain))
        pump_from_gain(self.gain)

    @property
    def pump(self):
        return pump_from_gain(self.gain)

    @classmethod
    def from_pump(cls, escape_efficiency, pump):
        return cls(escape_efficiency, gain_from_pump(pump))


@dataclass(frozen=True)
class CavityRates:
    """Decay rates and nonlinear coupling of a cavity.

    ``kappa_in`` couples to the input/output port, ``kappa_l`` to the loss
    port. ``coupling_q`` is the magnitude of the nonlinear coupling. The
    pump phase is fixed to zero; any other value is rejected.
    """

    kappa_in: float
    kappa_l: float
    coupling_q: float
    pump_phase: float = 0.0

    def __post_init__(self):
        for name in ("kappa_in", "kappa_l", "coupling_q"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0.0:
                raise DomainError(f"{name} must be finite and >= 0, got {value!r}")
        if self.pump_phase != 0.0:
            raise DomainError("only pump_phase = 0 is supported")
        if self.kappa_total <= 0.0:
            raise DomainError("total decay rate must be positive")
        if self.coupling_q >= self.kappa_total:
            raise DomainError("coupling_q must stay below kappa_total (oscillation threshold)")

    @property
    def kappa_total(self):
        return self.kappa_in + self.kappa_l


def _diag(a, b):
    return np.array([[a, 0.0], [0.0, b]], dtype=complex)


def _port_matrices(eta, x, amplify_phase):
    # squeezing quadrature sees (1 + x), anti-squeezing quadrature sees (1 - x)
    lo, hi = (1.0 - x, 1.0 + x) if amplify_phase else (1.0 + x, 1.0 - x)
    leak = 2.0 * math.sqrt(eta * (1.0 - eta))
    m_in = _diag(2.0 * eta / lo - 1.0, 2.0 * eta / hi - 1.0)
    m_l = _diag(leak / lo, leak / hi)
    return m_in, m_l


def opo_matrices(params):
    """Input-port (reflection) and loss-port (transmission) matrices of the squeezer.

    The phase quadrature ``X-`` is de-amplified.

    Parameters
    ----------
    params : CavityParams

    Returns
    -------
    (ndarray, ndarray)
        ``(M_in, M_l)``, both diagonal 2x2 complex arrays.
    """
    return _port_matrices(params.escape_efficiency, params.pump, amplify_phase=False)


def opa_matrices(params):
    """Same as :func:`opo_matrices` with the squeezing axis turned by 90 degrees.

    The amplifier is oriented orthogonally to the squeezer, so ``X-`` (the
    squeezed quadrature carrying the signal) is amplified.
    """
    return _port_matrices(params.escape_efficiency, params.pump, amplify_phase=True)


def rotation(theta):
    """Rotation of the quadrature plane by ``theta`` radians."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


def conjugate_rotation(m, theta):
    """Return ``R(theta) @ m @ R(theta)^-1``."""
    if theta == 0.0:
        return np.asarray(m, dtype=complex)
    r = rotation(theta)
    return r @ np.asarray(m, dtype=complex) @ r.T


def cavity_rates_from_params(params, kappa_total=1.0):
    """Convert escape efficiency and gain into decay rates and coupling.

    With ``kappa_total = 1`` (the default) rates and sideband frequencies
    are dimensionless, in units of the cavity half-linewidth.
    """
    if not kappa_total > 0.0:
        raise DomainError(f"kappa_total must be positive, got {kappa_total!r}")
    eta = params.escape_efficiency
    return CavityRates(
        kappa_in=eta * kappa_total,
        kappa_l=(1.0 - eta) * kappa_total,
        coupling_q=params.pump * kappa_total,
    )


def freq_output_transfer(rates, omega=0.0, orientation="opo"):
    """Quadrature transfer matrices of one cavity at sideband frequency ``omega``.

    Solves the linearized input-output relation in the field basis
    ``(A, A^dagger)`` and converts to quadratures with ``GAMMA``.

    Parameters
    ----------
    rates : CavityRates
    omega : float
        Sideband angular frequency, in the same units as the rates.
    orientation : {"opo", "opa"}
        ``"opo"`` de-amplifies ``X-``; ``"opa"`` flips the sign of the
        coupling so that ``X-`` is amplified.

    Returns
    -------
    (ndarray, ndarray)
        Input-port and loss-port transfer matrices.
    """
    if orientation not in ("opo", "opa"):
        raise ValueError(f"orientation must be 'opo' or 'opa', got {orientation!r}")
    if not math.isfinite(omega):
        raise DomainError(f"omega must be finite, got {omega!r}")
    kappa = rates.kappa_total
    q = rates.coupling_q if orientation == "opo" else -rates.coupling_q
    m_a = np.array([[-kappa, q], [q, -kappa]], dtype=complex)
    eye = np.eye(2, dtype=complex)
    system = 1j * omega * eye - m_a
    cond = np.linalg.cond(system)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise NumericalError(f"cavity response is ill-conditioned (cond={cond:.3g})")
    resolvent = np.linalg.inv(system)
    m_in = math.sqrt(2.0 * rates.kappa_in)
    m_l = math.sqrt(2.0 * rates.kappa_l)
    t_in = GAMMA @ (m_in * resolvent * m_in) @ GAMMA_INV - eye
    t_l = GAMMA @ (m_in * resolvent * m_l) @ GAMMA_INV
    return t_in, t_l
