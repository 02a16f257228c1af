"""Shaped drive envelopes and tones.

Two shapes cover all gates here: a lowered Gaussian (single-qubit pulses,
total length 4 sigma, rescaled so the endpoints sit exactly at zero) and a
flat-topped Gaussian (CR and target tones, lowered-Gaussian rise and fall of
2 sigma each around a constant plateau). The optional DRAG quadrature is the
scaled time derivative of the in-phase shape, applied 90 degrees out of
phase.

Amplitudes are peak Rabi rates in MHz; times are ns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

__all__ = [
    "LoweredGaussian",
    "FlatTopGaussian",
    "DriveTone",
    "sample_envelope",
    "envelope_area",
    "effective_flat_time",
]

_EDGE = np.exp(-2.0)  # Gaussian value at +-2 sigma, removed by the lowering


@dataclass(frozen=True)
class LoweredGaussian:
    """Gaussian truncated at +-2 sigma and lowered to start and end at zero."""

    sigma_ns: float
    amplitude_mhz: float
    drag_coefficient: float = 0.0

    def __post_init__(self):
        if self.sigma_ns <= 0:
            raise ValueError("sigma must be positive")

    @property
    def duration_ns(self) -> float:
        return 4.0 * self.sigma_ns

    def _shape(self, t: np.ndarray) -> np.ndarray:
        c = 2.0 * self.sigma_ns
        g = np.exp(-0.5 * ((t - c) / self.sigma_ns) ** 2)
        return (g - _EDGE) / (1.0 - _EDGE)

    def _dshape(self, t: np.ndarray) -> np.ndarray:
        c = 2.0 * self.sigma_ns
        g = np.exp(-0.5 * ((t - c) / self.sigma_ns) ** 2)
        return g * (-(t - c) / self.sigma_ns**2) / (1.0 - _EDGE)


@dataclass(frozen=True)
class FlatTopGaussian:
    """Constant plateau with lowered-Gaussian rise and fall of 2 sigma each."""

    sigma_ns: float
    flat_width_ns: float
    amplitude_mhz: float
    drag_coefficient: float = 0.0

    def __post_init__(self):
        if self.sigma_ns <= 0:
            raise ValueError("sigma must be positive")
        if self.flat_width_ns < 0:
            raise ValueError("flat_width must be non-negative")

    @property
    def duration_ns(self) -> float:
        return 4.0 * self.sigma_ns + self.flat_width_ns

    def _shape(self, t: np.ndarray) -> np.ndarray:
        r = 2.0 * self.sigma_ns
        w = self.flat_width_ns
        g_rise = (np.exp(-0.5 * ((t - r) / self.sigma_ns) ** 2) - _EDGE) / (1.0 - _EDGE)
        g_fall = (np.exp(-0.5 * ((t - r - w) / self.sigma_ns) ** 2) - _EDGE) / (1.0 - _EDGE)
        return np.select([t < r, t <= r + w], [g_rise, 1.0], default=g_fall)

    def _dshape(self, t: np.ndarray) -> np.ndarray:
        r = 2.0 * self.sigma_ns
        w = self.flat_width_ns
        d_rise = (
            np.exp(-0.5 * ((t - r) / self.sigma_ns) ** 2)
            * (-(t - r) / self.sigma_ns**2)
            / (1.0 - _EDGE)
        )
        d_fall = (
            np.exp(-0.5 * ((t - r - w) / self.sigma_ns) ** 2)
            * (-(t - r - w) / self.sigma_ns**2)
            / (1.0 - _EDGE)
        )
        return np.select([t < r, t <= r + w], [d_rise, 0.0], default=d_fall)


Envelope = LoweredGaussian | FlatTopGaussian


@dataclass(frozen=True)
class DriveTone:
    """A carrier plus shaped envelope addressed to one qubit."""

    envelope: Envelope
    carrier_ghz: float
    phase_rad: float
    qubit: int

    def __post_init__(self):
        if self.carrier_ghz <= 0:
            raise ValueError("carrier must be positive")
        object.__setattr__(self, "phase_rad", float(self.phase_rad) % (2.0 * np.pi))


def sample_envelope(envelope: Envelope, t_ns):
    """Complex amplitude I + iQ in MHz at time(s) t; zero outside support.

    Q is drag_coefficient times the time derivative of I (per ns), the
    quadrature applied 90 degrees out of phase with the in-phase drive.
    """
    t = np.asarray(t_ns, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    inside = (t >= 0.0) & (t <= envelope.duration_ns)
    i_part = np.where(inside, envelope._shape(t), 0.0) * envelope.amplitude_mhz
    if envelope.drag_coefficient != 0.0:
        q_part = (
            np.where(inside, envelope._dshape(t), 0.0)
            * envelope.amplitude_mhz
            * envelope.drag_coefficient
        )
    else:
        q_part = np.zeros_like(i_part)
    out = i_part + 1j * q_part
    return complex(out[0]) if scalar else out


def envelope_area(envelope: Envelope) -> float:
    """Integral of the in-phase shape over its support, MHz*ns."""
    if envelope.amplitude_mhz == 0.0:
        return 0.0
    val, _ = quad(
        lambda t: float(np.real(sample_envelope(envelope, t))),
        0.0,
        envelope.duration_ns,
        epsabs=0.0,
        epsrel=1e-11,
        limit=200,
    )
    return val


def effective_flat_time(envelope: Envelope) -> float:
    """Area divided by peak amplitude: the equivalent constant-drive duration."""
    if envelope.amplitude_mhz == 0.0:
        probe = (
            LoweredGaussian(envelope.sigma_ns, 1.0)
            if isinstance(envelope, LoweredGaussian)
            else FlatTopGaussian(envelope.sigma_ns, envelope.flat_width_ns, 1.0)
        )
        return envelope_area(probe)
    return envelope_area(envelope) / envelope.amplitude_mhz
