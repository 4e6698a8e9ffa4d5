"""Fisher information and delay estimation bounds.

Exact 3x3 information matrix (amplitude, frequency, phase) for the
unit-noise-density observation model, the large-frequency asymptotic delay
bound driven by the first three envelope-squared moments, and the
constant-envelope bound of the classic coherent receiver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from atomsense.errors import ValidationError


@dataclass
class FisherInfo:
    """Information matrix in (h, omega, phi) order plus envelope moments."""

    matrix: np.ndarray
    rho_bar0: float
    rho_bar1: float
    rho_bar2: float


def envelope_moments(envelope, dt):
    """First three moments of the squared envelope: integral of rho^2 t^k."""
    envelope = np.asarray(envelope, dtype=float)
    t = np.arange(envelope.size) * dt
    e2 = envelope * envelope
    return (
        float(e2.sum() * dt),
        float((e2 * t).sum() * dt),
        float((e2 * t * t).sum() * dt),
    )


def fim_exact(h, omega, phi, envelope, dt) -> FisherInfo:
    """Exact information matrix with the oscillatory terms retained.

    ``h = 0`` is allowed and zeroes every amplitude-scaled entry.
    """
    if h < 0.0:
        raise ValidationError("amplitude must be nonnegative")
    envelope = np.asarray(envelope, dtype=float)
    t = np.arange(envelope.size) * dt
    e2 = envelope * envelope
    arg = omega * t + phi
    s2 = np.sin(arg) ** 2
    c2 = 1.0 - s2
    sin2 = np.sin(2.0 * arg)
    i_hh = float((e2 * c2).sum() * dt)
    i_ww = float(h * h * (e2 * t * t * s2).sum() * dt)
    i_pp = float(h * h * (e2 * s2).sum() * dt)
    i_wp = float(h * h * (e2 * t * s2).sum() * dt)
    i_hp = float(-0.5 * h * (e2 * sin2).sum() * dt)
    i_hw = float(-0.5 * h * (e2 * t * sin2).sum() * dt)
    mat = np.array(
        [
            [i_hh, i_hw, i_hp],
            [i_hw, i_ww, i_wp],
            [i_hp, i_wp, i_pp],
        ]
    )
    m0, m1, m2 = envelope_moments(envelope, dt)
    return FisherInfo(matrix=mat, rho_bar0=m0, rho_bar1=m1, rho_bar2=m2)


def crlb_tau_asymptotic(envelope, h, alpha, dt):
    """Large-frequency delay bound 2 m0 / (alpha^2 h^2 (m0 m2 - m1^2)).

    Returns ``inf`` when the squared envelope is concentrated at a single
    instant (zero temporal spread carries no frequency information).
    """
    if not h > 0.0:
        raise ValidationError("amplitude must be positive")
    m0, m1, m2 = envelope_moments(envelope, dt)
    if m0 <= 0.0:
        raise ValidationError("envelope is identically zero")
    spread = m0 * m2 - m1 * m1
    if spread <= 0.0:
        return float("inf")
    return 2.0 * m0 / (alpha**2 * h**2 * spread)


def crlb_tau_from_fim(info: FisherInfo, alpha):
    """Delay bound from the exact matrix: invert, take the frequency
    variance, and map through tau = omega/alpha + const."""
    inv = np.linalg.inv(info.matrix)
    return float(inv[1, 1] / alpha**2)


def crlb_tau_classic(snr0, symbol_duration, alpha):
    """Constant-envelope coherent-receiver delay bound, 6/(snr0 T^3 alpha^2).

    ``snr0`` is the received-power to noise-density ratio (1/s), so the
    dimensionless integrated ratio is ``snr0 * T``.
    """
    if not snr0 > 0.0:
        raise ValidationError("snr0 must be positive")
    return 6.0 / (snr0 * symbol_duration**3 * alpha**2)
