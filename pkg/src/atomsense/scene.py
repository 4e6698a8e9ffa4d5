"""Waveform, geometry, channel state, and drive trajectories.

Everything here is a pure function of immutable scene descriptions, mapping
transmitter and geometry parameters onto the time-varying Rabi frequency and
detuning seen by the vapor cell.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.constants import Boltzmann as k_B, c, epsilon_0, hbar

from atomsense.errors import ValidationError
from atomsense.physics import TWO_PI, AtomicSystem

REL_TOL = 1e-12


@dataclass(frozen=True)
class LfmWaveform:
    """Linear-frequency-modulated transmit waveform.

    ``omega0`` start angular frequency (rad/s), ``sweep_slope`` rad/s^2,
    ``symbol_duration`` s, ``bandwidth`` Hz.  The sweep covers
    ``bandwidth = sweep_slope * symbol_duration / 2 pi``.
    """

    omega0: float
    sweep_slope: float
    symbol_duration: float
    bandwidth: float

    def __post_init__(self):
        if not (self.symbol_duration > 0.0 and self.bandwidth > 0.0):
            raise ValidationError("symbol_duration and bandwidth must be positive")
        expect = self.sweep_slope * self.symbol_duration / TWO_PI
        if abs(expect - self.bandwidth) > REL_TOL * abs(self.bandwidth):
            raise ValidationError(
                f"inconsistent chirp: slope*T/2pi = {expect!r} != bandwidth {self.bandwidth!r}"
            )

    @classmethod
    def from_bandwidth(cls, omega0, bandwidth, symbol_duration):
        slope = TWO_PI * bandwidth / symbol_duration
        return cls(omega0=omega0, sweep_slope=slope,
                   symbol_duration=symbol_duration, bandwidth=bandwidth)


@dataclass(frozen=True)
class Geometry:
    """Target and reference-link geometry with antenna gains (linear units)."""

    target_range: float
    tx_rx_distance: float
    g_tx: float
    g_tx_ref: float
    g_rx: float
    cross_section: float
    g_lna: float = 1.0
    noise_temperature: float = 290.0
    etn_temperature: float = 0.0

    def __post_init__(self):
        if not self.target_range > self.tx_rx_distance > 0.0:
            raise ValidationError(
                "need target_range > tx_rx_distance > 0 (reference hop is the near field)"
            )
        for name in ("g_tx", "g_tx_ref", "g_rx", "g_lna", "cross_section"):
            if not getattr(self, name) > 0.0:
                raise ValidationError(f"{name} must be positive")
        if not self.noise_temperature > 0.0:
            raise ValidationError("noise_temperature must be positive")
        if self.etn_temperature < 0.0:
            raise ValidationError("etn_temperature must be nonnegative")


@dataclass(frozen=True)
class ChannelState:
    """Delays, fading amplitudes, and the beat parameters of one target."""

    tau: float
    tau_ref: float
    h: float
    h_ref: float
    omega_beat: float
    phi: float


def lfm_phase(t, w: LfmWaveform):
    """Chirp phase 0.5*slope*t^2 + omega0*t (defined for all real t)."""
    t = np.asarray(t, dtype=float)
    out = 0.5 * w.sweep_slope * t * t + w.omega0 * t
    return out if out.ndim else float(out)


def build_channel(geom: Geometry, w: LfmWaveform, target_range=None,
                  cross_section=None) -> ChannelState:
    """Populate delays, fading, beat frequency, and beat phase for one target.

    The beat phase is the exact phase offset of the delayed-minus-reference
    chirp difference: phi = (tau - tau') * (omega0 - 0.5*slope*(tau + tau')).
    """
    length = geom.target_range if target_range is None else float(target_range)
    sigma = geom.cross_section if cross_section is None else float(cross_section)
    if not length > geom.tx_rx_distance:
        raise ValidationError("target must lie beyond the reference hop")
    tau = 2.0 * length / c
    tau_ref = geom.tx_rx_distance / c
    h = np.sqrt(sigma / (16.0 * np.pi**2 * length**4))
    h_ref = 1.0 / np.sqrt(4.0 * np.pi * geom.tx_rx_distance**2)
    omega_beat = (tau - tau_ref) * w.sweep_slope
    phi = (tau - tau_ref) * (w.omega0 - 0.5 * w.sweep_slope * (tau + tau_ref))
    return ChannelState(tau=tau, tau_ref=tau_ref, h=h, h_ref=h_ref,
                        omega_beat=omega_beat, phi=phi)


@dataclass(frozen=True)
class PowerTrajectory:
    """Sampled transmit power over one symbol with its average-power budget."""

    samples: np.ndarray
    p_avg_budget: float
    provenance: str = "fixed"

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        object.__setattr__(self, "samples", samples)
        if self.provenance not in ("fixed", "itn_limited", "pds_optimized"):
            raise ValidationError(f"unknown provenance {self.provenance!r}")
        if samples.ndim != 1 or samples.size < 1:
            raise ValidationError("samples must be a nonempty 1-d array")
        if np.any(samples < 0.0):
            raise ValidationError("power samples must be nonnegative")
        if samples.mean() > self.p_avg_budget * (1.0 + 1e-9):
            raise ValidationError("trajectory exceeds the average-power budget")

    @property
    def s_count(self):
        return self.samples.size

    def resample(self, s_count):
        """Interpolate onto a uniform grid with ``s_count`` samples."""
        if s_count == self.s_count:
            return self.samples.copy()
        src = np.arange(self.s_count) / self.s_count
        dst = np.arange(s_count) / s_count
        return np.interp(dst, src, self.samples)


def fixed_trajectory(p_avg, s_count) -> PowerTrajectory:
    return PowerTrajectory(np.full(s_count, float(p_avg)), p_avg_budget=float(p_avg),
                           provenance="fixed")


def time_grid(symbol_duration, s_count):
    """Uniform sample times t_s = (s-1) T / S."""
    return np.arange(s_count) * (symbol_duration / s_count)


def rabi_trajectories(p: PowerTrajectory, geom: Geometry, atoms: AtomicSystem,
                      ch: ChannelState, z0, warn_ratio=10.0):
    """Map the power trajectory to reference and sensing Rabi frequencies.

    Square-root law through the link budgets; warns when the reference drive
    does not dominate the echo by the requested ratio at every powered sample.
    """
    power = np.asarray(p.samples, dtype=float)
    if np.any(power < 0.0):
        raise ValidationError("negative power sample")
    coeff = atoms.mu34 / hbar
    omega_r = coeff * np.sqrt(2.0 * z0 * power * geom.g_tx_ref * ch.h_ref**2)
    omega_s = coeff * np.sqrt(2.0 * z0 * power * geom.g_tx * ch.h**2)
    ratio = np.sqrt(geom.g_tx_ref * ch.h_ref**2 / (geom.g_tx * ch.h**2))
    if ratio <= warn_ratio:
        warnings.warn(
            f"reference-to-echo Rabi ratio {ratio:.2f} <= {warn_ratio}; "
            "linearized readout may be inaccurate",
            stacklevel=2,
        )
    return omega_r, omega_s


def detuning_trajectory(w: LfmWaveform, ch: ChannelState, atoms: AtomicSystem, t_grid):
    """Instantaneous detuning of the reference drive: slope*t + gamma."""
    # Group the carrier-scale terms first; their difference is small.
    gamma = (w.omega0 - atoms.omega34) - w.sweep_slope * ch.tau_ref
    return w.sweep_slope * np.asarray(t_grid, dtype=float) + gamma


def etn_intensity(omega0, t_e):
    """Blackbody-plus-vacuum field intensity spectral density, (V/m)^2 per Hz.

    ``t_e = 0`` returns the vacuum term alone (zero thermal occupation).
    """
    if t_e < 0.0:
        raise ValidationError("environment temperature must be nonnegative")
    vacuum = hbar * omega0**3 / (np.pi * epsilon_0 * c**3)
    if t_e == 0.0:
        return vacuum
    n_th = 1.0 / np.expm1(hbar * omega0 / (k_B * t_e))
    return vacuum * (2.0 * n_th + 1.0)


def instantaneous_bandwidth(ch: ChannelState, w: LfmWaveform):
    """Width of the momentary spectrum at the cell: (tau - tau') * B / T, Hz."""
    return (ch.tau - ch.tau_ref) * w.bandwidth / w.symbol_duration


@dataclass(frozen=True)
class SensingScene:
    """Bundle of everything needed to synthesize one symbol.

    ``targets`` lists (range, cross-section) pairs; the first entry is the
    primary target used by single-target records.  ``grid_s`` is the signal
    sample count over the symbol.
    """

    atoms: AtomicSystem
    waveform: LfmWaveform
    geometry: Geometry
    trajectory: PowerTrajectory
    z0: float
    grid_s: int = 1 << 20
    targets: tuple = ()

    def __post_init__(self):
        if self.grid_s < 16:
            raise ValidationError("grid_s too small")
        if not self.targets:
            object.__setattr__(
                self,
                "targets",
                ((self.geometry.target_range, self.geometry.cross_section),),
            )

    @property
    def channel(self) -> ChannelState:
        return build_channel(self.geometry, self.waveform)

    def channels(self):
        return [
            build_channel(self.geometry, self.waveform, target_range=r, cross_section=s)
            for (r, s) in self.targets
        ]

    def time(self):
        return time_grid(self.waveform.symbol_duration, self.grid_s)

    def power_on_grid(self):
        return self.trajectory.resample(self.grid_s)

    def with_trajectory(self, trajectory: PowerTrajectory) -> "SensingScene":
        return replace(self, trajectory=trajectory)

    def etn_intensity(self):
        return etn_intensity(self.waveform.omega0, self.geometry.etn_temperature)
