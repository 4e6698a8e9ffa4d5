"""Received-voltage synthesis for the self-heterodyne receiver and the
classic-receiver baseline.

The self-heterodyne record carries the normalized observation
``y_norm = envelope * h * cos(omega_beat t + phi) + unit-PSD noise`` along
with the known reference quantities (envelope, noise densities, bias) that
an estimator is entitled to use.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.constants import Boltzmann as k_B, c, e as q_e, hbar

from atomsense.errors import LinearizationError, ValidationError
from atomsense.physics import derive_constants, gain_upsilon, transmission_pi
from atomsense.scene import (
    ChannelState,
    SensingScene,
    build_channel,
    detuning_trajectory,
    lfm_phase,
)

MIN_REFERENCE_RATIO = 10.0


def noise_psd(omega_r, delta, atoms, k, e_i_sq):
    """Two-sided voltage-noise densities (V^2 s): external, internal, total.

    External noise is the ambient field intensity amplified by the readout
    slope; internal noise is photodetector shot noise, proportional to the
    bias voltage and therefore positive even with no drive.
    """
    ups = gain_upsilon(omega_r, delta, k)
    pi_v = transmission_pi(omega_r, delta, k)
    sigma_etn = (atoms.mu34 / hbar) ** 2 * ups**2 * e_i_sq
    sigma_itn = q_e * atoms.r_load * pi_v
    return sigma_etn, sigma_itn, sigma_etn + sigma_itn


@dataclass
class ReceivedRecord:
    """One synthesized self-heterodyne symbol, normalized for estimation."""

    t_grid: np.ndarray
    y_norm: np.ndarray
    envelope: np.ndarray
    sigma_sq: np.ndarray
    sigma_etn_sq: np.ndarray
    sigma_itn_sq: np.ndarray
    seed: int
    truth: list
    sweep_slope: float
    tau_ref: float

    def __post_init__(self):
        if np.any(self.sigma_sq <= 0.0):
            raise ValidationError("total noise density must stay positive")

    @property
    def delta_t(self):
        return float(self.t_grid[1] - self.t_grid[0])

    @property
    def primary_truth(self) -> ChannelState:
        return self.truth[0]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["t", "y_norm", "envelope", "sigma_sq"])
            for row in zip(self.t_grid, self.y_norm, self.envelope, self.sigma_sq):
                wr.writerow([f"{v:.12g}" for v in row])


@dataclass
class ClassicRecord:
    """One symbol at the classic coherent receiver (complex baseband)."""

    t_grid: np.ndarray
    y0: np.ndarray
    snr0: float
    truth: ChannelState
    seed: int
    sweep_slope: float
    omega0: float
    noise_psd: float
    tx_power: float

    @property
    def delta_t(self):
        return float(self.t_grid[1] - self.t_grid[0])


@dataclass
class SceneArrays:
    """Deterministic per-scene synthesis products, reusable across seeds."""

    t_grid: np.ndarray
    bias: np.ndarray
    envelope: np.ndarray
    sigma_sq: np.ndarray
    sigma_etn_sq: np.ndarray
    sigma_itn_sq: np.ndarray
    clean_norm: np.ndarray
    truth: list
    sweep_slope: float
    tau_ref: float


def selfheterodyne_arrays(scene: SensingScene, targets=None) -> SceneArrays:
    """Precompute every seed-independent array for a scene.

    ``targets`` optionally overrides the scene targets with a list of
    (range, cross_section) pairs; an empty list synthesizes a target-free
    record (noise only) while keeping the reference envelope.
    """
    atoms = scene.atoms
    k = derive_constants(atoms)
    t = scene.time()
    power = scene.power_on_grid()
    if targets is None:
        channels = scene.channels()
    else:
        channels = [
            build_channel(scene.geometry, scene.waveform, target_range=r, cross_section=s)
            for (r, s) in targets
        ]
    ref = channels[0] if channels else scene.channel
    # Strong-reference check: the ratio is sample-independent (reference and
    # echo both scale with sqrt(power)), so test it once per target.
    for ch in channels:
        ratio = np.sqrt(scene.geometry.g_tx_ref * ch.h_ref**2 / (scene.geometry.g_tx * ch.h**2))
        if ratio <= MIN_REFERENCE_RATIO:
            raise LinearizationError(
                f"reference field only {ratio:.2f}x the echo; increase target range "
                "or reduce the reference-path gain"
            )
    delta = detuning_trajectory(scene.waveform, ref, atoms, t)
    coeff = atoms.mu34 / hbar
    omega_r = coeff * np.sqrt(2.0 * scene.z0 * power * scene.geometry.g_tx_ref * ref.h_ref**2)
    bias = transmission_pi(omega_r, delta, k)
    ups = gain_upsilon(omega_r, delta, k)
    e_i_sq = scene.etn_intensity()
    sigma_etn = coeff**2 * ups**2 * e_i_sq
    sigma_itn = q_e * atoms.r_load * bias
    sigma_sq = sigma_etn + sigma_itn
    sigma = np.sqrt(sigma_sq)
    # Envelope: readout slope times the target-independent field factor.
    envelope = ups * coeff * np.sqrt(2.0 * scene.z0 * power * scene.geometry.g_tx) / sigma
    clean = np.zeros_like(t)
    for ch in channels:
        clean += envelope * ch.h * np.cos(ch.omega_beat * t + ch.phi)
    return SceneArrays(
        t_grid=t,
        bias=bias,
        envelope=envelope,
        sigma_sq=sigma_sq,
        sigma_etn_sq=sigma_etn,
        sigma_itn_sq=sigma_itn,
        clean_norm=clean,
        truth=channels,
        sweep_slope=scene.waveform.sweep_slope,
        tau_ref=ref.tau_ref,
    )


def record_from_arrays(arrays: SceneArrays, seed, noiseless=False) -> ReceivedRecord:
    """Attach one noise realization to precomputed scene arrays."""
    y = arrays.clean_norm
    if not noiseless:
        dt = float(arrays.t_grid[1] - arrays.t_grid[0])
        rng = np.random.default_rng(seed)
        y = y + rng.standard_normal(arrays.t_grid.size) / np.sqrt(dt)
    return ReceivedRecord(
        t_grid=arrays.t_grid,
        y_norm=y,
        envelope=arrays.envelope,
        sigma_sq=arrays.sigma_sq,
        sigma_etn_sq=arrays.sigma_etn_sq,
        sigma_itn_sq=arrays.sigma_itn_sq,
        seed=seed,
        truth=list(arrays.truth),
        sweep_slope=arrays.sweep_slope,
        tau_ref=arrays.tau_ref,
    )


def synthesize_selfheterodyne(scene: SensingScene, seed, targets=None,
                              noiseless=False) -> ReceivedRecord:
    """Synthesize one normalized self-heterodyne symbol.

    The raw voltage is bias + slope * echo-field * cosine + noise; the
    record stores the normalized form (bias removed using the known
    reference parameters, then divided by the per-sample noise sigma) whose
    noise component has unit spectral density.
    """
    return record_from_arrays(selfheterodyne_arrays(scene, targets=targets), seed,
                              noiseless=noiseless)


def effective_aperture(g_rx, omega0):
    """Receive aperture of the classic antenna from its gain."""
    lam = 2.0 * np.pi * c / omega0
    return g_rx * lam**2 / (4.0 * np.pi)


def synthesize_classic(scene: SensingScene, seed, noiseless=False) -> ClassicRecord:
    """Classic coherent receiver: constant-power chirp echo in AWGN."""
    geom = scene.geometry
    w = scene.waveform
    ch = scene.channel
    t = scene.time()
    p_tx = scene.trajectory.p_avg_budget
    g0 = geom.g_tx * geom.g_rx * geom.g_lna
    a_e = effective_aperture(geom.g_rx, w.omega0)
    amp = np.sqrt(p_tx * g0 * a_e) * ch.h
    psd = k_B * geom.noise_temperature
    y = amp * np.exp(1j * lfm_phase(t - ch.tau, w))
    if not noiseless:
        dt = float(t[1] - t[0])
        rng = np.random.default_rng(seed)
        scale = np.sqrt(psd / dt / 2.0)
        y = y + scale * (rng.standard_normal(t.size) + 1j * rng.standard_normal(t.size))
    snr0 = p_tx * g0 * a_e * ch.h**2 / psd
    return ClassicRecord(t_grid=t, y0=y, snr0=snr0, truth=ch, seed=seed,
                         sweep_slope=w.sweep_slope, omega0=w.omega0,
                         noise_psd=psd, tx_power=p_tx)
