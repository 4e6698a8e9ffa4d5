"""Shared scene builders and synthetic records for the test suite."""

import numpy as np
import pytest

from atomsense.defaults import Z0, default_atoms, default_geometry, default_waveform
from atomsense.physics import TWO_PI, derive_constants
from atomsense.scene import SensingScene, fixed_trajectory
from atomsense.signal import ReceivedRecord


@pytest.fixture(scope="session")
def atoms():
    return default_atoms()


@pytest.fixture(scope="session")
def constants(atoms):
    return derive_constants(atoms)


@pytest.fixture(scope="session")
def fig4_atoms():
    # Oracle comparisons run in the vanishing-Rydberg-decay limit where the
    # closed-form steady state is exact.
    return default_atoms(omega_p_rabi=TWO_PI * 6e6, omega_c_rabi=TWO_PI * 10e6,
                         gamma3=TWO_PI * 1.0, gamma4=TWO_PI * 1.0)


def make_scene(target_range=1e3, p_avg=1.5, grid_s=1 << 16, centered=True,
               bandwidth=150e6, symbol_duration=1e-3, traj_samples=1024, **geom_kw):
    atoms = default_atoms()
    if centered:
        w = default_waveform(bandwidth=bandwidth, symbol_duration=symbol_duration,
                             centered_on=atoms.omega34)
    else:
        w = default_waveform(bandwidth=bandwidth, symbol_duration=symbol_duration)
    geom = default_geometry(target_range=target_range, **geom_kw)
    return SensingScene(atoms=atoms, waveform=w, geometry=geom,
                        trajectory=fixed_trajectory(p_avg, traj_samples),
                        z0=Z0, grid_s=grid_s)


def make_tone_record(n=1 << 14, duration=1e-3, h=1e-3, omega=None, phi=0.7,
                     envelope=None, seed=None, alpha=None, tau_ref=0.0):
    """Synthetic normalized record with full control over the tone."""
    t = np.arange(n) * (duration / n)
    dt = duration / n
    if omega is None:
        omega = 2 * np.pi * 200 / duration
    if envelope is None:
        envelope = np.ones(n)
    envelope = np.asarray(envelope, dtype=float)
    y = envelope * h * np.cos(omega * t + phi)
    if seed is not None:
        y = y + np.random.default_rng(seed).standard_normal(n) / np.sqrt(dt)
    if alpha is None:
        alpha = 2 * np.pi * 150e6 / duration

    class _Truth:
        pass

    truth = _Truth()
    truth.tau = omega / alpha + tau_ref
    truth.tau_ref = tau_ref
    truth.h = h
    truth.omega_beat = omega
    truth.phi = phi
    ones = np.ones(n)
    return ReceivedRecord(
        t_grid=t, y_norm=y, envelope=envelope, sigma_sq=ones,
        sigma_etn_sq=0.5 * ones, sigma_itn_sq=0.5 * ones, seed=seed or 0,
        truth=[truth], sweep_slope=alpha, tau_ref=tau_ref,
    )
