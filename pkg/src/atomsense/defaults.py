"""Reference hardware configuration and shared physical constants.

The default numbers describe a cesium vapor-cell receiver (852 nm probe,
two high-lying levels coupled by a 3.212 GHz field) with a quasi-monostatic
chirped transmitter; every value can be overridden from the experiment
configuration file.
"""

from __future__ import annotations

import numpy as np
from scipy.constants import e as q_e, physical_constants

from atomsense.physics import TWO_PI, AtomicSystem
from atomsense.scene import Geometry, LfmWaveform

# Fixed by convention across the package (free-space wave impedance, ohm).
Z0 = 376.730313668

BOHR_RADIUS = physical_constants["Bohr radius"][0]


def default_atoms(**overrides) -> AtomicSystem:
    """Cesium receiver defaults (angular frequencies)."""
    params = dict(
        omega_p_rabi=TWO_PI * 5.8e6,
        omega_c_rabi=TWO_PI * 1.0e6,
        gamma2=TWO_PI * 5.2e6,
        mu12=2.586 * q_e * BOHR_RADIUS,
        mu34=2409.0 * q_e * BOHR_RADIUS,
        n_atoms=4.89e16,
        cell_length=0.02,
        lambda_probe=852e-9,
        p_in=120e-6,
        r_load=2e3,
        quantum_eff=0.8,
        omega34=TWO_PI * 3.212e9,
    )
    params.update(overrides)
    return AtomicSystem(**params)


def default_waveform(bandwidth=150e6, symbol_duration=1e-3, omega0=TWO_PI * 3.212e9,
                     centered_on=None) -> LfmWaveform:
    """Chirp defaults: 150 MHz sweep over 1 ms starting at the 3.212 GHz carrier.

    With ``centered_on`` set to a transition frequency (rad/s), the start
    frequency is lowered by half the sweep so the instantaneous detuning runs
    symmetrically through resonance.
    """
    if centered_on is not None:
        omega0 = centered_on - np.pi * bandwidth
    return LfmWaveform.from_bandwidth(omega0=omega0, bandwidth=bandwidth,
                                      symbol_duration=symbol_duration)


def default_geometry(**overrides) -> Geometry:
    """Quasi-monostatic geometry defaults (1 km target, 1 m reference hop)."""
    params = dict(
        target_range=1e3,
        tx_rx_distance=1.0,
        g_tx=10.0,          # 10 dBi toward the target
        g_tx_ref=1e-3,      # -30 dBi toward the receiver
        g_rx=10.0,          # 10 dBi classic receive antenna
        g_lna=1.0,
        cross_section=10.0,  # 10 dBsm
        noise_temperature=290.0,
        etn_temperature=0.0,
    )
    params.update(overrides)
    return Geometry(**params)
