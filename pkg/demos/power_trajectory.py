"""Power-trajectory design: why constant transmit power is sub-optimal.

Evaluates the per-sample SNR of a constant-power sweep (deep dip near
resonance), the closed-form shot-noise-limited trajectory, and the refined
trajectory from the primal-dual subgradient method.

Run:  python3 demos/power_trajectory.py  (add --plot for figures)
"""

import argparse

import numpy as np

from atomsense.defaults import Z0, default_atoms, default_geometry, default_waveform
from atomsense.physics import derive_constants
from atomsense.ptraj import (
    best_pds_trajectory,
    itn_limited_trajectory,
    k_coefficients,
    snr_breakdown,
)
from atomsense.scene import SensingScene, detuning_trajectory, fixed_trajectory, time_grid


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--plot", action="store_true")
    args = parser.parse_args()

    atoms = default_atoms()
    scene = SensingScene(
        atoms=atoms,
        waveform=default_waveform(centered_on=atoms.omega34),
        geometry=default_geometry(target_range=1e3),
        trajectory=fixed_trajectory(1.5, 4096),
        z0=Z0,
        grid_s=1 << 12,
    )
    k = derive_constants(atoms)
    k1, k2 = k_coefficients(k)
    print(f"crossover detuning k2^2/k1 = 2pi x "
          f"{(k2**2/k1)/(2*np.pi)/1e6:.3f} MHz")

    trajectories = {
        "constant 2 W": fixed_trajectory(2.0, 4096),
        "constant 1.5 W": fixed_trajectory(1.5, 4096),
        "shot-noise-limited": itn_limited_trajectory(scene, 4096),
        "refined (subgradient)": best_pds_trajectory(scene, 4096),
    }
    print(f"\n{'trajectory':>22}  mean P (W)  mean env^2      min/max SNR (dB)")
    for name, traj in trajectories.items():
        bd = snr_breakdown(traj, scene)
        live = bd.snr_total > 0
        span = 10 * np.log10(bd.snr_total[live].max() / bd.snr_total[live].min())
        print(f"{name:>22}  {traj.samples.mean():9.3f}  {bd.envelope_sq.mean():.4e}  "
              f"{span:8.1f}")

    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        t = time_grid(scene.waveform.symbol_duration, 4096)
        delta = detuning_trajectory(scene.waveform, scene.channel, atoms, t)
        fig, axes = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
        for name, traj in trajectories.items():
            bd = snr_breakdown(traj, scene)
            axes[0].plot(delta / 2 / np.pi / 1e6, traj.samples, lw=1, label=name)
            axes[1].plot(delta / 2 / np.pi / 1e6,
                         10 * np.log10(np.maximum(bd.snr_total, 1e-30)), lw=1)
        axes[0].set_ylabel("transmit power (W)")
        axes[0].legend(fontsize=8)
        axes[1].set_ylabel("per-sample SNR (dB)")
        axes[1].set_xlabel("instantaneous detuning (MHz)")
        axes[1].set_ylim(-60, 50)
        fig.tight_layout()
        fig.savefig("demos/power_trajectory.png", dpi=150)
        print("\nwrote demos/power_trajectory.png")


if __name__ == "__main__":
    main()
