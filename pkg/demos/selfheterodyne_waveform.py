"""The self-heterodyne voltage waveform and its narrow instantaneous band.

Synthesizes one noiseless symbol, shows the oscillation riding the
time-varying bias at the beat frequency (range times sweep slope), and
verifies the instantaneous bandwidth stays a tiny fraction of the sweep.

Run:  python3 demos/selfheterodyne_waveform.py  (add --plot for figures)
"""

import argparse

import numpy as np

from atomsense.defaults import Z0, default_atoms, default_geometry, default_waveform
from atomsense.scene import SensingScene, fixed_trajectory, instantaneous_bandwidth
from atomsense.signal import selfheterodyne_arrays


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--plot", action="store_true")
    args = parser.parse_args()

    atoms = default_atoms()
    scene = SensingScene(
        atoms=atoms,
        waveform=default_waveform(centered_on=atoms.omega34),
        geometry=default_geometry(target_range=1e3),
        trajectory=fixed_trajectory(1.5, 2048),
        z0=Z0,
        grid_s=1 << 16,
    )
    ch = scene.channel
    beat_hz = ch.omega_beat / (2 * np.pi)
    print(f"target range 1 km -> roundtrip delay {ch.tau*1e6:.3f} us")
    print(f"beat frequency {beat_hz/1e3:.1f} kHz "
          f"(sweep {scene.waveform.bandwidth/1e6:.0f} MHz over "
          f"{scene.waveform.symbol_duration*1e3:.0f} ms)")
    ib = instantaneous_bandwidth(ch, scene.waveform)
    print(f"instantaneous bandwidth {ib/1e3:.1f} kHz = "
          f"{100*ib/scene.waveform.bandwidth:.2f}% of the sweep")

    arrays = selfheterodyne_arrays(scene)
    dt = float(arrays.t_grid[1] - arrays.t_grid[0])
    spec = np.abs(np.fft.rfft(arrays.clean_norm)) ** 2
    freqs = np.fft.rfftfreq(arrays.t_grid.size, dt)
    peak = freqs[np.argmax(spec[1:]) + 1]
    print(f"periodogram peak of the normalized waveform: {peak/1e3:.1f} kHz")

    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, axes = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
        t_ms = arrays.t_grid * 1e3
        axes[0].plot(t_ms, arrays.bias * 1e3, lw=0.8)
        axes[0].set_ylabel("bias voltage (mV)")
        axes[1].plot(t_ms, arrays.clean_norm, lw=0.4)
        axes[1].set_ylabel("normalized echo")
        axes[1].set_xlabel("time (ms)")
        fig.tight_layout()
        fig.savefig("demos/selfheterodyne_waveform.png", dpi=150)
        print("wrote demos/selfheterodyne_waveform.png")


if __name__ == "__main__":
    main()
