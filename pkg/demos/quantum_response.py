"""Quantum response of the vapor-cell receiver.

Walks through the closed-form response surfaces — probe transmission,
readout slope, and the shot-noise sensitivity ratio — and checks the
closed-form steady state against the density-matrix integrator.

Run:  python3 demos/quantum_response.py  (add --plot for figures)
"""

import argparse

import numpy as np

from atomsense.defaults import default_atoms
from atomsense.physics import (
    TWO_PI,
    derive_constants,
    gain_upsilon,
    kappa,
    steady_rho12,
    steady_state_ode,
    transmission_pi,
)
from atomsense.ptraj import k_coefficients


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--plot", action="store_true")
    args = parser.parse_args()

    atoms = default_atoms()
    k = derive_constants(atoms)
    print("derived constants:")
    print(f"  absorption scale      {k.c0:10.2f}")
    print(f"  full-transmission V   {k.v_in*1e3:10.2f} mV")
    print(f"  response polynomial   b1={k.b1:.3e}  c1={k.c1:.3e}")
    print(f"                        c2={k.c2:.3e}  c3={k.c3:.3e}")

    # Transmission and slope along a detuning cut
    omega = TWO_PI * 10e6
    deltas = TWO_PI * np.linspace(-40e6, 40e6, 9)
    print("\ntransmission / slope at a 10 MHz drive:")
    for d in deltas:
        pi_v = transmission_pi(omega, d, k)
        ups = gain_upsilon(omega, d, k)
        print(f"  detuning {d/TWO_PI/1e6:+6.1f} MHz: V = {pi_v*1e3:7.3f} mV, "
              f"slope = {ups*1e9:+9.4f} nV/(rad/s)")

    # Sensitivity optimum: resonant and square-root-law drive strengths
    k1, k2 = k_coefficients(k)
    print(f"\nsensitivity coefficients: k1 = 2pi x {k1/TWO_PI/1e6:.3f} MHz, "
          f"k2 = 2pi x {k2/TWO_PI/1e6:.3f} MHz")
    grid = np.logspace(np.log10(k2) - 2, np.log10(k2) + 2, 40_000)
    arg = grid[np.argmax(kappa(grid, 0.0, k))]
    print(f"resonant optimum by grid search: 2pi x {arg/TWO_PI/1e6:.3f} MHz "
          f"(closed form {k2/TWO_PI/1e6:.3f})")

    # Steady-state coherence against the integrator
    oracle = default_atoms(omega_p_rabi=TWO_PI * 6e6, omega_c_rabi=TWO_PI * 10e6,
                           gamma3=TWO_PI * 1.0, gamma4=TWO_PI * 1.0)
    k4 = derive_constants(oracle)
    o, d = TWO_PI * 3e6, TWO_PI * 5e6
    ode = steady_state_ode(o, d, oracle).rho12
    closed = steady_rho12(o, d, k4)
    print("\nsteady-state coherence (3 MHz drive, 5 MHz detuning):")
    print(f"  integrator  {ode:.6f}")
    print(f"  closed form {closed:.6f}")

    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        oms = np.logspace(5.5, 8.8, 240)
        des = TWO_PI * np.linspace(-75e6, 75e6, 240)
        kap = kappa(oms[:, None], des[None, :], k)
        fig, ax = plt.subplots(figsize=(7, 4.5))
        pcm = ax.pcolormesh(des / TWO_PI / 1e6, oms / TWO_PI / 1e6,
                            10 * np.log10(kap**2 + 1e-30), cmap="magma",
                            vmin=-120, vmax=5)
        ax.plot(des / TWO_PI / 1e6, np.sqrt(k1 * np.abs(des)) / TWO_PI / 1e6,
                "c--", lw=1.2, label="square-root law")
        ax.axhline(k2 / TWO_PI / 1e6, color="w", ls=":", lw=1, label="resonant optimum")
        ax.set_yscale("log")
        ax.set_xlabel("detuning (MHz)")
        ax.set_ylabel("drive Rabi frequency (MHz)")
        ax.set_title("shot-noise sensitivity ratio (dB)")
        ax.legend(loc="lower right")
        fig.colorbar(pcm, ax=ax)
        fig.tight_layout()
        fig.savefig("demos/quantum_response.png", dpi=150)
        print("\nwrote demos/quantum_response.png")


if __name__ == "__main__":
    main()
