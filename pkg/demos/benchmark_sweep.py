"""A small Monte Carlo benchmark sweep through the experiment harness.

Runs a reduced received-SNR sweep for the constant-power and shaped-power
receivers plus the classic baseline, and prints the RMSE table next to the
matching bounds.  The full-scale version of this experiment lives in the
acceptance suite (tests/test_acceptance.py).

Run:  python3 demos/benchmark_sweep.py
"""

import time

from atomsense.config import ExperimentConfig
from atomsense.runner import format_results, run_sweep


def main():
    rows_by_mode = {}
    for mode in ("classic", "fixed", "pds"):
        cfg = ExperimentConfig(
            trials=40,
            grid_s=1 << 15,
            trajectory_samples=1024,
            sweep_variable="snr",
            sweep_values=(50.0, 56.0, 62.0),
            sweep_centering="centered",
            base_seed=7,
            trajectory_mode=mode,
        )
        start = time.time()
        rows_by_mode[mode] = run_sweep(cfg, n_jobs=2)
        print(f"{mode}: swept {len(cfg.sweep_values)} points x {cfg.trials} trials "
              f"in {time.time()-start:.1f} s")

    for mode, rows in rows_by_mode.items():
        print(f"\n--- {mode} ---")
        print(format_results(rows, "csv"))


if __name__ == "__main__":
    main()
