"""Self-heterodyne Rydberg atomic receiver ranging toolkit.

Synthesizes the probe-laser voltage of a vapor-cell receiver driven by its
own reflected chirp, estimates target range with a two-stage nonlinear
least-squares solver, evaluates the matching estimation bounds, and designs
the transmit power trajectory that maximizes receiver sensitivity.
"""

from atomsense.physics import (
    AtomicSystem,
    DerivedConstants,
    derive_constants,
    gain_upsilon,
    integrate_lindblad,
    kappa,
    steady_rho12,
    transmission_pi,
)
from atomsense.scene import (
    ChannelState,
    Geometry,
    LfmWaveform,
    PowerTrajectory,
    SensingScene,
    build_channel,
    etn_intensity,
    instantaneous_bandwidth,
    lfm_phase,
)
from atomsense.signal import (
    ClassicRecord,
    ReceivedRecord,
    noise_psd,
    synthesize_classic,
    synthesize_selfheterodyne,
)
from atomsense.estimator import (
    MultiTargetEstimate,
    RangeEstimate,
    amplitude_estimate,
    coarse_estimate,
    estimate_classic,
    estimate_multi,
    estimate_range,
    newton_refine,
    objective_q,
)
from atomsense.crlb import FisherInfo, crlb_tau_asymptotic, crlb_tau_classic, fim_exact
from atomsense.ptraj import (
    SnrBreakdown,
    best_pds_trajectory,
    envelope_gradient,
    itn_limited_trajectory,
    k_coefficients,
    pds_optimize,
    snr_breakdown,
)
from atomsense.config import ExperimentConfig, load_config, validate_config
from atomsense.runner import ResultRow, emit_results, run_point, run_sweep

__version__ = "0.1.0"
