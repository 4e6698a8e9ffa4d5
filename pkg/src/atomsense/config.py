"""Flat key-value experiment configuration with explicit units.

Lines look like ``bandwidth = 150 MHz`` or ``trials = 300``; ``#`` starts a
comment.  Frequency and power keys require a unit suffix, dimensionless
keys reject one.  Omitted keys fall back to the reference hardware
defaults, unknown keys are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from scipy.constants import e as q_e, physical_constants

from atomsense.errors import ConfigError
from atomsense.physics import TWO_PI

_A0 = physical_constants["Bohr radius"][0]

# unit token -> (kind, scale); "dB" style units convert via 10^(x/10)
_LINEAR_UNITS = {
    "Hz": ("frequency", 1.0),
    "kHz": ("frequency", 1e3),
    "MHz": ("frequency", 1e6),
    "GHz": ("frequency", 1e9),
    "s": ("time", 1.0),
    "ms": ("time", 1e-3),
    "us": ("time", 1e-6),
    "µs": ("time", 1e-6),
    "ns": ("time", 1e-9),
    "m": ("length", 1.0),
    "cm": ("length", 1e-2),
    "mm": ("length", 1e-3),
    "km": ("length", 1e3),
    "nm": ("length", 1e-9),
    "W": ("power", 1.0),
    "mW": ("power", 1e-3),
    "uW": ("power", 1e-6),
    "µW": ("power", 1e-6),
    "K": ("temperature", 1.0),
    "Ohm": ("resistance", 1.0),
    "kOhm": ("resistance", 1e3),
    "m^-3": ("density", 1.0),
    "m^2": ("area", 1.0),
    "qa0": ("dipole", q_e * _A0),
    "Cm": ("dipole", 1.0),
}
_DB_UNITS = {
    "dB": "ratio",
    "dBi": "gain",
    "dBW": "power",
    "dBsm": "area",
}


def _parse_quantity(key, text):
    parts = text.split()
    if len(parts) == 1:
        return float(parts[0]), None
    if len(parts) != 2:
        raise ConfigError(f"cannot parse value for '{key}': {text!r}")
    value = float(parts[0])
    unit = parts[1]
    if unit in _DB_UNITS:
        return 10.0 ** (value / 10.0), _DB_UNITS[unit]
    if unit not in _LINEAR_UNITS:
        raise ConfigError(f"unknown unit '{unit}' for key '{key}'")
    kind, scale = _LINEAR_UNITS[unit]
    return value * scale, kind


def _require(key, text, kinds):
    value, kind = _parse_quantity(key, text)
    if kind is None:
        raise ConfigError(
            f"key '{key}' needs an explicit unit ({'/'.join(sorted(kinds))}); got {text!r}"
        )
    if kind not in kinds:
        raise ConfigError(f"key '{key}' expects a {'/'.join(sorted(kinds))} unit, got {kind}")
    return value


def _bare(key, text):
    value, kind = _parse_quantity(key, text)
    if kind is not None:
        raise ConfigError(f"key '{key}' is dimensionless; drop the unit")
    return value


_TRAJECTORY_MODES = ("classic", "fixed", "itn_limited", "pds")
_SWEEP_VARIABLES = ("snr", "p_avg", "bandwidth", "range")
_RANGE_MODES = ("fixed", "ladder", "uniform")
_SWEEP_CENTERING = ("resonant_start", "centered")


@dataclass
class ExperimentConfig:
    """Fully resolved harness configuration (internal units: SI, rad/s)."""

    # atoms
    probe_rabi: float = TWO_PI * 5.8e6
    coupling_rabi: float = TWO_PI * 1.0e6
    gamma2: float = TWO_PI * 5.2e6
    gamma3: float = TWO_PI * 1e3
    gamma4: float = TWO_PI * 1e3
    mu12: float = 2.586 * q_e * _A0
    mu34: float = 2409.0 * q_e * _A0
    atom_density: float = 4.89e16
    cell_length: float = 0.02
    probe_wavelength: float = 852e-9
    probe_power: float = 120e-6
    load_impedance: float = 2e3
    quantum_efficiency: float = 0.8
    transition_frequency: float = TWO_PI * 3.212e9
    # waveform
    start_frequency: float = TWO_PI * 3.212e9
    bandwidth: float = 150e6
    symbol_duration: float = 1e-3
    sweep_centering: str = "resonant_start"
    # geometry
    target_range: float = 1e3
    reference_distance: float = 1.0
    tx_gain: float = 10.0
    tx_ref_gain: float = 1e-3
    rx_gain: float = 10.0
    lna_gain: float = 1.0
    cross_section: float = 10.0
    noise_temperature: float = 290.0
    etn_temperature: float = 0.0
    # power / trajectory
    average_power: float = 1.5
    trajectory_mode: str = "fixed"
    trajectory_samples: int = 4096
    # sweep
    sweep_variable: str = "snr"
    sweep_values: tuple = ()
    # run control
    trials: int = 300
    base_seed: int = 1234
    grid_s: int = 1 << 18
    noiseless: bool = False
    range_mode: str = "fixed"
    range_min: float = 100.0
    range_max: float = 1e4
    m_targets: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.trajectory_mode not in _TRAJECTORY_MODES:
            raise ConfigError(f"trajectory_mode must be one of {_TRAJECTORY_MODES}")
        if self.sweep_variable not in _SWEEP_VARIABLES:
            raise ConfigError(f"sweep_variable must be one of {_SWEEP_VARIABLES}")
        if self.range_mode not in _RANGE_MODES:
            raise ConfigError(f"range_mode must be one of {_RANGE_MODES}")
        if self.sweep_centering not in _SWEEP_CENTERING:
            raise ConfigError(f"sweep_centering must be one of {_SWEEP_CENTERING}")
        vals = tuple(float(v) for v in self.sweep_values)
        if not vals:
            vals = _default_sweep(self.sweep_variable)
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ConfigError("sweep values must be strictly increasing")
        object.__setattr__(self, "sweep_values", vals)


def _default_sweep(variable):
    if variable == "snr":
        return tuple(float(v) for v in range(26, 41, 2))
    if variable == "p_avg":
        return (-10.0, -5.0, 0.0, 4.0, 8.0)
    if variable == "bandwidth":
        return (10e6, 40e6, 100e6, 150e6, 300e6)
    return (100.0, 1e3, 1e4)


_FREQ_KEYS = {
    "probe_rabi", "coupling_rabi", "gamma2", "gamma3", "gamma4",
    "transition_frequency", "start_frequency", "bandwidth",
}
_POWER_KEYS = {"probe_power", "average_power"}
_SPEC = {
    # key: (parser kind, target attribute, angular?)
    "probe_rabi": ("frequency", True),
    "coupling_rabi": ("frequency", True),
    "gamma2": ("frequency", True),
    "gamma3": ("frequency", True),
    "gamma4": ("frequency", True),
    "transition_frequency": ("frequency", True),
    "start_frequency": ("frequency", True),
    "bandwidth": ("frequency", False),
    "symbol_duration": ("time", False),
    "mu12": ("dipole", False),
    "mu34": ("dipole", False),
    "atom_density": ("density", False),
    "cell_length": ("length", False),
    "probe_wavelength": ("length", False),
    "probe_power": ("power", False),
    "load_impedance": ("resistance", False),
    "target_range": ("length", False),
    "reference_distance": ("length", False),
    "range_min": ("length", False),
    "range_max": ("length", False),
    "tx_gain": ("gain", False),
    "tx_ref_gain": ("gain", False),
    "rx_gain": ("gain", False),
    "lna_gain": ("ratio", False),
    "cross_section": ("area", False),
    "noise_temperature": ("temperature", False),
    "etn_temperature": ("temperature", False),
    "average_power": ("power", False),
}
_BARE_KEYS = {
    "quantum_efficiency": float,
    "trials": int,
    "base_seed": int,
    "grid_s": int,
    "trajectory_samples": int,
    "m_targets": int,
}
_ENUM_KEYS = {
    "trajectory_mode": _TRAJECTORY_MODES,
    "sweep_variable": _SWEEP_VARIABLES,
    "range_mode": _RANGE_MODES,
    "sweep_centering": _SWEEP_CENTERING,
}


def _parse_sweep_values(variable, text):
    items = [chunk.strip() for chunk in text.split(",") if chunk.strip()]
    values = []
    for item in items:
        if variable == "snr":
            # plain dB numbers on the shared received-SNR axis
            v = item.split()
            if len(v) == 2 and v[1] == "dB":
                values.append(float(v[0]))
            elif len(v) == 1:
                values.append(float(v[0]))
            else:
                raise ConfigError(f"sweep value {item!r} should be a dB number")
        elif variable == "p_avg":
            v = item.split()
            if len(v) == 2 and v[1] == "dBW":
                values.append(float(v[0]))
            elif len(v) == 1:
                values.append(float(v[0]))
            else:
                raise ConfigError(f"sweep value {item!r} should be a dBW number")
        elif variable == "bandwidth":
            values.append(_require("sweep_values", item, {"frequency"}))
        else:
            values.append(_require("sweep_values", item, {"length"}))
    return tuple(values)


def validate_config(text) -> ExperimentConfig:
    """Parse configuration text into a fully populated ExperimentConfig."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {body!r}")
        key, value = (part.strip() for part in body.split("=", 1))
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key '{key}'")
        raw[key] = value

    fields = {}
    sweep_variable = raw.get("sweep_variable", "snr").strip()
    for key, value in raw.items():
        if key in _SPEC:
            kind, angular = _SPEC[key]
            parsed = _require(key, value, {kind})
            fields[key] = TWO_PI * parsed if angular else parsed
        elif key in _BARE_KEYS:
            fields[key] = _BARE_KEYS[key](_bare(key, value))
        elif key in _ENUM_KEYS:
            if value not in _ENUM_KEYS[key]:
                raise ConfigError(f"key '{key}' must be one of {_ENUM_KEYS[key]}, got {value!r}")
            fields[key] = value
        elif key == "noiseless":
            if value not in ("true", "false"):
                raise ConfigError("noiseless must be 'true' or 'false'")
            fields[key] = value == "true"
        elif key == "sweep_values":
            fields[key] = _parse_sweep_values(sweep_variable, value)
        else:
            raise ConfigError(f"unknown key '{key}'")
    try:
        return ExperimentConfig(**fields)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return validate_config(fh.read())
