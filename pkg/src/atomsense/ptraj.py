"""Transmission power-trajectory design for sensitivity maximization.

Contains the per-sample SNR decomposition (external-noise-limited,
shot-noise-limited, and their harmonic combination), the closed-form
shot-noise-limited trajectory that tracks the optimal drive strength across
the detuning sweep, and a primal-dual subgradient refinement under an
average-power budget and nonnegativity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.constants import e as q_e, hbar

from atomsense.errors import FeasibilityError, ValidationError
from atomsense.physics import (
    derive_constants,
    gain_curvature,
    gain_upsilon,
    transmission_pi,
)
from atomsense.scene import PowerTrajectory, SensingScene, detuning_trajectory, time_grid


@dataclass
class SnrBreakdown:
    """Per-sample SNR split by noise source (dimensionless, symbol-integrated)."""

    snr_etn: np.ndarray
    snr_itn: np.ndarray
    snr_total: np.ndarray
    envelope_sq: np.ndarray


def _drive_arrays(scene: SensingScene, power):
    atoms = scene.atoms
    ch = scene.channel
    t = time_grid(scene.waveform.symbol_duration, power.size)
    delta = detuning_trajectory(scene.waveform, ch, atoms, t)
    coeff = atoms.mu34 / hbar
    omega_r = coeff * np.sqrt(2.0 * scene.z0 * power * scene.geometry.g_tx_ref * ch.h_ref**2)
    return t, delta, omega_r, coeff, ch


def snr_breakdown(p: PowerTrajectory, scene: SensingScene) -> SnrBreakdown:
    """Evaluate both SNR branches and their harmonic total on the trajectory grid."""
    power = np.asarray(p.samples, dtype=float)
    t, delta, omega_r, coeff, ch = _drive_arrays(scene, power)
    k = derive_constants(scene.atoms)
    ups = gain_upsilon(omega_r, delta, k)
    pi_v = transmission_pi(omega_r, delta, k)
    e_i_sq = scene.etn_intensity()
    big_t = scene.waveform.symbol_duration
    es_sq = 2.0 * scene.z0 * power * scene.geometry.g_tx * ch.h**2
    sigma_etn = coeff**2 * ups**2 * e_i_sq
    sigma_itn = q_e * scene.atoms.r_load * pi_v
    signal = coeff**2 * ups**2 * es_sq * big_t
    with np.errstate(divide="ignore", invalid="ignore"):
        snr_etn = np.where(sigma_etn > 0.0, signal / np.where(sigma_etn > 0.0, sigma_etn, 1.0), np.inf)
        snr_etn = np.where(signal == 0.0, 0.0, snr_etn)
    snr_itn = signal / sigma_itn
    snr_total = signal / (sigma_etn + sigma_itn)
    env_sq = np.where(
        power > 0.0,
        coeff**2 * ups**2 * 2.0 * scene.z0 * power * scene.geometry.g_tx
        / (sigma_etn + sigma_itn),
        0.0,
    )
    return SnrBreakdown(snr_etn=snr_etn, snr_itn=snr_itn, snr_total=snr_total,
                        envelope_sq=env_sq)


def k_coefficients(k) -> tuple:
    """Closed-form drive-strength coefficients of the shot-noise optimum.

    ``k1`` scales the off-resonant square-root law (optimal Rabi frequency
    sqrt(k1 |detuning|)); ``k2`` is the resonant optimum itself.
    """
    cb = k.c0 * k.b1
    root = np.sqrt(cb * cb + 16.0 * k.c1**2) - cb
    k1 = np.sqrt(k.c3 / (4.0 * k.c1**2) * root)
    k2 = np.sqrt(k.c2 / (4.0 * k.c1**2) * root)
    return float(k1), float(k2)


def power_for_rabi_sq(omega_sq, scene: SensingScene):
    """Transmit power that produces the given squared reference Rabi frequency."""
    ch = scene.channel
    return (
        hbar**2
        * omega_sq
        / (2.0 * scene.atoms.mu34**2 * scene.z0 * scene.geometry.g_tx_ref * ch.h_ref**2)
    )


def itn_limited_trajectory(scene: SensingScene, s_count=4096) -> PowerTrajectory:
    """Closed-form shot-noise-limited power trajectory.

    Holds the resonant optimum while |detuning| is below the crossover
    ``k2^2/k1`` and follows the linear-in-|detuning| law beyond it; the two
    branches agree at the crossover by construction.  The budget recorded on
    the result is the scene budget; the trajectory itself may use less.
    """
    k = derive_constants(scene.atoms)
    k1, k2 = k_coefficients(k)
    t = time_grid(scene.waveform.symbol_duration, s_count)
    delta = np.abs(detuning_trajectory(scene.waveform, scene.channel, scene.atoms, t))
    omega_sq = np.where(delta <= k2**2 / k1, k2**2, k1 * delta)
    power = power_for_rabi_sq(omega_sq, scene)
    budget = scene.trajectory.p_avg_budget
    if power.mean() > budget:
        # Projectable form for downstream refinement; scale into the budget.
        power = power * (budget / power.mean()) * (1.0 - 1e-12)
    return PowerTrajectory(power, p_avg_budget=budget, provenance="itn_limited")


def envelope_gradient(power, scene: SensingScene):
    """d(envelope^2)/d(power) per sample, by the chain rule.

    The square-root power-to-Rabi map cancels analytically, so the result
    is finite at zero power (where it vanishes with the readout slope).
    """
    power = np.asarray(power, dtype=float)
    if np.any(power < 0.0):
        raise ValidationError("power must be nonnegative")
    t, delta, omega_r, coeff, ch = _drive_arrays(scene, power)
    k = derive_constants(scene.atoms)
    ups = gain_upsilon(omega_r, delta, k)
    d_ups = gain_curvature(omega_r, delta, k)
    pi_v = transmission_pi(omega_r, delta, k)
    e_i_sq = scene.etn_intensity()
    b_etn = coeff**2 * e_i_sq
    sigma_sq = b_etn * ups**2 + q_e * scene.atoms.r_load * pi_v
    d_sigma = b_etn * 2.0 * ups * d_ups + q_e * scene.atoms.r_load * ups
    a_sq = 2.0 * scene.z0 * scene.geometry.g_tx * coeff**2
    return a_sq * (
        ups**2 * sigma_sq
        + 0.5 * omega_r * (2.0 * ups * d_ups * sigma_sq - ups**2 * d_sigma)
    ) / sigma_sq**2


@dataclass
class PdsOptions:
    beta: float = 10.0
    step0: float | None = None
    max_iter: int = 5000
    tol: float = 1e-7
    tol_window: int = 50
    feas_tol: float = 1e-6


@dataclass
class PdsState:
    """Iterate snapshot of the primal-dual subgradient loop."""

    p: np.ndarray
    nu: np.ndarray
    upsilon: float
    beta: float
    step: float
    iter: int


def _mean_env_sq(power, scene):
    return float(np.mean(snr_breakdown_power(power, scene)))


def snr_breakdown_power(power, scene):
    traj = PowerTrajectory(np.maximum(power, 0.0), p_avg_budget=np.inf, provenance="fixed")
    return snr_breakdown(traj, scene).envelope_sq


def project_feasible(power, p_avg):
    """Clip negatives and rescale into the average-power budget."""
    p = np.maximum(np.asarray(power, dtype=float), 0.0)
    mean = p.mean()
    if mean > p_avg:
        p = p * (p_avg / mean)
    return p


def pds_optimize(p_init: PowerTrajectory, scene: SensingScene,
                 opts: PdsOptions | None = None):
    """Primal-dual subgradient ascent of the mean squared envelope.

    Works in power units normalized by the budget; the augmented Lagrangian
    couples the (averaged) budget overshoot and per-sample negativity with
    their multipliers.  Returns ``(trajectory, info)`` where the trajectory
    is the best feasible iterate seen (never worse than the projected
    initialization) and ``info`` carries the final PdsState and objective.
    """
    opts = opts or PdsOptions()
    p_avg = scene.trajectory.p_avg_budget
    s = p_init.samples.size
    p0 = project_feasible(p_init.samples, p_avg)
    g_scale = abs(_mean_env_sq(p0, scene))
    if g_scale <= 0.0:
        g_scale = 1.0

    def objective(p_watts):
        return _mean_env_sq(p_watts, scene)

    x = p0 / p_avg
    nu = np.zeros(s)
    upsilon = 0.0
    best_obj = objective(p0)
    best_x = x.copy()
    history = [best_obj]

    def lagrangian_grad(xv, ups_m, nu_m):
        p_watts = xv * p_avg
        grad_env = envelope_gradient(np.maximum(p_watts, 0.0), scene) * p_avg / (s * g_scale)
        f = max(xv.mean() - 1.0, 0.0)
        hvec = np.maximum(-xv, 0.0)
        d_f = (1.0 / s) if f > 0.0 else 0.0
        d_h = np.where(xv < 0.0, -1.0, 0.0)
        grad = (
            -grad_env
            + (ups_m + 2.0 * opts.beta * f) * d_f
            + (nu_m + 2.0 * opts.beta * hvec) * d_h
        )
        return grad, f, hvec

    grad, f0, h0 = lagrangian_grad(x, upsilon, nu)
    gmax = np.max(np.abs(grad))
    # the first step moves no sample by more than 5% of the budget
    step0 = opts.step0 if opts.step0 is not None else (0.05 / gmax if gmax > 0 else 0.05)

    since_improve = 0
    it = 0
    for it in range(opts.max_iter):
        step = step0 / np.sqrt(1.0 + it)
        grad, f, hvec = lagrangian_grad(x, upsilon, nu)
        # trust region in normalized power keeps late-stage multiplier
        # spikes from launching unphysical excursions
        x = x - np.clip(step * grad, -0.25, 0.25)
        upsilon = upsilon + step * f
        nu = nu + step * hvec
        feasible = x.mean() <= 1.0 + opts.feas_tol and np.all(x >= -opts.feas_tol)
        if feasible:
            cand = project_feasible(x * p_avg, p_avg)
            obj = objective(cand)
            history.append(obj)
            if obj > best_obj:
                rel = (obj - best_obj) / max(abs(best_obj), 1e-300)
                best_obj = obj
                best_x = cand / p_avg
                since_improve = 0 if rel > opts.tol else since_improve + 1
            else:
                since_improve += 1
            if since_improve >= opts.tol_window and it > opts.tol_window:
                break
        else:
            since_improve += 1
    if best_x is None:
        raise FeasibilityError(
            "no feasible iterate found",
            state=PdsState(p=x * p_avg, nu=nu, upsilon=upsilon, beta=opts.beta,
                           step=step0, iter=it),
        )
    power = project_feasible(best_x * p_avg, p_avg)
    result = PowerTrajectory(power, p_avg_budget=p_avg, provenance="pds_optimized")
    info = {
        "objective": best_obj,
        "iterations": it + 1,
        "state": PdsState(p=power, nu=nu, upsilon=upsilon, beta=opts.beta,
                          step=step0, iter=it),
    }
    return result, info


def best_pds_trajectory(scene: SensingScene, s_count=4096,
                        opts: PdsOptions | None = None) -> PowerTrajectory:
    """Refine from both natural starts and keep the better optimum.

    The shot-noise-limited trajectory is the principled initialization; the
    constant-power start guards against budgets where the closed form is a
    poor seed.  Guarantees the result is at least as good as either start.
    """
    from atomsense.scene import fixed_trajectory

    p_avg = scene.trajectory.p_avg_budget
    inits = [
        itn_limited_trajectory(scene, s_count),
        fixed_trajectory(p_avg, s_count),
    ]
    best = None
    best_obj = -np.inf
    for init in inits:
        traj, info = pds_optimize(init, scene, opts)
        if info["objective"] > best_obj:
            best, best_obj = traj, info["objective"]
    return best
