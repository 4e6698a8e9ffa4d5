"""Four-level quantum response of a Rydberg atomic receiver.

Closed-form steady-state response (probe coherence, optical transmission,
gain slope, sensitivity ratio) plus a Lindblad master-equation integrator
used as a ground-truth oracle for the closed forms.

All frequencies are angular (rad/s) throughout the package; conversion from
Hz happens only at the configuration boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.constants import c, e as q_e, epsilon_0, hbar
from scipy.integrate import solve_ivp

from atomsense.errors import IntegrationFailure, ValidationError

TWO_PI = 2.0 * np.pi

# Default decay rates for the two long-lived Rydberg levels.  Only the
# intermediate-state rate is part of the reference hardware set; these are
# needed by the dynamical model and are overridable.
DEFAULT_GAMMA3 = TWO_PI * 1e3
DEFAULT_GAMMA4 = TWO_PI * 1e3


@dataclass(frozen=True)
class AtomicSystem:
    """Laser, atom, and photodetector parameters of the receiver.

    Rabi frequencies and decay rates are angular (rad/s); dipole moments in
    C*m; densities in 1/m^3; lengths in m.
    """

    omega_p_rabi: float
    omega_c_rabi: float
    gamma2: float
    mu12: float
    mu34: float
    n_atoms: float
    cell_length: float
    lambda_probe: float
    p_in: float
    r_load: float
    quantum_eff: float
    omega34: float
    gamma3: float = DEFAULT_GAMMA3
    gamma4: float = DEFAULT_GAMMA4

    def __post_init__(self):
        positive = {
            "omega_p_rabi": self.omega_p_rabi,
            "omega_c_rabi": self.omega_c_rabi,
            "gamma2": self.gamma2,
            "gamma3": self.gamma3,
            "gamma4": self.gamma4,
            "mu12": self.mu12,
            "mu34": self.mu34,
            "n_atoms": self.n_atoms,
            "cell_length": self.cell_length,
            "lambda_probe": self.lambda_probe,
            "p_in": self.p_in,
            "r_load": self.r_load,
            "omega34": self.omega34,
        }
        for name, value in positive.items():
            if not value > 0.0:
                raise ValidationError(f"{name} must be strictly positive, got {value!r}")
        if not 0.0 < self.quantum_eff <= 1.0:
            raise ValidationError(
                f"quantum_eff must lie in (0, 1], got {self.quantum_eff!r}"
            )


@dataclass(frozen=True)
class DerivedConstants:
    """Response-polynomial coefficients and readout scales of an AtomicSystem.

    ``a1 .. c3`` are the numerator/denominator coefficients of the
    steady-state probe coherence, ``c0`` the dimensionless absorption scale,
    ``v_in`` the photodetector voltage for full probe transmission, and
    ``k_p`` the probe wavenumber.
    """

    a1: float
    b1: float
    c0: float
    c1: float
    c2: float
    c3: float
    v_in: float
    k_p: float


def derive_constants(atoms: AtomicSystem) -> DerivedConstants:
    """Compute the response coefficients and readout scales of ``atoms``."""
    op, oc = atoms.omega_p_rabi, atoms.omega_c_rabi
    g2 = atoms.gamma2
    k_p = TWO_PI / atoms.lambda_probe
    c0 = 2.0 * atoms.n_atoms * atoms.mu12**2 * k_p * atoms.cell_length / (
        epsilon_0 * hbar * op
    )
    omega_probe = TWO_PI * c / atoms.lambda_probe
    v_in = atoms.r_load * q_e * atoms.quantum_eff * atoms.p_in / (hbar * omega_probe)
    return DerivedConstants(
        a1=2.0 * op * oc**2,
        b1=g2 * op,
        c0=c0,
        c1=2.0 * op**2 + g2**2,
        c2=2.0 * op**2 * (oc**2 + op**2),
        c3=4.0 * (oc**2 + op**2) ** 2,
        v_in=v_in,
        k_p=k_p,
    )


def _check_omega(omega):
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0.0):
        raise ValidationError("Rabi frequency must be nonnegative")
    return omega


def _absorption_exponent(omega, delta, k: DerivedConstants):
    """B1*C0*W^4 / (C1*W^4 + C2*W^2 + C3*D^2), with the W -> 0 limit of 0."""
    o2 = omega * omega
    o4 = o2 * o2
    denom = k.c1 * o4 + k.c2 * o2 + k.c3 * np.asarray(delta, dtype=float) ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        expo = np.where(denom > 0.0, k.b1 * k.c0 * o4 / np.where(denom > 0.0, denom, 1.0), 0.0)
    return expo, denom


def transmission_pi(omega, delta, k: DerivedConstants):
    """Photodetector voltage for composite drive (omega, delta).

    Returns ``v_in * exp(-B1 C0 W^4 / (C1 W^4 + C2 W^2 + C3 D^2))``; the
    zero-drive value is ``v_in`` (full probe transmission), taken as the
    analytic limit along W -> 0 for every detuning including zero.
    """
    omega = _check_omega(omega)
    expo, _ = _absorption_exponent(omega, delta, k)
    return k.v_in * np.exp(-expo)


def gain_upsilon(omega, delta, k: DerivedConstants):
    """Slope of the transmission voltage w.r.t. the drive Rabi frequency.

    Closed-form partial derivative of :func:`transmission_pi`; nonpositive
    everywhere (absorption deepens with drive), and zero at zero drive.
    Units: V per (rad/s).
    """
    omega = _check_omega(omega)
    delta = np.asarray(delta, dtype=float)
    expo, denom = _absorption_exponent(omega, delta, k)
    o2 = omega * omega
    o3 = o2 * omega
    with np.errstate(invalid="ignore", divide="ignore"):
        safe = np.where(denom > 0.0, denom, 1.0)
        ratio = np.where(
            denom > 0.0,
            (o3 / safe) * ((k.c2 * o2 + 2.0 * k.c3 * delta**2) / safe),
            0.0,
        )
    return -2.0 * k.v_in * k.b1 * k.c0 * np.exp(-expo) * ratio


def gain_curvature(omega, delta, k: DerivedConstants):
    """Second derivative of the transmission voltage w.r.t. Rabi frequency.

    Needed by the power-trajectory gradient; validated against finite
    differences of :func:`gain_upsilon` in the test suite.
    """
    omega = _check_omega(omega)
    delta = np.asarray(delta, dtype=float)
    o2 = omega * omega
    o3 = o2 * omega
    o4 = o2 * o2
    d2 = delta**2
    denom = k.c1 * o4 + k.c2 * o2 + k.c3 * d2
    expo, _ = _absorption_exponent(omega, delta, k)
    pi_val = k.v_in * np.exp(-expo)
    e = k.b1 * k.c0
    with np.errstate(invalid="ignore", divide="ignore"):
        safe = np.where(denom > 0.0, denom, 1.0)
        live = denom > 0.0
        u_p = np.where(live, 2.0 * o3 * (k.c2 * o2 + 2.0 * k.c3 * d2) / safe**2, 0.0)
        d_p = 4.0 * k.c1 * o3 + 2.0 * k.c2 * omega
        u_pp_a = np.where(live, (10.0 * k.c2 * o4 + 12.0 * k.c3 * d2 * o2) / safe**2, 0.0)
        # keep intermediate magnitudes moderate: (x/D^2) * (y/D)
        u_pp_b = np.where(
            live,
            (4.0 * o3 * (k.c2 * o2 + 2.0 * k.c3 * d2) / safe**2) * (d_p / safe),
            0.0,
        )
    u_pp = u_pp_a - u_pp_b
    return pi_val * e * (e * u_p**2 - u_pp)


def kappa(omega, delta, k: DerivedConstants):
    """Shot-noise-limited sensitivity ratio |Upsilon * W| / sqrt(Pi)."""
    omega = _check_omega(omega)
    return np.abs(gain_upsilon(omega, delta, k) * omega) / np.sqrt(
        transmission_pi(omega, delta, k)
    )


def steady_rho12(omega_rf, delta_rf, k: DerivedConstants):
    """Steady-state probe coherence of the driven four-level ladder.

    ``(A1 W^2 D + j B1 W^4) / (C1 W^4 + C2 W^2 + C3 D^2)`` with the
    zero-drive limit 0; its imaginary part (absorption) is nonnegative and
    its real part (dispersion) is odd in the detuning.  Validated against
    the exact generator null space in the vanishing-Rydberg-decay limit.
    """
    omega_rf = _check_omega(omega_rf)
    delta_rf = np.asarray(delta_rf, dtype=float)
    o2 = omega_rf * omega_rf
    o4 = o2 * o2
    d2 = delta_rf**2
    denom = k.c1 * o4 + k.c2 * o2 + k.c3 * d2
    num = k.a1 * o2 * delta_rf + 1j * k.b1 * o4
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(denom > 0.0, num / np.where(denom > 0.0, denom, 1.0), 0.0 + 0.0j)
    return out if out.ndim else complex(out)


@dataclass
class DensityMatrixState:
    """A 4x4 density matrix snapshot."""

    rho: np.ndarray

    def validate(self, tol=1e-9):
        herm = np.max(np.abs(self.rho - self.rho.conj().T))
        tr = abs(np.trace(self.rho).real - 1.0) + abs(np.trace(self.rho).imag)
        if herm > tol or tr > tol:
            raise ValidationError(
                f"density matrix invariant violated (hermiticity {herm:.2e}, trace {tr:.2e})"
            )

    @property
    def rho12(self):
        return self.rho[0, 1]


@dataclass
class LindbladTrajectory:
    """Sampled solution of the master equation."""

    times: np.ndarray
    states: list
    atoms: AtomicSystem

    @property
    def rho12(self):
        return np.array([s.rho[0, 1] for s in self.states])


def ground_state():
    rho0 = np.zeros((4, 4), dtype=complex)
    rho0[0, 0] = 1.0
    return rho0


def _lindblad_rhs(rho, omega_rf, delta_rf, atoms: AtomicSystem):
    op, oc = atoms.omega_p_rabi, atoms.omega_c_rabi
    g2, g3, g4 = atoms.gamma2, atoms.gamma3, atoms.gamma4
    h = 0.5 * np.array(
        [
            [0.0, op, 0.0, 0.0],
            [op, 0.0, oc, 0.0],
            [0.0, oc, 0.0, omega_rf],
            [0.0, 0.0, omega_rf, -2.0 * delta_rf],
        ],
        dtype=complex,
    )
    drho = -1j * (h @ rho - rho @ h)
    # Relaxation: population cascade 2->1 (g2), 3->2 (g3), 4->1 (g4) with the
    # matching coherence decays (gamma_i + gamma_j)/2.
    r = rho
    diss = np.empty((4, 4), dtype=complex)
    g = (0.0, g2, g3, g4)
    for i in range(4):
        for j in range(4):
            if i != j:
                diss[i, j] = -0.5 * (g[i] + g[j]) * r[i, j]
    diss[0, 0] = g2 * r[1, 1] + g4 * r[3, 3]
    diss[1, 1] = g3 * r[2, 2] - g2 * r[1, 1]
    diss[2, 2] = -g3 * r[2, 2]
    diss[3, 3] = -g4 * r[3, 3]
    return drho + diss


def _generator_parts(atoms: AtomicSystem):
    """Split the generator as G(t) = G0 + omega_rf(t) G1 + delta_rf(t) G2.

    The master equation is linear in the drive Rabi frequency and detuning,
    so the vectorized right-hand side reduces to one 16x16 matrix-vector
    product per evaluation.
    """
    basis = np.zeros((16, 4, 4), dtype=complex)
    for n in range(16):
        basis[n, n // 4, n % 4] = 1.0
    g0 = np.zeros((16, 16), dtype=complex)
    g1 = np.zeros((16, 16), dtype=complex)
    g2m = np.zeros((16, 16), dtype=complex)
    for n in range(16):
        base = _lindblad_rhs(basis[n], 0.0, 0.0, atoms).reshape(-1)
        with_o = _lindblad_rhs(basis[n], 1.0, 0.0, atoms).reshape(-1)
        with_d = _lindblad_rhs(basis[n], 0.0, 1.0, atoms).reshape(-1)
        g0[:, n] = base
        g1[:, n] = with_o - base
        g2m[:, n] = with_d - base
    return g0, g1, g2m


def integrate_lindblad(
    drive,
    atoms: AtomicSystem,
    t_span,
    n_steps: int,
    rho0=None,
    method="RK45",
    rtol=1e-8,
    atol=1e-11,
    invariant_tol=1e-9,
    segments=32,
) -> LindbladTrajectory:
    """Integrate the master equation under a time-varying composite drive.

    ``drive(t)`` returns ``(omega_rf, delta_rf)`` at time t.  The integrator
    is adaptive explicit Runge-Kutta with the step bounded by 0.05 over the
    fastest angular scale present (probed per segment), so the quickest
    coherent oscillation is always resolved.  The returned trajectory holds
    ``n_steps`` uniformly spaced snapshots; Hermiticity and unit trace are
    checked at every snapshot.
    """
    if n_steps < 2:
        raise ValidationError("n_steps must be at least 2")
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ValidationError("t_span must be increasing")
    times = np.linspace(t0, t1, n_steps)
    if rho0 is None:
        rho0 = ground_state()

    g0, g1, g2m = _generator_parts(atoms)
    floor = max(atoms.omega_p_rabi, atoms.omega_c_rabi, atoms.gamma2)

    def rhs(t, y):
        o, d = drive(t)
        gen = g0 + o * g1 + d * g2m
        return (gen @ y.view(complex)).view(float)

    edges = np.linspace(t0, t1, segments + 1)
    y = rho0.reshape(-1).view(float).copy()
    out = np.empty((n_steps, 16), dtype=complex)
    filled = 0
    for si in range(segments):
        a, b = edges[si], edges[si + 1]
        scale = floor
        for t in np.linspace(a, b, 9):
            o, d = drive(t)
            scale = max(scale, abs(o), abs(d))
        if si == 0:
            t_eval = times[(times >= a) & (times <= b)]
        else:
            t_eval = times[(times > a) & (times <= b)]
        # Always land exactly on the segment edge so the state hands over.
        wants_edge = t_eval.size == 0 or t_eval[-1] < b
        pts = np.append(t_eval, b) if wants_edge else t_eval
        sol = solve_ivp(
            rhs,
            (a, b),
            y,
            method=method,
            t_eval=pts,
            max_step=0.05 / scale,
            rtol=rtol,
            atol=atol,
        )
        if not sol.success:
            raise IntegrationFailure(f"master-equation solve failed: {sol.message}")
        cols = sol.y.shape[1] - (1 if wants_edge else 0)
        for i in range(cols):
            out[filled + i, :] = sol.y[:, i].copy().view(complex)
        filled += cols
        y = sol.y[:, -1].copy()

    states = []
    for idx in range(n_steps):
        rho = out[idx, :].reshape(4, 4)
        state = DensityMatrixState(rho)
        try:
            state.validate(invariant_tol)
        except ValidationError as exc:
            raise IntegrationFailure(
                f"state invariant violated at step {idx}: {exc}", step_index=idx
            ) from exc
        states.append(state)
    return LindbladTrajectory(times=times, states=states, atoms=atoms)


def steady_state_ode(
    omega_rf,
    delta_rf,
    atoms: AtomicSystem,
    window=None,
    rel_tol=1e-4,
    max_windows=40,
):
    """Run the master equation under constant drive until rho12 settles.

    Integrates in growing windows until the probe coherence changes by less
    than ``rel_tol`` (relative to its running magnitude) between window ends.
    Returns the final DensityMatrixState.
    """
    if window is None:
        window = 30.0 / atoms.gamma2
    rho = ground_state()
    t = 0.0
    prev = None
    drive = lambda _t: (omega_rf, delta_rf)
    for _ in range(max_windows):
        traj = integrate_lindblad(drive, atoms, (t, t + window), 2, rho0=rho, segments=1)
        rho = traj.states[-1].rho
        cur = rho[0, 1]
        if prev is not None:
            ref = max(abs(cur), 1e-12)
            if abs(cur - prev) <= rel_tol * ref:
                return traj.states[-1]
        prev = cur
        t += window
        window *= 1.3
    return DensityMatrixState(rho)


def steady_state_nullspace(omega_rf, delta_rf, atoms: AtomicSystem):
    """Exact steady state of the constant-drive generator (linear solve).

    Cross-check utility for the ODE route: builds the 16x16 generator,
    replaces one row by the trace constraint, and solves.
    """
    g0, g1, g2m = _generator_parts(atoms)
    gen = g0 + omega_rf * g1 + delta_rf * g2m
    # Replace the last equation with trace(rho) = 1.
    gen[15, :] = 0.0
    gen[15, [0, 5, 10, 15]] = 1.0
    rhs = np.zeros(16, dtype=complex)
    rhs[15] = 1.0
    rho = np.linalg.solve(gen, rhs).reshape(4, 4)
    return DensityMatrixState(rho)
