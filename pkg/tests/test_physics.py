"""Quantum-response closed forms against analytic limits and the exact
generator steady state."""

import numpy as np
import pytest
from scipy.constants import c, e as q_e, hbar

from atomsense.defaults import default_atoms
from atomsense.errors import IntegrationFailure, ValidationError
from atomsense.physics import (
    TWO_PI,
    derive_constants,
    gain_curvature,
    gain_upsilon,
    ground_state,
    integrate_lindblad,
    kappa,
    steady_rho12,
    steady_state_nullspace,
    steady_state_ode,
    transmission_pi,
)


def test_derived_coefficients_reproducible(atoms, constants):
    op, oc, g2 = atoms.omega_p_rabi, atoms.omega_c_rabi, atoms.gamma2
    assert abs(constants.c1 - (2 * op**2 + g2**2)) <= 1e-12 * constants.c1
    assert abs(constants.c2 - 2 * op**2 * (oc**2 + op**2)) <= 1e-12 * constants.c2
    assert abs(constants.c3 - 4 * (oc**2 + op**2) ** 2) <= 1e-12 * constants.c3
    assert constants.b1 > 0 and constants.c0 > 0


def test_b1_reference_value(constants):
    # 5.8 MHz probe Rabi frequency times 5.2 MHz decay (angular units).
    assert constants.b1 == pytest.approx((TWO_PI**2) * 30.16e12, rel=1e-12)


def test_c2_c3_degenerate_coupling():
    x = TWO_PI * 3e6
    a = default_atoms(omega_c_rabi=1e-30 * x, omega_p_rabi=x)
    k = derive_constants(a)
    assert k.c2 == pytest.approx(2 * x**4, rel=1e-9)
    assert k.c3 == pytest.approx(4 * x**4, rel=1e-9)


def test_v_in_independent_arithmetic(atoms, constants):
    # Same physics recomputed step by step with scalar arithmetic.
    omega_probe = 2.0 * np.pi * c / 852e-9
    i_out = q_e * 0.8 * 120e-6 / (hbar * omega_probe)
    assert constants.v_in == pytest.approx(2e3 * i_out, rel=1e-12)
    assert constants.k_p == pytest.approx(2.0 * np.pi / 852e-9, rel=1e-12)


def test_atomic_system_validation():
    with pytest.raises(ValidationError):
        default_atoms(p_in=-1.0)
    with pytest.raises(ValidationError):
        default_atoms(quantum_eff=0.0)
    with pytest.raises(ValidationError):
        default_atoms(quantum_eff=1.5)


def test_transmission_zero_drive_is_full(constants):
    for delta in (0.0, -3e6, 4e8):
        assert transmission_pi(0.0, delta, constants) == pytest.approx(
            constants.v_in, rel=1e-15
        )


def test_transmission_strong_drive_limit(atoms, constants):
    big = 1e6 * max(atoms.omega_p_rabi, atoms.omega_c_rabi)
    expect = constants.v_in * np.exp(-constants.b1 * constants.c0 / constants.c1)
    assert transmission_pi(big, 1e7, constants) == pytest.approx(expect, rel=1e-3)


def test_transmission_bounds(constants):
    om = np.logspace(4, 9, 40)
    de = np.linspace(-5e8, 5e8, 41)
    vals = transmission_pi(om[:, None], de[None, :], constants)
    assert np.all(vals > 0.0)
    assert np.all(vals <= constants.v_in)
    assert np.all(vals[0] < constants.v_in)


def test_negative_rabi_rejected(constants):
    with pytest.raises(ValidationError):
        transmission_pi(-1.0, 0.0, constants)
    with pytest.raises(ValidationError):
        gain_upsilon(np.array([1.0, -2.0]), 0.0, constants)
    with pytest.raises(ValidationError):
        steady_rho12(-5.0, 1.0, constants)


def test_gain_matches_finite_difference(constants):
    oms = np.logspace(6.3, 8.5, 20)
    des = np.logspace(4.5, 8.2, 20)
    worst = 0.0
    for o in oms:
        step = 1e-6 * o
        fd = (transmission_pi(o + step, des, constants)
              - transmission_pi(o - step, des, constants)) / (2 * step)
        an = gain_upsilon(o, des, constants)
        worst = max(worst, float(np.max(np.abs(fd - an) / np.abs(an))))
    assert worst < 1e-5


def test_gain_nonpositive_and_limits(atoms, constants):
    assert gain_upsilon(0.0, 2e6, constants) == 0.0
    om = np.logspace(3, 10, 50)
    de = np.logspace(3, 10, 50)
    assert np.all(gain_upsilon(om[:, None], de[None, :], constants) <= 0.0)
    big = 1e6 * max(atoms.omega_p_rabi, atoms.omega_c_rabi)
    scale = constants.v_in * constants.b1 * constants.c0
    assert abs(gain_upsilon(big, 1e6, constants)) < 1e-9 * scale / big * 10


def test_gain_curvature_matches_finite_difference(constants):
    for o in np.logspace(6.5, 8.3, 7):
        for d in np.logspace(5, 8, 7):
            step = 1e-6 * o
            fd = (gain_upsilon(o + step, d, constants)
                  - gain_upsilon(o - step, d, constants)) / (2 * step)
            an = gain_curvature(o, d, constants)
            assert an == pytest.approx(fd, rel=1e-5)


def test_kappa_zero_drive(constants):
    assert kappa(0.0, 0.0, constants) == 0.0
    assert kappa(0.0, 7e7, constants) == 0.0


def test_kappa_even_in_detuning(constants):
    om = np.logspace(5, 9, 30)
    de = np.logspace(4, 9, 30)
    left = kappa(om[:, None], de[None, :], constants)
    right = kappa(om[:, None], -de[None, :], constants)
    np.testing.assert_allclose(left, right, rtol=0.0, atol=0.0)


def _grid_argmax(fn, center, decades=2.0, points=160_000):
    grid = np.logspace(np.log10(center) - decades, np.log10(center) + decades, points)
    return grid[int(np.argmax(fn(grid)))]


def test_kappa_resonant_argmax_is_k2(constants):
    from atomsense.ptraj import k_coefficients

    _k1, k2 = k_coefficients(constants)
    arg = _grid_argmax(lambda g: kappa(g, 0.0, constants), k2)
    assert arg == pytest.approx(k2, rel=0.01)


def test_kappa_offresonant_argmax_tracks_sqrt_law(constants):
    from atomsense.ptraj import k_coefficients

    k1, k2 = k_coefficients(constants)
    delta = 100.0 * k2
    pred = np.sqrt(k1 * delta)
    arg = _grid_argmax(lambda g: kappa(g, delta, constants), pred)
    assert arg == pytest.approx(pred, rel=0.05)


def test_steady_rho12_resonant_is_imaginary(constants):
    for om in (1e6, 5e6, 8e7):
        val = steady_rho12(om, 0.0, constants)
        assert val.real == 0.0
        expect = constants.b1 / (constants.c1 + constants.c2 / om**2)
        assert val.imag == pytest.approx(expect, rel=1e-12)


def test_steady_rho12_zero_drive(constants):
    assert steady_rho12(0.0, 1e7, constants) == 0.0
    assert steady_rho12(0.0, 0.0, constants) == 0.0


def test_steady_rho12_absorption_positive(constants):
    om = np.logspace(4, 9, 40)
    de = np.linspace(-4e8, 4e8, 41)
    vals = steady_rho12(om[:, None], de[None, :], constants)
    assert np.all(vals.imag >= 0.0)


def test_steady_rho12_matches_generator_nullspace():
    # The closed form is the steady state in the vanishing-Rydberg-decay
    # limit; push the upper-level decays to the microhertz scale so the
    # comparison probes the algebra, not the decay floor.
    a = default_atoms(omega_p_rabi=TWO_PI * 6e6, omega_c_rabi=TWO_PI * 10e6,
                      gamma3=TWO_PI * 1e-3, gamma4=TWO_PI * 1e-3)
    k = derive_constants(a)
    for om_mhz in (0.5, 2.0, 5.0, 10.0):
        for de_mhz in (0.0, 2.0, -10.0, 40.0):
            o, d = TWO_PI * om_mhz * 1e6, TWO_PI * de_mhz * 1e6
            exact = steady_state_nullspace(o, d, a).rho12
            closed = steady_rho12(o, d, k)
            assert abs(closed.imag - exact.imag) <= 4e-3 * abs(exact.imag) + 1e-15
            assert abs(closed.real - exact.real) <= 1e-6 * abs(exact) + 1e-15


def test_transmission_matches_ode_steady_state(fig4_atoms):
    k = derive_constants(fig4_atoms)
    o, d = TWO_PI * 3e6, TWO_PI * 5e6
    state = steady_state_ode(o, d, fig4_atoms)
    v_ode = k.v_in * np.exp(-k.c0 * state.rho12.imag)
    assert transmission_pi(o, d, k) == pytest.approx(v_ode, rel=5e-3)


def test_lindblad_zero_drive_stays_ground():
    a = default_atoms(omega_p_rabi=1e-20, omega_c_rabi=1e-20)
    traj = integrate_lindblad(lambda t: (0.0, 0.0), a, (0.0, 1e-5), 8)
    for st in traj.states:
        assert abs(st.rho[0, 0] - 1.0) < 1e-12
        assert np.max(np.abs(st.rho - np.diag([1, 0, 0, 0.0]))) < 1e-12


def test_lindblad_constant_drive_converges(fig4_atoms):
    k = derive_constants(fig4_atoms)
    o, d = TWO_PI * 2e6, TWO_PI * 5e6
    state = steady_state_ode(o, d, fig4_atoms)
    closed = steady_rho12(o, d, k)
    assert state.rho12.imag == pytest.approx(closed.imag, rel=0.01)


def test_lindblad_preserves_invariants(fig4_atoms):
    o, d = TWO_PI * 3e6, TWO_PI * 2e6
    traj = integrate_lindblad(lambda t: (o, d), fig4_atoms, (0.0, 2e-6), 32)
    for st in traj.states:
        assert np.max(np.abs(st.rho - st.rho.conj().T)) <= 1e-9
        assert abs(np.trace(st.rho) - 1.0) <= 1e-9


def test_lindblad_rejects_bad_span(fig4_atoms):
    with pytest.raises(ValidationError):
        integrate_lindblad(lambda t: (0.0, 0.0), fig4_atoms, (0.0, 1e-6), 1)
    with pytest.raises(ValidationError):
        integrate_lindblad(lambda t: (0.0, 0.0), fig4_atoms, (1e-6, 0.0), 4)


def test_lindblad_invariant_violation_reports_step(fig4_atoms):
    bad = ground_state()
    bad[0, 0] = 1.5  # broken trace from the start
    with pytest.raises(IntegrationFailure) as err:
        integrate_lindblad(lambda t: (1e6, 0.0), fig4_atoms, (0.0, 1e-7), 4, rho0=bad)
    assert err.value.step_index is not None
