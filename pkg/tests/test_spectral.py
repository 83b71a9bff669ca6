"""Damping kernels, susceptibility, pole scan, and the response function.

The one non-negotiable anchor here is the memory-kernel route: for a
Lorentz-cutoff Ohmic bath the friction kernel is a single exponential, so
u(t) also solves the ordinary system

    u'' = -omega0^2 u - z,   z' = -omega_c z + K(0) u',   u(0)=0, u'(0)=1,

which an explicit high-order integrator handles to ~1e-12.  That route
shares nothing with the Fourier construction (no FFT, no spectral grid),
so agreement pins both the transform conventions and the tail handling.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose
from scipy.integrate import solve_ivp

from oscbath.errors import DomainError, PoleError, PoleScanError
from oscbath.spectral import (ClassicalResponse, DrudeOhmic, Susceptibility,
                              Tabulated, classical_u, full_ft, gamma_eval,
                              partial_ft, pole_scan)

# decay of u for the reference pair of baths: frozen from two independent
# routes (Fourier construction and the exponential-kernel ODE below)
U_REFERENCE = {
    100.0: -1.0316282089738223e-03,
    200.0: -1.3703194904530162e-05,
    300.0: -1.3575264856830869e-07,
    400.0: -1.1865534228097954e-09,
}

# lower-half-plane zero of 1 - z^2 + 2 Gamma(z) for the reference setup;
# the shifted resonance and half width of the damped oscillator
POLE_Z0 = 1.0037930460593620 - 0.049994899531010488j


def test_drude_gamma_closed_form(drude):
    w = np.linspace(0.0, 50.0, 301)
    expect = (2.0 / np.pi) * 0.05 * w * 100.0 / (w**2 + 100.0)
    assert_allclose(drude.gamma(w), expect, rtol=1e-14)
    assert drude.static_shift == 0.0
    assert_allclose(drude.tail_coefficient, (2.0 / np.pi) * 0.05 * 100.0, rtol=1e-15)


def test_boundary_imaginary_part_is_minus_half_pi_gamma(drude):
    """Im Gamma(w + i0) = -(pi/2) gamma(w), the dissipative half."""
    w = np.linspace(0.05, 40.0, 300)
    assert_allclose(drude.boundary(w).imag, -0.5 * np.pi * drude.gamma(w),
                    rtol=1e-12)


def test_continuation_vanishes_at_origin(drude):
    assert abs(drude.continuation(1e-12j)) < 1e-11
    assert drude.continuation(0.0) == 0.0


def test_tabulated_matches_closed_continuation(drude):
    """Principal-value route vs the rational closed form, offset removed.

    The two continuations differ by the constant Gamma(i0+); after
    subtracting each one's own static shift the boundary values must
    coincide (Im exactly, Re to the table's interpolation error).
    """
    grid = np.linspace(0.0, 400.0, 8001)
    tab = Tabulated(grid, drude.gamma(grid))
    w = np.linspace(0.2, 20.0, 100)
    bt = tab.boundary(w)
    bd = drude.boundary(w)
    assert_allclose(bt.imag, bd.imag, rtol=1e-8)
    re_err = np.abs((bt.real - tab.static_shift) - bd.real)
    assert np.max(re_err) < 1e-4
    # the offset itself: -int gamma/w dw = -coupling for this density
    assert abs(tab.static_shift + 0.05 * 10.0 * (2.0 / np.pi) * np.arctan(40.0)) < 5e-3


def test_tabulated_rejects_bad_tables():
    with pytest.raises(DomainError):
        Tabulated(np.array([0.1, 1.0, 2.0, 3.0]), np.zeros(4))  # grid[0] != 0
    with pytest.raises(DomainError):
        Tabulated(np.array([0.0, 1.0, 2.0]), np.zeros(3))  # too short


def test_susceptibility_twin_densities_agree(drude):
    """Closed-form and tabulated versions of the same damping agree."""
    grid = np.linspace(0.0, 400.0, 8001)
    tab = Tabulated(grid, drude.gamma(grid))
    su_d = Susceptibility(1.0, [drude, drude], omega_max=60.0)
    su_t = Susceptibility(1.0, [tab, tab], omega_max=60.0)
    w = np.linspace(0.1, 20.0, 200)
    fd = su_d.eval(w)
    ft = su_t.eval(w)
    assert np.max(np.abs(fd - ft) / np.abs(fd)) < 1e-4


def test_pole_scan_passes_for_damped_setup(s0):
    report = pole_scan(s0.susceptibility)
    assert report.passed
    assert report.real_zeros == []
    assert report.min_abs_denominator > report.threshold


def test_pole_scan_flags_undamped_oscillator():
    """Zero damping leaves a real pole at the bare frequency."""
    grid = np.linspace(0.0, 12.0, 25)
    dead = Tabulated(grid, np.zeros_like(grid))
    su = Susceptibility(1.0, [dead], omega_max=12.0)
    report = su.pole_scan()
    assert not report.passed
    assert len(report.real_zeros) == 1
    assert abs(report.real_zeros[0] - 1.0) < 1e-6
    with pytest.raises(PoleScanError):
        ClassicalResponse(su)
    with pytest.raises(PoleError):
        su.eval(np.array([1.0]))


def test_one_sided_damping_still_scans_clean(drude):
    """A single damped bath (the other dead) keeps the pole off the axis."""
    grid = np.linspace(0.0, 60.0, 121)
    dead = Tabulated(grid, np.zeros_like(grid))
    su = Susceptibility(1.0, [drude, dead], omega_max=60.0)
    assert su.pole_scan().passed


def test_continued_denominator_zero_at_reference_pole(s0):
    su = s0.susceptibility
    assert abs(su.denominator_z(POLE_Z0)) < 1e-12
    # the conjugate-side partner
    assert abs(su.denominator_z(-np.conj(POLE_Z0))) < 1e-12


def test_u_against_memory_kernel_ode(s0):
    """Fourier-built u(t) vs the exponential-kernel ODE on [0, 100]."""
    k0 = 2 * 0.05 * 10.0  # total kernel weight of the two baths

    def rhs(t, y):
        u, v, z = y
        return [v, -u - z, -10.0 * z + k0 * v]

    sol = solve_ivp(rhs, (0.0, 100.0), [0.0, 1.0, 0.0], method="DOP853",
                    rtol=1e-12, atol=1e-14, dense_output=True)
    t = np.linspace(0.0, 100.0, 801)
    assert np.max(np.abs(sol.sol(t)[0] - s0.response.u(t))) < 1e-10


def test_u_frozen_decay_values(s0):
    for t, ref in U_REFERENCE.items():
        assert_allclose(s0.response.u(t), ref, rtol=1e-4)


def test_u_initial_conditions(s0):
    resp = s0.response
    assert resp.u(0.0) == 0.0
    assert abs(resp.initial_slope - 1.0) < 1e-10
    assert abs(resp.udot(0.0) - 1.0) < 1e-10
    # curvature at 0+ vanishes for a kick response
    assert abs(resp.uddot(0.0)) < 1e-8


def test_u_domain_guard(s0):
    with pytest.raises(DomainError):
        s0.response.u(-1.0)
    with pytest.raises(DomainError):
        s0.response.u(s0.response.t_max + 1.0)


def test_full_transform_dissipation_identity(s0):
    """Im u(w) + (pi/2) gamma_S(w) |u(w)|^2 = 0 on the real axis."""
    w = np.linspace(0.05, 40.0, 300)
    uh = full_ft(s0.response, w)
    gs = s0.susceptibility.gamma_total(w)
    assert np.max(np.abs(uh.imag + 0.5 * np.pi * gs * np.abs(uh) ** 2)) < 1e-10


def test_partial_transform_limits_and_derivative(s0):
    """e^{-iwt} u(t, w) -> u(w) for large t; Im v = w Re u exactly.

    The running transform carries an e^{iwt} prefactor, so the convergent
    object is the de-phased one.  The residual is set by the tail of u
    itself: ~5e-3 at t = 150, ~2e-8 by t = 400.
    """
    w = np.array([0.4, 1.0, 2.7])
    uh = full_ft(s0.response, w)
    up150, _ = partial_ft(s0.response, 150.0, w)
    up, v = partial_ft(s0.response, 400.0, w)
    assert_allclose(up * np.exp(-1j * w * 400.0), uh, rtol=0, atol=1e-6)
    # convergence is monotone in the envelope sense
    r150 = np.abs(up150 * np.exp(-1j * w * 150.0) - uh)
    r400 = np.abs(up * np.exp(-1j * w * 400.0) - uh)
    assert np.all(r400 < r150)
    assert_allclose(v.imag, w * up.real, rtol=0, atol=1e-12)
    up0, _ = partial_ft(s0.response, 0.0, w)
    assert np.max(np.abs(up0)) == 0.0


def test_classical_u_samples_on_grid(s0):
    t = np.linspace(0.0, 5.0, 21)
    resp = classical_u(s0.susceptibility, times=t)
    assert_allclose(resp.u_values, resp.u(t), rtol=0, atol=0)
    assert resp.udot_values.shape == t.shape


def test_gamma_eval_dispatch(drude):
    w = np.array([0.3, 3.0])
    assert_allclose(gamma_eval(drude, w), drude.gamma(w), rtol=0)


@settings(max_examples=50, deadline=None)
@given(coupling=st.floats(1e-4, 2.0), cutoff=st.floats(0.1, 50.0),
       w=st.floats(1e-3, 100.0))
def test_drude_dissipation_sign_property(coupling, cutoff, w):
    """gamma >= 0 and Im Gamma(w + i0) <= 0 across the parameter box."""
    d = DrudeOhmic(coupling, cutoff)
    g = float(d.gamma(w))
    assert g >= 0.0
    b = complex(d.boundary(w))
    assert b.imag <= 0.0
    assert abs(b.imag + 0.5 * np.pi * g) <= 1e-12 * max(1.0, abs(b.imag))


@settings(max_examples=30, deadline=None)
@given(coupling=st.floats(1e-3, 0.5), cutoff=st.floats(1.0, 30.0))
def test_drude_sum_rule_property(coupling, cutoff):
    """int gamma(w)/w dw = coupling * cutoff * ... fixes the tail weight."""
    d = DrudeOhmic(coupling, cutoff)
    w = np.geomspace(1e-4, 1e4 * cutoff, 20001)
    integral = np.trapezoid(d.gamma_over_omega(w), w)
    assert_allclose(integral, coupling * cutoff, rtol=1e-3)


def test_drude_parameter_guards():
    with pytest.raises(DomainError):
        DrudeOhmic(-0.1, 10.0)
    with pytest.raises(DomainError):
        DrudeOhmic(0.1, 0.0)
    with pytest.raises(DomainError):
        Susceptibility(-1.0, [DrudeOhmic(0.1, 10.0)])
