"""Bath preparation states: energies, covariances, validation."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from oscbath.preparations import (
    Custom,
    DisplacedThermal,
    DomainError,
    PreparationError,
    SqueezedThermal,
    Thermal,
    make_preparation,
    thermal_energy,
)


def test_thermal_energy_reference_value():
    # (1/2) coth(1/2) at w = 1, T = 1
    assert_allclose(thermal_energy(1.0, 1.0), 1.0819767069346443, rtol=1e-14)
    assert_allclose(thermal_energy(1.0, 1.0), 0.5 / np.tanh(0.5), rtol=1e-14)


def test_thermal_energy_zero_temperature_is_ground():
    w = np.array([0.3, 1.0, 7.5])
    assert_allclose(thermal_energy(w, 0.0), 0.5 * w, rtol=0, atol=0)
    # deep quantum regime approaches the same limit smoothly
    assert_allclose(thermal_energy(w, 1e-8), 0.5 * w, rtol=1e-12)


def test_thermal_energy_classical_limit():
    # high T: E = T + w^2/(12 T) + O(T^-3)
    w = 0.7
    T = 200.0
    assert abs(thermal_energy(w, T) - (T + w**2 / (12.0 * T))) < 1e-6


def test_thermal_energy_rejects_negative_temperature():
    with pytest.raises(DomainError):
        thermal_energy(1.0, -0.5)


@given(
    w=st.floats(min_value=1e-3, max_value=50.0),
    T=st.floats(min_value=0.0, max_value=100.0),
)
@settings(max_examples=60, deadline=None)
def test_thermal_energy_bounded_below_by_ground(w, T):
    assert thermal_energy(w, T) >= 0.5 * w - 1e-12


def test_thermal_covariance_diagonal(s0):
    prep = Thermal(2.0)
    w = np.array([0.5, 1.0, 3.0])
    sqq = prep.sigma_qq(w)
    spp = prep.sigma_pp(w)
    sqp = prep.sigma_qp(w)
    e = thermal_energy(w, 2.0)
    assert_allclose(sqq, e / w**2, rtol=1e-14)
    assert_allclose(spp, e, rtol=1e-14)
    assert np.max(np.abs(sqp)) == 0.0
    assert np.max(np.abs(prep.mean_q(w))) == 0.0
    assert np.max(np.abs(prep.mean_p(w))) == 0.0


def test_squeezed_energy_scales_with_cosh():
    w = np.array([0.4, 1.0, 2.0, 8.0])
    r = 0.5
    prep = SqueezedThermal(2.0, r)
    e_sq = 0.5 * (w**2 * prep.sigma_qq(w) + prep.sigma_pp(w))
    assert_allclose(e_sq, np.cosh(2.0 * r) * thermal_energy(w, 2.0), rtol=1e-12)


def test_squeezed_reduces_to_thermal_at_zero_squeezing():
    w = np.linspace(0.1, 5.0, 17)
    a = SqueezedThermal(1.3, 0.0)
    b = Thermal(1.3)
    assert_allclose(a.sigma_qq(w), b.sigma_qq(w), rtol=0, atol=0)
    assert_allclose(a.sigma_pp(w), b.sigma_pp(w), rtol=0, atol=0)


def test_displacement_does_not_change_fluctuation_energy():
    w = np.array([0.5, 1.0, 2.0])
    base = Thermal(1.5)
    disp = DisplacedThermal(1.5, mean_q=lambda w: np.ones_like(w), mean_p=None)
    assert_allclose(disp.sigma_qq(w), base.sigma_qq(w), rtol=0, atol=0)
    assert_allclose(disp.sigma_pp(w), base.sigma_pp(w), rtol=0, atol=0)
    assert_allclose(disp.mean_q(w), 1.0, rtol=0)


def test_custom_uncertainty_violation_names_frequency():
    # det Sigma = sqq*spp - sqp^2 < 1/4 must be rejected, reporting where
    bad = Custom(
        sigma_qq=lambda w: 0.1 / w**2,
        sigma_pp=lambda w: 0.1 * np.ones_like(w),
        sigma_qp=None,
    )
    with pytest.raises(PreparationError) as exc:
        bad.validate(np.array([2.0]))
    msg = str(exc.value)
    assert "uncertainty bound violated at omega" in msg
    assert "det" in msg


def test_custom_ground_state_passes_validation():
    gnd = Custom(
        sigma_qq=lambda w: 0.5 / w,
        sigma_pp=lambda w: 0.5 * w,
        sigma_qp=None,
    )
    gnd.validate(np.linspace(0.1, 20.0, 50))


def test_validate_rejects_nonpositive_variance():
    bad = Custom(
        sigma_qq=lambda w: -0.5 / w,
        sigma_pp=lambda w: 0.5 * w,
        sigma_qp=None,
    )
    with pytest.raises(PreparationError):
        bad.validate(np.array([1.0]))


def test_make_preparation_thermal_and_squeezed():
    w = np.array([0.7, 1.9])
    p1 = make_preparation("thermal", {"temperature": 2.0})
    assert_allclose(p1.sigma_pp(w), Thermal(2.0).sigma_pp(w), rtol=0)
    p2 = make_preparation("squeezed", {"temperature": 2.0, "squeezing": 0.5})
    assert_allclose(p2.sigma_qq(w), SqueezedThermal(2.0, 0.5).sigma_qq(w), rtol=0)


def test_make_preparation_displaced_with_table():
    grid = np.linspace(0.0, 10.0, 101)
    vals = np.exp(-0.5 * ((grid - 1.0) / 0.3) ** 2)
    p = make_preparation(
        "displaced",
        {"temperature": 1.0, "mean_q": [grid.tolist(), vals.tolist()]},
    )
    w = np.array([0.7, 1.0, 1.3])
    expect = np.interp(w, grid, vals)
    assert_allclose(p.mean_q(w), expect, rtol=1e-12)


def test_make_preparation_custom_with_tables():
    grid = np.linspace(0.1, 20.0, 200)
    p = make_preparation(
        "custom",
        {
            "sigma_qq": [grid.tolist(), (1.0 / grid**2).tolist()],
            "sigma_pp": [grid.tolist(), np.ones_like(grid).tolist()],
        },
    )
    w = np.array([0.5, 2.0])
    assert_allclose(p.sigma_pp(w), 1.0, rtol=1e-12)


def test_make_preparation_rejects_unknown_kind_and_stray_params():
    with pytest.raises(PreparationError):
        make_preparation("maxwellian", {"temperature": 1.0})
    with pytest.raises(PreparationError):
        make_preparation("thermal", {"temperature": 1.0, "squeezing": 0.3})


def test_scenario_energy_distribution_matches_preparations(s0):
    w = np.array([0.5, 1.0, 2.0])
    dens = s0.densities()
    for bath, d in zip(s0.baths, dens):
        prep = bath.preparation
        e = 0.5 * (w**2 * prep.sigma_qq(w) + prep.sigma_pp(w))
        assert_allclose(d(w), e, rtol=1e-13)
