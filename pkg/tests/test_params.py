import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fastgates import IonSpecies, TrapArrayConfig, chi_from_xi, derive_params
from fastgates.params import DEFAULT_WAVELENGTH

# frozen from CODATA-2018 arithmetic at the reference operating point
REF_XI = 1.136570591058e4
REF_CHI = 1.759524730569e-4
REF_ETA = 1.937608577977e-1


def test_reference_point_values(ref_params):
    assert ref_params.xi == pytest.approx(REF_XI, rel=1e-9)
    assert ref_params.chi == pytest.approx(REF_CHI, rel=1e-9)
    assert ref_params.eta == pytest.approx(REF_ETA, rel=1e-9)


def test_chi_matches_published_operating_point(ref_params):
    # Ca40, d = 100 um, 1 MHz trap: chi = 1.8e-4 within 3%
    assert abs(ref_params.chi - 1.8e-4) / 1.8e-4 < 0.03


def test_eta_reference_value(ref_params):
    # dk = 2 x (2 pi / 729 nm) on Ca40 at 2 pi x 1 MHz
    assert abs(ref_params.eta - 0.194) / 0.194 < 0.01


def test_chi_from_xi_closed_form_points():
    assert chi_from_xi(REF_XI) == pytest.approx(1.7596e-4, rel=1e-4)
    assert chi_from_xi(12.0) == pytest.approx(math.sqrt(4.0 / 3.0) - 1.0, rel=1e-14)
    assert chi_from_xi(4.0 / 3.0) == pytest.approx(1.0, rel=1e-14)
    assert chi_from_xi(1e15) < 1e-14  # decoupled-trap limit


@pytest.mark.parametrize("bad", [0.0, -1.0, math.nan, math.inf])
def test_chi_from_xi_rejects_bad_input(bad):
    with pytest.raises(ValueError):
        chi_from_xi(bad)


@given(st.floats(min_value=2.1, max_value=12.0))
def test_chi_weak_coupling_asymptote(log_xi):
    xi = 10.0**log_xi
    assert abs(chi_from_xi(xi) - 2.0 / xi) < 8.0 / xi**2


@settings(max_examples=50)
@given(scale=st.floats(min_value=0.1, max_value=10.0))
def test_scale_consistency(ref_config, ref_params, scale):
    scaled = TrapArrayConfig(
        ion_count=2,
        spacing=ref_config.spacing * scale,
        trap_frequency=ref_config.trap_frequency * scale**-1.5,
    )
    params = derive_params(scaled)
    assert params.xi == pytest.approx(ref_params.xi, rel=1e-12)
    assert params.chi == pytest.approx(ref_params.chi, rel=1e-12)


def test_config_validation():
    with pytest.raises(ValueError):
        IonSpecies("bad", -1.0)
    with pytest.raises(ValueError):
        TrapArrayConfig(1, 100e-6, 1e6)
    with pytest.raises(ValueError):
        TrapArrayConfig(2, -100e-6, 1e6)
    with pytest.raises(ValueError):
        TrapArrayConfig(2, 100e-6, 0.0)
    with pytest.raises(ValueError):
        TrapArrayConfig(2, 100e-6, 1e6, effective_wavenumber=math.nan)


def test_trap_period(ref_config):
    assert ref_config.trap_period == pytest.approx(1e-6, rel=1e-12)


def test_default_wavenumber_is_two_photon_recoils(ref_config):
    assert ref_config.effective_wavenumber == pytest.approx(
        2 * 2 * math.pi / DEFAULT_WAVELENGTH, rel=1e-15
    )
