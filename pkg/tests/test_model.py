import dataclasses
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from becmirror import DimensionlessModel, PhysicalParams, derive_model, reference_params
from becmirror.errors import ParameterError
from becmirror.model import RB87_MASS, xi_sm_from_mass

HBAR = 1.054571817e-34
C = 299792458.0


def hand_constants():
    """The scaled constants evaluated directly from the laboratory values."""
    wm = 2 * math.pi * 19e3
    wc = 2 * math.pi * C / 780e-9
    k = 2 * math.pi / 780e-9
    return {
        "kappa": 1.3e6 / 19e3,
        "detuning": (15e6 - 1.2e4 * 3.1e3 / 2) / 19e3,
        "xi": wc / 1e-4 * math.sqrt(HBAR / (1e-12 * wm)) / wm,
        "xi_sm": math.sqrt(1.2e4) * 3.1e3 / 2 / 19e3,
        "sm_freq": 4 * HBAR * k * k / (2 * 1.44316e-25) / wm,
    }


def test_reference_constants_match_hand_arithmetic(model18):
    want = hand_constants()
    for name, value in want.items():
        assert getattr(model18, name) == pytest.approx(value, rel=1e-9), name


def test_reference_constants_rounded(model18):
    assert model18.kappa == pytest.approx(68.42, abs=0.005)
    assert model18.detuning == pytest.approx(-189.47, abs=0.005)
    assert model18.xi == pytest.approx(6.01, abs=0.005)
    assert model18.xi_sm == pytest.approx(8.94, abs=0.005)
    assert model18.sm_freq == pytest.approx(0.794, abs=0.0005)


def test_pump_ratio_round_trip(model18):
    assert model18.pump_ratio == pytest.approx(1.8, rel=1e-14)
    assert model18.with_pump_ratio(2.5).pump_ratio == pytest.approx(2.5, rel=1e-14)


def test_detuning_cancels_when_shift_equals_cavity_detuning():
    p = reference_params()
    p = dataclasses.replace(p, cavity_pump_detuning=p.atom_number * p.vacuum_rabi / 2)
    assert derive_model(p).detuning == 0.0


def test_no_atoms_decouples_side_mode():
    m = derive_model(dataclasses.replace(reference_params(), atom_number=0.0))
    assert m.xi_sm == 0.0


@pytest.mark.parametrize("field", ["cavity_length", "mirror_mass", "mirror_freq",
                                   "pump_wavelength", "cavity_decay", "atom_mass"])
@pytest.mark.parametrize("bad", [0.0, -1.0, float("nan")])
def test_non_positive_field_is_named(field, bad):
    p = dataclasses.replace(reference_params(), **{field: bad})
    with pytest.raises(ParameterError) as info:
        derive_model(p)
    assert info.value.field == field
    assert field in str(info.value)


@pytest.mark.parametrize("field", ["atom_number", "mirror_damping", "sidemode_damping", "pump_rate"])
def test_negative_nonnegative_field_rejected(field):
    with pytest.raises(ParameterError) as info:
        derive_model(dataclasses.replace(reference_params(), **{field: -1.0}))
    assert info.value.field == field


def test_default_atom_mass_is_rubidium():
    assert reference_params().atom_mass == RB87_MASS == 1.44316e-25


def test_derive_is_deterministic():
    assert derive_model(reference_params()) == derive_model(reference_params())


def test_metadata_records_constants(model18):
    meta = model18.metadata()
    assert meta["hbar"] == pytest.approx(HBAR, rel=1e-12)
    assert meta["c"] == C
    assert meta["kappa"] == model18.kappa


valid_params = st.builds(
    PhysicalParams,
    cavity_length=st.floats(1e-5, 1e-2),
    mirror_mass=st.floats(1e-15, 1e-9),
    mirror_freq=st.floats(1e3, 1e7),
    pump_wavelength=st.floats(4e-7, 1.6e-6),
    cavity_decay=st.floats(1e4, 1e8),
    cavity_pump_detuning=st.floats(-1e8, 1e8),
    atom_number=st.floats(1.0, 1e7),
    vacuum_rabi=st.floats(1e2, 1e6),
    atom_mass=st.floats(1e-27, 1e-24),
    pump_rate=st.floats(0.0, 1e8),
)


@settings(max_examples=100, deadline=None)
@given(valid_params)
def test_side_mode_coupling_two_routes_agree(params):
    direct = math.sqrt(params.atom_number) * params.vacuum_rabi / 2
    assert xi_sm_from_mass(params) == pytest.approx(direct, rel=1e-10)


@settings(max_examples=50, deadline=None)
@given(valid_params, st.floats(0.1, 10.0))
def test_rate_scaling_leaves_scaled_rates_invariant(params, factor):
    params = dataclasses.replace(params, mirror_damping=1e3, sidemode_damping=2e3)
    scaled = dataclasses.replace(
        params,
        mirror_freq=params.mirror_freq * factor,
        cavity_decay=params.cavity_decay * factor,
        cavity_pump_detuning=params.cavity_pump_detuning * factor,
        vacuum_rabi=params.vacuum_rabi * factor,
        mirror_damping=params.mirror_damping * factor,
        sidemode_damping=params.sidemode_damping * factor,
        pump_rate=params.pump_rate * factor,
    )
    a, b = derive_model(params), derive_model(scaled)
    for name in ("kappa", "eta", "gamma_m", "gamma_sm", "xi_sm"):
        assert getattr(b, name) == pytest.approx(getattr(a, name), rel=1e-12, abs=1e-300), name
    # the detuning is a difference of two terms, so compare on their scale
    terms = (abs(params.cavity_pump_detuning) + params.atom_number * params.vacuum_rabi / 2) / params.mirror_freq
    assert b.detuning == pytest.approx(a.detuning, abs=1e-13 * terms)
    # xi carries the explicit omega_m^(-3/2) mass-scaling term
    assert b.xi == pytest.approx(a.xi * factor**-1.5, rel=1e-12)


def test_model_rejects_bad_fields():
    with pytest.raises(ParameterError):
        DimensionlessModel(kappa=0.0, detuning=0.0, xi=1.0, xi_sm=1.0, recoil=0.1)
    with pytest.raises(ParameterError):
        DimensionlessModel(kappa=1.0, detuning=0.0, xi=-1.0, xi_sm=1.0, recoil=0.1)
    with pytest.raises(ParameterError):
        reference_params().with_pump_ratio(-0.1)
