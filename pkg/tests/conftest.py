import pytest

from becmirror import derive_model, reference_params


@pytest.fixture(scope="session")
def model18():
    """Reference double-well model at pump ratio 1.8, undamped."""
    return derive_model(reference_params(1.8))


@pytest.fixture(scope="session")
def model20():
    return derive_model(reference_params(2.0))


@pytest.fixture(scope="session")
def harmonic(model18):
    """Same constants with the pump switched off: two decoupled oscillators."""
    return model18.with_pump_ratio(0.0)
