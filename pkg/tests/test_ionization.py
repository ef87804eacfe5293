import math

import numpy as np
import pytest

from shared.ionization import Atom, rate, rate_profile, slit_windows
from shared.pulse import ExperimentalParams, electric_field, from_experiment


@pytest.fixture
def atom():
    return Atom()


@pytest.fixture
def pulse():
    return from_experiment(ExperimentalParams(wavelength_nm=850.0, intensity_w_cm2=1e14, n_cycles=6.5))


def test_zero_field_gives_zero_rate(atom):
    assert rate(0.0, atom) == 0.0
    assert rate(np.zeros(3), atom).tolist() == [0.0, 0.0, 0.0]


def test_rate_is_even_and_monotonic(atom):
    fields = np.linspace(0.005, 0.1, 200)
    values = rate(fields, atom)
    np.testing.assert_allclose(rate(-fields, atom), values)
    assert np.all(np.diff(values) > 0)


def test_rate_formula(atom):
    kappa = math.sqrt(2.0 * atom.ip)
    f = 0.05
    expected = (2 * kappa ** 3 / f) ** (2 / kappa - 1) * math.exp(-2 * kappa ** 3 / (3 * f))
    assert rate(f, atom) == pytest.approx(expected)
    assert rate(f, Atom(rate_prefactor=3.0)) == pytest.approx(3.0 * expected)


def test_central_half_cycle_dominates(atom, pulse):
    pulse = pulse.with_cep(0.0)
    central = rate(electric_field(pulse, pulse.center), atom)
    one_cycle_later = rate(electric_field(pulse, pulse.center + pulse.optical_period), atom)
    assert central / one_cycle_later > 5.0


def test_rate_profile(atom, pulse):
    times, profile = rate_profile(pulse, atom, 2001)
    assert times[0] == 0.0 and times[-1] == pytest.approx(pulse.total_duration)
    assert profile.shape == (2001,)
    assert profile[0] == 0.0 and profile[-1] == pytest.approx(0.0, abs=1e-300)
    with pytest.raises(ValueError):
        rate_profile(pulse, atom, 1)


def test_slit_windows_one_per_half_cycle(atom, pulse):
    times, profile = rate_profile(pulse.with_cep(0.0), atom, 20001)
    windows = slit_windows(times, profile)
    assert len(windows) >= 5
    strongest = max(windows, key=lambda w: w[2])
    assert strongest[0] < pulse.center < strongest[1]


def test_atom_rejects_non_positive_ip():
    with pytest.raises(ValueError):
        Atom(ip=0.0)
