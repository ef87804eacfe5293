import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.integrate import quad, simpson

from configs.simulation_configs import AU_TIME_AS, HARTREE_EV
from shared.analysis import estimate_fringe_spacing, fringe_positions, visibility
from shared.errors import InsufficientFringesError
from shared.ionization import Atom, rate
from shared.pulse import (
    ExperimentalParams,
    electric_field,
    from_experiment,
    max_abs_vector_potential,
    vector_potential,
    vector_potential_extrema,
)
from shared.semiclassical import (
    DirectionalSpectrum,
    SlitSolution,
    action,
    action_analytic,
    amplitude,
    coherent_sum,
    find_slits,
    group_slits,
    momentum,
    slit_action,
    solve_slits,
    spectrum,
    subslit_gap_vs_energy,
    validate_energy_grid,
    which_way_balance,
)

PHOTON_EV = 1.459


@pytest.fixture(scope='module')
def pulse():
    return from_experiment(ExperimentalParams(wavelength_nm=850.0, intensity_w_cm2=1e14, n_cycles=6.5))


@pytest.fixture(scope='module')
def sine_pulse(pulse):
    return pulse.with_cep(-math.pi / 2)


@pytest.fixture(scope='module')
def atom():
    return Atom()


@pytest.fixture(scope='module')
def sine_spectrum(sine_pulse, atom):
    return spectrum(sine_pulse, atom, np.linspace(0.2, 20.0, 400) / HARTREE_EV)


def test_no_slits_above_classical_cutoff(pulse, atom):
    p_max = max_abs_vector_potential(pulse)
    assert find_slits(pulse, 1.01 * p_max).size == 0
    assert find_slits(pulse, -1.01 * p_max).size == 0
    assert amplitude(pulse, atom, 1.01 * p_max) == 0


def test_find_slits_rejects_zero_momentum(pulse):
    with pytest.raises(ValueError):
        find_slits(pulse, 0.0)


def test_constructed_root_is_recovered(pulse):
    t_star = pulse.center + 0.3 * pulse.optical_period
    p = -vector_potential(pulse, t_star)
    roots = find_slits(pulse, p)
    assert np.min(np.abs(roots - t_star)) < 1e-9
    np.testing.assert_allclose(p + vector_potential(pulse, roots), 0.0, atol=1e-12)


def test_slit_count_matches_dense_sign_changes(pulse):
    rng = np.random.default_rng(20240607)
    p_max = max_abs_vector_potential(pulse)
    _, lobe_values = vector_potential_extrema(pulse)
    dense = np.linspace(0.0, pulse.total_duration, 1_000_001)
    a_dense = vector_potential(pulse, dense)
    checked = 0
    while checked < 100:
        p = rng.uniform(-p_max, p_max)
        # tangent roots closer than the coarse grid are not resolvable by either method
        if abs(p) < 1e-3 or np.min(np.abs(p + lobe_values)) < 1e-3:
            continue
        values = p + a_dense
        expected = int(np.count_nonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0))
        assert find_slits(pulse, p).size == expected
        checked += 1


def test_action_matches_independent_integrator(pulse, atom):
    p, t0 = 0.6, pulse.center - 0.2 * pulse.optical_period
    t = np.linspace(t0, pulse.total_duration, 1_000_001)
    integrand = 0.5 * (p + vector_potential(pulse, t)) ** 2 + atom.ip
    assert action(pulse, atom, p, t0) == pytest.approx(simpson(integrand, x=t), abs=1e-9)


def test_action_closed_form_and_additivity(pulse, atom):
    p = -0.4
    t0, t1 = 100.0, 400.0
    s0, s1 = action(pulse, atom, p, t0), action(pulse, atom, p, t1)
    piece, _ = quad(lambda t: 0.5 * (p + vector_potential(pulse, t)) ** 2 + atom.ip, t0, t1,
                    epsabs=1e-12, epsrel=1e-13, limit=400)
    assert s0 - s1 == pytest.approx(piece, abs=1e-8)
    assert float(np.real(action_analytic(pulse, atom, p, t0))) == pytest.approx(s0, abs=1e-8)


def test_action_outside_support(pulse, atom):
    with pytest.raises(ValueError):
        action(pulse, atom, 0.5, -1.0)


def test_two_slit_interference_algebra():
    first = SlitSolution(t0=0.0, weight=1.0, action=0.3, slope=0.0)
    second = SlitSolution(t0=1.0, weight=0.5, action=2.1, slope=0.0)
    expected = 1.0 + 0.25 + 2 * 0.5 * math.cos(2.1 - 0.3)
    assert abs(coherent_sum([first, second])) ** 2 == pytest.approx(expected)
    assert coherent_sum([]) == 0


def test_solve_slits_weights_and_ordering(pulse, atom):
    slits = solve_slits(pulse, atom, 0.5)
    assert len(slits) >= 2
    assert all(s.weight > 0 for s in slits)
    assert [s.t0 for s in slits] == sorted(s.t0 for s in slits)


def test_mirror_symmetry(pulse, atom):
    energies = np.linspace(1.0, 15.0, 40) / HARTREE_EV
    for cep in (0.0, 0.7, 2.0):
        first = spectrum(pulse.with_cep(cep), atom, energies)
        mirrored = spectrum(pulse.with_cep(cep + math.pi), atom, energies)
        np.testing.assert_allclose(first.yield_left, mirrored.yield_right, rtol=1e-8, atol=1e-300)
        np.testing.assert_allclose(first.yield_right, mirrored.yield_left, rtol=1e-8, atol=1e-300)


def test_yield_vanishes_above_cutoff(sine_pulse, sine_spectrum):
    for direction, sign in (('left', 1), ('right', -1)):
        # p > 0 needs negative lobes of A and vice versa
        cutoff = 0.5 * max_abs_vector_potential(sine_pulse, sign=sign) ** 2
        beyond = sine_spectrum.energies > cutoff * 1.001
        assert beyond.any()
        assert np.all(sine_spectrum.direction(direction)[beyond] == 0.0)


def test_sine_like_pulse_double_and_single_slit(sine_pulse, atom):
    p = math.sqrt(2 * 6.75 / HARTREE_EV)

    def dominant(signed_p):
        groups = group_slits(sine_pulse, solve_slits(sine_pulse, atom, signed_p))
        strongest = max(g.strength for g in groups)
        return [g for g in groups if g.strength >= 0.5 * strongest]

    right, left = dominant(p), dominant(-p)
    assert len(left) == 1
    assert len(right) == 2
    assert right[0].strength == pytest.approx(right[1].strength, rel=1e-6)
    assert all(len(g.slits) == 2 for g in right + left)


def test_which_way_balance(sine_pulse, atom):
    p = math.sqrt(2 * 6.75 / HARTREE_EV)
    assert which_way_balance(sine_pulse, atom, p) == pytest.approx(1.0, rel=1e-6)
    assert which_way_balance(sine_pulse, atom, -p) < 0.5
    assert which_way_balance(sine_pulse, atom, 5.0) == 0.0


def test_subslit_gap_shrinks_with_energy(sine_pulse, atom):
    energies_ev = np.linspace(2.0, 10.0, 17)
    gaps = subslit_gap_vs_energy(sine_pulse, atom, energies_ev / HARTREE_EV, 'right')
    assert np.all(np.isfinite(gaps))
    assert np.all(np.diff(gaps) < 0)
    mid = subslit_gap_vs_energy(sine_pulse, atom, [6.75 / HARTREE_EV], 'right')[0] * AU_TIME_AS
    assert 300.0 < mid < 1000.0


def test_fringe_spacing_close_to_photon_energy(sine_spectrum, sine_pulse):
    band = (2.7, 10.8)
    spacing = estimate_fringe_spacing(sine_spectrum.energies * HARTREE_EV, sine_spectrum.yield_right, band,
                                      expected=PHOTON_EV)
    assert spacing == pytest.approx(PHOTON_EV, rel=0.15)


def test_visibility_favours_the_double_slit_direction(sine_spectrum):
    band = (2.7, 10.8)
    energies = sine_spectrum.energies * HARTREE_EV
    right = visibility(energies, sine_spectrum.yield_right, band, fringe_spacing=PHOTON_EV)
    try:
        left = visibility(energies, sine_spectrum.yield_left, band, fringe_spacing=PHOTON_EV)
    except InsufficientFringesError:
        left = 0.0
    assert right - left > 0.3


def test_energy_grid_validation():
    for bad in ([], [0.1, 0.1], [0.2, 0.1], [-0.1, 0.2], [[0.1, 0.2]]):
        with pytest.raises(ValueError):
            validate_energy_grid(bad)
    assert momentum(0.5, 'left') == pytest.approx(-1.0)
    assert momentum(0.5, 'right') == pytest.approx(1.0)


def test_directional_spectrum_validation():
    with pytest.raises(ValueError):
        DirectionalSpectrum(energies=[0.1, 0.2], yield_left=[1.0], yield_right=[1.0, 2.0])
    with pytest.raises(ValueError):
        DirectionalSpectrum(energies=[0.1, 0.2], yield_left=[1.0, -1.0], yield_right=[1.0, 2.0])
    with pytest.raises(ValueError):
        DirectionalSpectrum(energies=[0.1], yield_left=[1.0], yield_right=[1.0]).direction('up')


def test_single_slit_yield_is_the_rate(pulse, atom):
    for slit in solve_slits(pulse, atom, 0.5):
        assert abs(coherent_sum([slit])) ** 2 == pytest.approx(rate(electric_field(pulse, slit.t0), atom), rel=1e-12)


def test_global_phase_leaves_yield_unchanged(pulse, atom):
    slits = solve_slits(pulse, atom, 0.5)
    shifted = [replace(s, action=s.action + 1.234) for s in slits]
    assert abs(coherent_sum(shifted)) ** 2 == pytest.approx(abs(coherent_sum(slits)) ** 2, rel=1e-12)


def test_field_free_action_is_linear_in_time(pulse, atom):
    free = replace(pulse, a0=0.0)
    p, t0 = 0.7, 123.0
    expected = (0.5 * p * p + atom.ip) * (free.total_duration - t0)
    assert slit_action(free, atom, p, t0, 'closed_form') == pytest.approx(expected, rel=1e-12)
    assert slit_action(free, atom, p, t0, 'quadrature') == pytest.approx(expected, rel=1e-10)
    assert amplitude(free, atom, p) == 0


def test_slits_one_period_apart_fringe_at_photon_energy(pulse, atom):
    free = replace(pulse, a0=0.0)
    t_first = pulse.center - pulse.optical_period
    t_second = pulse.center
    energies_ev = np.linspace(2.7, 10.8, 163)
    yields = []
    for energy in energies_ev / HARTREE_EV:
        p = momentum(energy, 'right')
        pair = [SlitSolution(t0=t, weight=1.0, action=slit_action(free, atom, p, t, 'closed_form'), slope=0.0)
                for t in (t_first, t_second)]
        yields.append(abs(coherent_sum(pair)) ** 2)
    photon_ev = pulse.omega * HARTREE_EV
    spacing = estimate_fringe_spacing(energies_ev, np.array(yields), (2.7, 10.8))
    assert spacing == pytest.approx(photon_ev, rel=0.03)


def test_fringe_peaks_stable_under_grid_halving(sine_pulse, atom):
    band = (2.7, 10.8)
    peaks = []
    for n_points in (86, 171):
        energies_ev = np.linspace(2.5, 11.0, n_points)
        result = spectrum(sine_pulse, atom, energies_ev / HARTREE_EV, action_method='closed_form')
        peaks.append(fringe_positions(energies_ev, result.yield_right, band, fringe_spacing=PHOTON_EV))
    coarse, fine = peaks
    assert coarse.size == fine.size >= 5
    np.testing.assert_allclose(coarse, fine, atol=0.05)


def test_action_methods_give_the_same_spectrum(pulse, atom):
    energies = np.linspace(1.0, 15.0, 40) / HARTREE_EV
    quadrature = spectrum(pulse, atom, energies, action_method='quadrature')
    closed = spectrum(pulse, atom, energies, action_method='closed_form')
    for direction in ('left', 'right'):
        reference = quadrature.direction(direction)
        np.testing.assert_allclose(closed.direction(direction), reference, rtol=1e-6, atol=1e-9 * reference.max())
    assert closed.meta['action_method'] == 'closed_form'


def test_unknown_action_method_rejected(pulse, atom):
    with pytest.raises(ValueError):
        spectrum(pulse, atom, [0.1, 0.2], action_method='trapezoid')
    with pytest.raises(ValueError):
        slit_action(pulse, atom, 0.5, 100.0, 'trapezoid')
