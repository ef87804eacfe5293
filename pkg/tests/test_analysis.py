import math

import numpy as np
import pytest

from configs.simulation_configs import AU_TIME_AS, HARTREE_EV
from shared.analysis import (
    PhaseScan,
    comb_coefficient,
    envelope_and_subslit,
    estimate_fringe_spacing,
    flatten_rolloff,
    fringe_positions,
    fringe_report,
    normalize_by_phase_average,
    phase_scan_visibility,
    track_fringes,
    visibility,
)
from shared.errors import InsufficientFringesError, ScanAlreadyNormalizedError
from shared.semiclassical import DirectionalSpectrum

SPACING = 1.46
ENERGIES = np.linspace(0.2, 20.0, 3961)
BAND = (3.0, 12.0)


def two_beam(shift=0.0):
    return 1.0 + np.cos(2 * math.pi * (ENERGIES - shift) / SPACING)


def make_scan(n_cep=32, right=None):
    ceps = 2 * math.pi * np.arange(n_cep) / n_cep
    spectra = []
    for cep in ceps:
        yields = two_beam(SPACING * cep / (2 * math.pi)) if right is None else right(cep)
        spectra.append(DirectionalSpectrum(energies=ENERGIES / HARTREE_EV,
                                           yield_left=np.ones_like(ENERGIES),
                                           yield_right=yields))
    return PhaseScan(cep_values=ceps, spectra=spectra)


def test_two_beam_visibility_is_one():
    assert visibility(ENERGIES, two_beam(), BAND) == pytest.approx(1.0, abs=1e-3)
    assert visibility(ENERGIES, 3.0 + 0.5 * two_beam(), BAND) == pytest.approx(1.0 / 7.0, abs=1e-3)


def test_visibility_is_scale_invariant():
    yields = 2.0 + two_beam() * np.exp(-ENERGIES / 10.0)
    assert visibility(ENERGIES, 7.5 * yields, BAND) == pytest.approx(visibility(ENERGIES, yields, BAND), rel=1e-12)


def test_constant_spectrum_has_no_fringes():
    with pytest.raises(InsufficientFringesError):
        visibility(ENERGIES, np.full_like(ENERGIES, 2.0), BAND)
    with pytest.raises(InsufficientFringesError):
        fringe_report(ENERGIES, np.full_like(ENERGIES, 2.0), BAND)


def test_invalid_band():
    with pytest.raises(ValueError):
        visibility(ENERGIES, two_beam(), (5.0, 5.0))
    with pytest.raises(ValueError):
        visibility(ENERGIES, two_beam(), (30.0, 40.0))


def test_fringe_spacing_as_constructed():
    assert estimate_fringe_spacing(ENERGIES, two_beam(), BAND) == pytest.approx(SPACING, rel=0.06)
    positions = fringe_positions(ENERGIES, two_beam(), BAND)
    np.testing.assert_allclose(np.diff(positions), SPACING, rtol=1e-3)
    report = fringe_report(ENERGIES, two_beam(), BAND)
    assert report.spacing_mean == pytest.approx(SPACING, rel=1e-3)
    assert report.visibility == pytest.approx(1.0, abs=1e-3)


def test_four_slit_envelope_recovers_subslit_separation():
    photon = SPACING / HARTREE_EV
    period = 2 * math.pi / photon
    tau = period / 6.0
    e_au = ENERGIES / HARTREE_EV
    slits = [-period / 2 - tau / 2, -period / 2 + tau / 2, period / 2 - tau / 2, period / 2 + tau / 2]
    yields = np.abs(sum(np.exp(1j * e_au * t) for t in slits)) ** 2
    # one full envelope lobe, centred on six photon energies
    band = (3.6 * SPACING, 8.4 * SPACING)
    result = envelope_and_subslit(ENERGIES, yields, band, fringe_spacing=SPACING)
    assert result.resolved
    assert result.fringe_count == pytest.approx(3.0, rel=0.1)
    assert result.subslit_separation == pytest.approx(tau * AU_TIME_AS, rel=0.1)


def test_flat_envelope_is_unresolved():
    result = envelope_and_subslit(ENERGIES, two_beam(), BAND)
    assert not result.resolved
    assert math.isinf(result.width)
    report = fringe_report(ENERGIES, two_beam(), BAND)
    assert not report.envelope_resolved


def test_envelope_needs_four_fringes():
    with pytest.raises(InsufficientFringesError):
        envelope_and_subslit(ENERGIES, two_beam(), (3.0, 6.5), fringe_spacing=SPACING)


def test_normalization_gives_unit_row_mean():
    rng = np.random.default_rng(7)
    scan = make_scan(right=lambda cep: two_beam() * (1.0 + 0.5 * math.sin(cep)) + rng.uniform(0.0, 0.1, ENERGIES.size))
    normalized = normalize_by_phase_average(scan)
    assert normalized.normalized
    for direction in ('left', 'right'):
        np.testing.assert_allclose(normalized.matrix(direction).mean(axis=1), 1.0, atol=1e-9)
    with pytest.raises(ScanAlreadyNormalizedError):
        normalize_by_phase_average(normalized)


def test_normalization_marks_zero_bins():
    scan = make_scan(right=lambda cep: np.where(ENERGIES < 1.0, 0.0, two_beam()))
    normalized = normalize_by_phase_average(scan)
    zero = ENERGIES < 1.0
    assert np.all(normalized.neutral_bins['right'][zero])
    assert np.all(normalized.matrix('right')[zero] == 1.0)


def test_scan_validation():
    spectrum = DirectionalSpectrum(energies=ENERGIES / HARTREE_EV, yield_left=two_beam(), yield_right=two_beam())
    with pytest.raises(ValueError):
        PhaseScan(cep_values=[0.0], spectra=[spectrum])
    with pytest.raises(ValueError):
        PhaseScan(cep_values=[0.0, 1.0, 3.0], spectra=[spectrum] * 3)
    other = DirectionalSpectrum(energies=ENERGIES[:-1] / HARTREE_EV, yield_left=two_beam()[:-1],
                                yield_right=two_beam()[:-1])
    with pytest.raises(ValueError):
        PhaseScan(cep_values=[0.0, 1.0], spectra=[spectrum, other])
    scan = PhaseScan(cep_values=[0.0, 1.0], spectra=[spectrum, spectrum])
    assert scan.matrix('right').shape == (ENERGIES.size, 2)


def test_stripes_drift_one_spacing_per_cycle():
    scan = make_scan()
    tracks = track_fringes(scan, 'right', BAND, fringe_spacing=SPACING)
    assert tracks.shape[0] == 32
    middle = tracks[:, tracks.shape[1] // 2]
    assert np.all(np.diff(middle) > 0)
    assert middle[-1] - middle[0] == pytest.approx(SPACING * 31 / 32, abs=0.01)


def test_visibility_map_is_periodic_and_directional():
    maps = phase_scan_visibility(make_scan(), BAND, fringe_spacing=SPACING)
    assert maps['right'].shape == (32,)
    np.testing.assert_allclose(maps['right'], 1.0, atol=1e-3)
    assert np.all(np.isnan(maps['left']))


def test_flatten_removes_rolloff_but_keeps_fringes():
    flat = flatten_rolloff(ENERGIES, two_beam() * np.exp(-ENERGIES / 3.0), SPACING)
    period = int(round(SPACING / (ENERGIES[1] - ENERGIES[0])))
    inside = np.nonzero((ENERGIES > 4.0) & (ENERGIES < 12.0 - SPACING))[0]
    # the roll-off is one factor per fringe, so the flattened fringes repeat exactly
    np.testing.assert_allclose(flat[inside], flat[inside + period], rtol=1e-6, atol=1e-12)
    assert np.max(flat[inside]) > 0.1
    assert np.min(flat[inside]) < 0.05


def test_seeded_spacing_picks_the_nearest_line():
    yields = 3.0 + 0.6 * np.cos(2 * math.pi * ENERGIES / SPACING) + np.cos(2 * math.pi * ENERGIES / 0.6)
    assert estimate_fringe_spacing(ENERGIES, yields, BAND) == pytest.approx(0.6, rel=0.06)
    assert estimate_fringe_spacing(ENERGIES, yields, BAND, expected=SPACING) == pytest.approx(SPACING, rel=0.06)


def test_envelope_humps_are_not_fringes():
    humps = 1.0 + 0.5 * np.cos(2 * math.pi * ENERGIES / 6.0)
    assert visibility(ENERGIES, humps, (2.0, 14.0), fringe_spacing=SPACING) == 0.0


def test_comb_phase_follows_fringe_shift():
    shift = 0.3
    reference = comb_coefficient(ENERGIES, two_beam(), BAND, SPACING)
    shifted = comb_coefficient(ENERGIES, two_beam(shift), BAND, SPACING)
    turn = np.angle(shifted / reference)
    assert turn == pytest.approx(-2 * math.pi * shift / SPACING, abs=0.01)
