"""
Fringe observables shared by every model and by measured spectra.

All energies handed to this module are in eV; the sub-slit separation is
returned in attoseconds.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.ndimage import maximum_filter1d, uniform_filter1d
from scipy.signal import find_peaks

from configs.simulation_configs import AU_TIME_AS, HARTREE_EV
from .errors import InsufficientFringesError, ScanAlreadyNormalizedError
from .semiclassical import DIRECTIONS, DirectionalSpectrum

Band = Tuple[float, float]

# spectral lines weaker than this fraction of the strongest are not fringe candidates
MIN_LINE_POWER = 0.05
# extremum prominence, as a fraction of the flattened maximum
MIN_PROMINENCE = 0.02
# flanking-minimum distance of a fringe, in spacings
FRINGE_WIDTH = (0.4, 1.6)


@dataclass
class PhaseScan:
    cep_values: np.ndarray
    spectra: List[DirectionalSpectrum]
    normalized: bool = False
    neutral_bins: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.cep_values = np.asarray(self.cep_values, dtype=float)
        if self.cep_values.size < 2:
            raise ValueError("A phase scan needs at least 2 CEP values")
        if len(self.spectra) != self.cep_values.size:
            raise ValueError("One spectrum per CEP value is required")
        steps = np.diff(self.cep_values)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12) or steps[0] <= 0:
            raise ValueError("CEP values must be uniformly spaced and ascending")
        reference = self.spectra[0].energies
        if any(not np.array_equal(s.energies, reference) for s in self.spectra[1:]):
            raise ValueError("All spectra of a scan must share one energy grid")

    @property
    def energies(self) -> np.ndarray:
        return self.spectra[0].energies

    def matrix(self, direction: str) -> np.ndarray:
        """Yields as (n_bins, n_cep)"""
        return np.column_stack([s.direction(direction) for s in self.spectra])


@dataclass
class FringeReport:
    peak_energies: np.ndarray  # eV
    spacing_mean: float  # eV
    visibility: float
    envelope_fringe_count: float
    subslit_separation: float  # as
    envelope_resolved: bool = True

    def __post_init__(self):
        if not 0.0 <= self.visibility <= 1.0:
            raise ValueError(f"Visibility {self.visibility} outside [0, 1]")
        if self.spacing_mean <= 0:
            raise ValueError(f"Fringe spacing must be positive, got {self.spacing_mean}")


@dataclass(frozen=True)
class EnvelopeResult:
    width: float  # FWHM of the envelope, eV
    fringe_count: float
    subslit_separation: float  # as
    resolved: bool
    center: float = math.nan  # energy of the envelope maximum, eV


def energies_ev(spectrum: DirectionalSpectrum) -> np.ndarray:
    return spectrum.energies * HARTREE_EV


def normalize_by_phase_average(scan: PhaseScan) -> PhaseScan:
    """Divide every yield by its mean over CEP, bin by bin and per direction"""
    if scan.normalized:
        raise ScanAlreadyNormalizedError("Scan is already normalized by the phase average")
    normalized = {}
    neutral = {}
    for direction in DIRECTIONS:
        matrix = scan.matrix(direction)
        mean = matrix.mean(axis=1)
        zero = mean <= 0
        safe_mean = np.where(zero, 1.0, mean)
        result = matrix / safe_mean[:, None]
        result[zero, :] = 1.0
        normalized[direction] = result
        neutral[direction] = zero
        if zero.any():
            logging.info(f"{int(zero.sum())} {direction} bins have zero phase average; set to 1")
    spectra = [
        DirectionalSpectrum(
            energies=s.energies,
            yield_left=normalized['left'][:, i],
            yield_right=normalized['right'][:, i],
            meta={**s.meta, 'normalized': True},
        )
        for i, s in enumerate(scan.spectra)
    ]
    return PhaseScan(cep_values=scan.cep_values, spectra=spectra, normalized=True, neutral_bins=neutral)


def _band_mask(energies: np.ndarray, band: Band) -> np.ndarray:
    lo, hi = band
    if not lo < hi:
        raise ValueError(f"Invalid energy band {band}")
    mask = (energies >= lo) & (energies <= hi)
    if mask.sum() < 3:
        raise ValueError(f"Energy band {band} holds fewer than 3 grid points")
    return mask


def flatten_rolloff(energies: np.ndarray, yields: np.ndarray, spacing: float) -> np.ndarray:
    """
    Yields divided by their slow trend: the running maximum over two fringe
    spacings, log-averaged over the same width. Fringes keep their shape, the
    roll-off of several decades across the band does not.
    """
    yields = np.asarray(yields, dtype=float)
    step = float(np.median(np.diff(energies)))
    width = max(3, int(round(2.0 * spacing / step)))
    floor = 1e-12 * max(float(np.max(yields)), 1e-300)
    upper = maximum_filter1d(yields, size=width, mode='nearest')
    trend = np.exp(uniform_filter1d(np.log(np.maximum(upper, floor)), size=width, mode='nearest'))
    return yields / trend


def estimate_fringe_spacing(energies: np.ndarray, yields: np.ndarray, band: Band,
                            expected: Optional[float] = None) -> float:
    """
    Modulation period inside the band from the power spectrum of the
    flattened signal. Sub-slit beats put several comparable lines next to the
    photon-energy one, so with `expected` (usually the photon energy) the line
    nearest to it wins; otherwise the strongest line does.
    """
    energies = np.asarray(energies, dtype=float)
    mask = _band_mask(energies, band)
    e, y = energies[mask], np.asarray(yields, dtype=float)[mask]
    uniform = np.linspace(e[0], e[-1], e.size)
    span = uniform[-1] - uniform[0]
    flat = flatten_rolloff(uniform, np.interp(uniform, e, y), expected or span / 4.0)
    signal = flat - flat.mean()
    if np.max(np.abs(signal)) <= 1e-12 * np.max(np.abs(flat)):
        raise InsufficientFringesError()

    n_fft = 16 * (1 << int(math.ceil(math.log2(signal.size))))
    power = np.abs(np.fft.rfft(signal * np.hanning(signal.size), n=n_fft)) ** 2
    frequencies = np.fft.rfftfreq(n_fft, d=uniform[1] - uniform[0])
    lines, _ = find_peaks(power)
    # ignore modulations slower than two periods per band
    lines = lines[frequencies[lines] >= 2.0 / span]
    if lines.size == 0 or power[lines].max() <= 0:
        raise InsufficientFringesError()
    candidates = lines[power[lines] >= MIN_LINE_POWER * power[lines].max()]
    if expected:
        chosen = candidates[np.argmin(np.abs(np.log(frequencies[candidates] * expected)))]
    else:
        chosen = candidates[np.argmax(power[candidates])]

    a, b, c = np.log(np.maximum(power[chosen - 1:chosen + 2], 1e-300))
    curvature = a - 2.0 * b + c
    shift = 0.5 * (a - c) / curvature if curvature != 0 else 0.0
    return 1.0 / ((chosen + shift) * frequencies[1])


def _resolve_spacing(energies: np.ndarray, yields: np.ndarray, band: Band,
                     fringe_spacing: Optional[float], expected_spacing: Optional[float]) -> float:
    if fringe_spacing:
        return fringe_spacing
    return estimate_fringe_spacing(energies, yields, band, expected=expected_spacing)


def _window_bins(energies: np.ndarray, spacing: float) -> int:
    step = float(np.median(np.diff(energies)))
    return max(1, int(round(spacing / 5.0 / step)))


@dataclass(frozen=True)
class _Extrema:
    maxima: np.ndarray  # indices into the full arrays, located on the smoothed curve
    minima: np.ndarray
    half_window: int
    first: int  # band index range [first, last]
    last: int

    def refine(self, yields: np.ndarray, indices: np.ndarray, pick) -> np.ndarray:
        """Move each index to the raw extremum within half a smoothing window"""
        refined = []
        for i in indices:
            lo, hi = max(i - self.half_window, self.first), min(i + self.half_window, self.last) + 1
            refined.append(lo + int(pick(yields[lo:hi])))
        return np.array(refined, dtype=int)


def _extrema(energies: np.ndarray, yields: np.ndarray, band: Band, spacing: float) -> _Extrema:
    band_idx = np.nonzero(_band_mask(energies, band))[0]
    window = _window_bins(energies, spacing)
    flat = flatten_rolloff(energies[band_idx], yields[band_idx], spacing)
    smoothed = uniform_filter1d(flat, size=window, mode='nearest')
    prominence = MIN_PROMINENCE * max(float(np.max(smoothed)), 1e-300)
    max_idx, _ = find_peaks(smoothed, prominence=prominence)
    min_idx, _ = find_peaks(-smoothed, prominence=prominence)
    return _Extrema(maxima=band_idx[max_idx], minima=band_idx[min_idx], half_window=window // 2,
                    first=int(band_idx[0]), last=int(band_idx[-1]))


def visibility(energies: np.ndarray, yields: np.ndarray, band: Band,
               fringe_spacing: Optional[float] = None,
               expected_spacing: Optional[float] = None) -> float:
    """
    Mean (I_max - I_min) / (I_max + I_min) over the fringes in the band.

    A maximum is a fringe when its two flanking minima lie between 0.4 and 1.6
    spacings apart; wider humps are envelope lobes and do not count. Each
    (maximum, minimum) pair enters once. Maxima without any fringe give 0.
    """
    energies = np.asarray(energies, dtype=float)
    yields = np.asarray(yields, dtype=float)
    spacing = _resolve_spacing(energies, yields, band, fringe_spacing, expected_spacing)
    found = _extrema(energies, yields, band, spacing)
    if found.maxima.size < 2:
        raise InsufficientFringesError()

    contrasts: Dict[Tuple[int, int], float] = {}
    for top in found.maxima:
        below = found.minima[found.minima < top]
        above = found.minima[found.minima > top]
        if below.size == 0 or above.size == 0:
            continue
        left, right = below[-1], above[0]
        if not FRINGE_WIDTH[0] * spacing <= energies[right] - energies[left] <= FRINGE_WIDTH[1] * spacing:
            continue
        high = int(found.refine(yields, np.array([top]), np.argmax)[0])
        for low in found.refine(yields, np.array([left, right]), np.argmin):
            total = yields[high] + yields[low]
            if total > 0:
                contrasts[(high, int(low))] = (yields[high] - yields[low]) / total
    if not contrasts:
        logging.debug(f"No fringe of width ~{spacing:.3f} eV among {found.maxima.size} maxima")
        return 0.0
    return float(np.clip(np.mean(list(contrasts.values())), 0.0, 1.0))


def _peak_vertices(energies: np.ndarray, yields: np.ndarray, maxima: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    positions, heights = [], []
    for i in maxima:
        if i == 0 or i == yields.size - 1:
            positions.append(energies[i])
            heights.append(yields[i])
            continue
        y0, y1, y2 = yields[i - 1], yields[i], yields[i + 1]
        curvature = y0 - 2.0 * y1 + y2
        step = 0.5 * (energies[i + 1] - energies[i - 1])
        shift = 0.5 * (y0 - y2) / curvature if curvature != 0 else 0.0
        positions.append(energies[i] + shift * step)
        heights.append(y1 - 0.25 * (y0 - y2) * shift)
    return np.array(positions), np.array(heights)


def _maxima_vertices(energies: np.ndarray, yields: np.ndarray, band: Band,
                     spacing: float) -> Tuple[np.ndarray, np.ndarray]:
    found = _extrema(energies, yields, band, spacing)
    return _peak_vertices(energies, yields, found.refine(yields, found.maxima, np.argmax))


def fringe_positions(energies: np.ndarray, yields: np.ndarray, band: Band,
                     fringe_spacing: Optional[float] = None,
                     expected_spacing: Optional[float] = None) -> np.ndarray:
    """Peak energies, refined by a parabola through each discrete maximum"""
    energies = np.asarray(energies, dtype=float)
    yields = np.asarray(yields, dtype=float)
    spacing = _resolve_spacing(energies, yields, band, fringe_spacing, expected_spacing)
    positions, _ = _maxima_vertices(energies, yields, band, spacing)
    return positions


def envelope_and_subslit(energies: np.ndarray, yields: np.ndarray, band: Band,
                         fringe_spacing: Optional[float] = None,
                         expected_spacing: Optional[float] = None) -> EnvelopeResult:
    """
    FWHM of the upper envelope through the fringe maxima, the number of
    fringe spacings it spans, and the sub-slit separation.

    Convention: tau = pi / FWHM. Two sub-slits tau apart modulate the spectrum
    as cos^2(E tau / 2), a lobe sequence of energy period 2 pi / tau whose
    lobes are half a period wide at half maximum; hence tau = 2 pi / period
    = pi / FWHM, not 2 pi / FWHM.

    Raw spectra are dominated by the roll-off; pass phase-normalized yields.
    """
    energies = np.asarray(energies, dtype=float)
    yields = np.asarray(yields, dtype=float)
    spacing = _resolve_spacing(energies, yields, band, fringe_spacing, expected_spacing)
    positions, heights = _maxima_vertices(energies, yields, band, spacing)
    if positions.size < 4:
        raise InsufficientFringesError("too few fringes for an envelope")
    envelope = PchipInterpolator(positions, heights)
    fine = np.linspace(positions[0], positions[-1], 20001)
    values = envelope(fine)
    top = int(np.argmax(values))
    half = 0.5 * values[top]

    below_left = np.nonzero(values[:top] < half)[0]
    below_right = np.nonzero(values[top:] < half)[0]
    if below_left.size == 0 or below_right.size == 0:
        logging.info("Fringe envelope has no half-maximum crossing inside the band")
        return EnvelopeResult(width=math.inf, fringe_count=math.inf, subslit_separation=0.0,
                              resolved=False, center=float(fine[top]))

    i = below_left[-1]
    left = np.interp(half, [values[i], values[i + 1]], [fine[i], fine[i + 1]])
    j = top + below_right[0]
    right = np.interp(half, [values[j], values[j - 1]], [fine[j], fine[j - 1]])
    width = float(right - left)
    separation = math.pi / (width / HARTREE_EV) * AU_TIME_AS
    return EnvelopeResult(width=width, fringe_count=width / spacing,
                          subslit_separation=separation, resolved=True, center=float(fine[top]))


def fringe_report(energies: np.ndarray, yields: np.ndarray, band: Band,
                  fringe_spacing: Optional[float] = None,
                  expected_spacing: Optional[float] = None) -> FringeReport:
    """
    spacing_mean is the measured modulation period (seeded by whichever
    spacing hint is given), not the mean gap between local maxima: sub-slit
    beats split one fringe period into unequal gaps.
    """
    energies = np.asarray(energies, dtype=float)
    yields = np.asarray(yields, dtype=float)
    measured = estimate_fringe_spacing(energies, yields, band, expected=fringe_spacing or expected_spacing)
    spacing = fringe_spacing or measured
    positions = fringe_positions(energies, yields, band, spacing)
    if positions.size < 2:
        raise InsufficientFringesError()
    try:
        envelope = envelope_and_subslit(energies, yields, band, spacing)
    except InsufficientFringesError:
        logging.warning("Too few fringes for an envelope; envelope fields left undefined")
        envelope = EnvelopeResult(width=math.nan, fringe_count=math.nan,
                                  subslit_separation=math.nan, resolved=False)
    return FringeReport(
        peak_energies=positions,
        spacing_mean=measured,
        visibility=visibility(energies, yields, band, spacing),
        envelope_fringe_count=envelope.fringe_count,
        subslit_separation=envelope.subslit_separation,
        envelope_resolved=envelope.resolved,
    )


def comb_coefficient(energies: np.ndarray, yields: np.ndarray, band: Band, spacing: float) -> complex:
    """Hann-weighted Fourier coefficient of the flattened band at frequency 1 / spacing"""
    energies = np.asarray(energies, dtype=float)
    band_idx = np.nonzero(_band_mask(energies, band))[0]
    e = energies[band_idx]
    flat = flatten_rolloff(e, np.asarray(yields, dtype=float)[band_idx], spacing)
    weights = np.hanning(e.size) * (flat - flat.mean())
    return complex(np.sum(weights * np.exp(-2j * math.pi * e / spacing)))


def track_fringes(scan: PhaseScan, direction: str, band: Band,
                  fringe_spacing: Optional[float] = None,
                  expected_spacing: Optional[float] = None) -> np.ndarray:
    """
    Stripes of constant fringe phase through the scan, as an (n_cep, n_stripes)
    array of energies in eV.

    The comb phase psi of every spectrum is unwrapped along the CEP axis and
    stripe n sits at (n - psi / 2 pi) * spacing. Stripes are the comb teeth
    inside the band at the first CEP value; a tooth leaving the band is still
    followed, and the next one takes its place in the band.
    """
    energies = energies_ev(scan.spectra[0])
    spacing = _resolve_spacing(energies, scan.spectra[0].direction(direction), band,
                               fringe_spacing, expected_spacing)
    coefficients = np.array([comb_coefficient(energies, s.direction(direction), band, spacing) for s in scan.spectra])
    scale = np.max(np.abs(coefficients))
    if scale == 0 or np.any(np.abs(coefficients) <= 1e-12 * scale):
        raise InsufficientFringesError("no fringe comb in some spectra of the scan")
    phases = np.unwrap(np.angle(coefficients))
    offset = phases[0] / (2.0 * math.pi)
    orders = np.arange(math.ceil(band[0] / spacing + offset), math.floor(band[1] / spacing + offset) + 1)
    if orders.size == 0:
        raise InsufficientFringesError("band narrower than one fringe")
    return (orders[None, :] - phases[:, None] / (2.0 * math.pi)) * spacing


def stripe_excursion(tracks: np.ndarray) -> float:
    """Peak-to-peak energy excursion (eV) of the stripes over the scan"""
    shifts = tracks[:, 0] - tracks[0, 0]
    return float(np.ptp(shifts))


def phase_scan_visibility(scan: PhaseScan, band: Band,
                          fringe_spacing: Optional[float] = None,
                          expected_spacing: Optional[float] = None) -> Dict[str, np.ndarray]:
    """Per-CEP visibility for both directions; NaN where fringes are missing"""
    energies = energies_ev(scan.spectra[0])
    result = {}
    for direction in DIRECTIONS:
        values = []
        for spectrum in scan.spectra:
            try:
                values.append(visibility(energies, spectrum.direction(direction), band,
                                         fringe_spacing, expected_spacing))
            except InsufficientFringesError:
                values.append(np.nan)
        result[direction] = np.array(values)
    return result
