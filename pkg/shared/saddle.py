"""
Keldysh-type refinement of the slit model.

Release times become complex roots ts of g(t) = (p + A(t))^2 / 2 + ip.
The phase of a saddle is the action accumulated up to the release time,
S(ts) = -integral_{ts}^{T} g dt, so exp(i S) is damped for Im ts > 0 and
S''(ts) = g'(ts) = -(p + A(ts)) E(ts).
"""
import cmath
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from configs.simulation_configs import SADDLE_DEFAULTS
from .ionization import Atom
from .pulse import (
    Pulse,
    electric_field_analytic,
    max_abs_vector_potential,
    vector_potential_analytic,
    vector_potential_extrema,
)
from .semiclassical import DIRECTIONS, DirectionalSpectrum, action_analytic, find_slits, momentum, validate_energy_grid


@dataclass(frozen=True)
class ComplexSaddle:
    ts: complex
    action: complex
    second_deriv: complex


def _g(pulse: Pulse, atom: Atom, p: float, t: complex) -> complex:
    return complex(0.5 * (p + vector_potential_analytic(pulse, t)) ** 2 + atom.ip)


def _g_prime(pulse: Pulse, p: float, t: complex) -> complex:
    return complex(-(p + vector_potential_analytic(pulse, t)) * electric_field_analytic(pulse, t))


def _escaped(pulse: Pulse, t: complex) -> bool:
    # a pulse length off the real axis a saddle carries no weight
    scale = pulse.total_duration
    return not (cmath.isfinite(t) and abs(t.imag) <= scale and -scale <= t.real <= 2.0 * scale)


def newton_saddle(pulse: Pulse, atom: Atom, p: float, seed: complex,
                  max_iterations: int = SADDLE_DEFAULTS['max_iterations'],
                  tolerance: float = SADDLE_DEFAULTS['residual_tolerance']) -> Optional[complex]:
    """Damped Newton iteration on g; None when the seed does not converge or runs away from the pulse"""
    t = complex(seed)
    if _escaped(pulse, t):
        return None
    # overshooting trial steps may overflow; they fail the residual test and are halved
    with np.errstate(over='ignore', invalid='ignore'):
        residual = abs(_g(pulse, atom, p, t))
        for _ in range(max_iterations):
            slope = _g_prime(pulse, p, t)
            if slope == 0 or not cmath.isfinite(slope):
                return None
            step = _g(pulse, atom, p, t) / slope
            candidate = t - step
            candidate_residual = abs(_g(pulse, atom, p, candidate))
            halvings = 0
            while not candidate_residual <= residual and halvings < 30:
                step *= 0.5
                candidate = t - step
                candidate_residual = abs(_g(pulse, atom, p, candidate))
                halvings += 1
            if _escaped(pulse, candidate):
                logging.debug(f"Saddle seed {seed:.6g} left the pulse region at {candidate:.6g}")
                return None
            t, residual = candidate, candidate_residual
            if residual < 1e-3 * tolerance or abs(step) < 1e-15 * max(1.0, abs(t)):
                break
    if residual < tolerance and cmath.isfinite(t):
        return t
    return None


def _lobe_seeds(pulse: Pulse, atom: Atom, p: float) -> List[complex]:
    # quadratic model A ~ A_m + A''/2 (t - t_m)^2 around every lobe able to emit momentum p
    times, values = vector_potential_extrema(pulse)
    seeds = []
    h = 1e-3 / pulse.omega
    for t_m, a_m in zip(times, values):
        if a_m * p >= 0:
            continue
        curvature = -(electric_field_analytic(pulse, t_m + h) - electric_field_analytic(pulse, t_m - h)) / (2 * h)
        if curvature == 0:
            continue
        for branch in (1j, -1j):
            offset = cmath.sqrt(2.0 * (branch * atom.kappa - (p + a_m)) / curvature)
            seeds.extend([t_m + offset, t_m - offset])
    return seeds


def _real_slit_seeds(pulse: Pulse, atom: Atom, p: float) -> List[complex]:
    keldysh_shift = atom.kappa / pulse.peak_field  # gamma / omega
    seeds = []
    for t0 in find_slits(pulse, p):
        field = abs(float(electric_field_analytic(pulse, t0)))
        seeds.append(t0 + 1j * keldysh_shift)
        if field > 0:
            seeds.append(t0 + 1j * atom.kappa / field)
    return seeds


def _converge_all(pulse: Pulse, atom: Atom, p: float, seeds: Sequence[complex]) -> List[complex]:
    roots = []
    for seed in seeds:
        root = newton_saddle(pulse, atom, p, seed)
        if root is None:
            logging.warning(f"Saddle seed {seed:.6g} did not converge for p={p:.6g}")
            continue
        roots.append(root)
    return roots


def _continuation_seeds(pulse: Pulse, atom: Atom, p: float,
                        steps: int = SADDLE_DEFAULTS['continuation_steps']) -> List[complex]:
    # walk from the largest allowed momentum in this direction out to the forbidden p
    edge = max_abs_vector_potential(pulse, sign=-1 if p > 0 else 1)
    if edge == 0:
        return []
    p_start = math.copysign(0.995 * edge, p)
    roots = _converge_all(pulse, atom, p_start, _real_slit_seeds(pulse, atom, p_start))
    for p_step in np.linspace(p_start, p, steps)[1:]:
        roots = [r for r in (newton_saddle(pulse, atom, p_step, r) for r in roots) if r is not None]
    return roots


def _deduplicate(pulse: Pulse, roots: Sequence[complex],
                 distance: float = SADDLE_DEFAULTS['dedup_distance']) -> List[complex]:
    kept: List[complex] = []
    for root in sorted(roots, key=lambda r: (r.real, r.imag)):
        if root.imag <= 0 or not 0.0 <= root.real <= pulse.total_duration:
            continue
        if any(abs(root - other) < distance for other in kept):
            continue
        kept.append(root)
    return kept


def _make_saddle(pulse: Pulse, atom: Atom, p: float, ts: complex) -> ComplexSaddle:
    return ComplexSaddle(
        ts=ts,
        action=complex(-action_analytic(pulse, atom, p, ts)),
        second_deriv=_g_prime(pulse, p, ts),
    )


def solve_saddles(pulse: Pulse, atom: Atom, p: float,
                  seeds: Optional[Sequence[complex]] = None) -> List[ComplexSaddle]:
    """Upper-half-plane saddles with Re ts inside the pulse, ordered by Re ts"""
    if p == 0:
        raise ValueError("solve_saddles needs |p| > 0")
    if pulse.a0 == 0:
        return []
    candidates = list(seeds or [])
    real_seeds = _real_slit_seeds(pulse, atom, p)
    candidates.extend(real_seeds)
    candidates.extend(_lobe_seeds(pulse, atom, p))
    if not real_seeds and not seeds:
        candidates.extend(_continuation_seeds(pulse, atom, p))
    roots = _deduplicate(pulse, _converge_all(pulse, atom, p, candidates))
    return [_make_saddle(pulse, atom, p, ts) for ts in roots]


def _prefactor(saddle: ComplexSaddle) -> complex:
    return cmath.sqrt(2j * math.pi / saddle.second_deriv)


def _is_coalescing(saddle: ComplexSaddle,
                   threshold: float = SADDLE_DEFAULTS['coalescence_threshold']) -> bool:
    return abs(saddle.second_deriv) < threshold


def sfa_amplitude(pulse: Pulse, atom: Atom, p: float) -> Tuple[complex, bool]:
    """(M(p), unreliable) on the principal square-root branch"""
    saddles = solve_saddles(pulse, atom, p)
    total = sum((_prefactor(s) * cmath.exp(1j * s.action) for s in saddles), 0j)
    return total, any(_is_coalescing(s) for s in saddles)


def _tracked_sum(saddles: List[ComplexSaddle], previous: List[Tuple[complex, complex]]):
    """Sum with every square root continued from the nearest saddle of the previous grid point"""
    terms, tracked = [], []
    for s in saddles:
        root = _prefactor(s)
        if previous:
            prev_ts, prev_root = min(previous, key=lambda item: abs(item[0] - s.ts))
            if abs(-root - prev_root) < abs(root - prev_root):
                root = -root
        tracked.append((s.ts, root))
        terms.append(root * cmath.exp(1j * s.action))
    return sum(terms, 0j), tracked


def sfa_spectrum(pulse: Pulse, atom: Atom, energy_grid) -> Tuple[DirectionalSpectrum, Dict[str, np.ndarray]]:
    """Directional SFA spectrum plus a per-direction mask of unreliable (coalescing) points"""
    energies = validate_energy_grid(energy_grid)
    yields, unreliable = {}, {}
    for direction in DIRECTIONS:
        values = np.zeros(energies.size)
        flags = np.zeros(energies.size, dtype=bool)
        previous: List[Tuple[complex, complex]] = []
        for i, energy in enumerate(energies):
            p = momentum(energy, direction)
            saddles = solve_saddles(pulse, atom, p, seeds=[ts for ts, _ in previous])
            total, previous = _tracked_sum(saddles, previous)
            values[i] = abs(total) ** 2
            flags[i] = any(_is_coalescing(s) for s in saddles)
            if flags[i]:
                logging.warning(f"Coalescing saddles at E={energy:.6g} a.u. ({direction}); amplitude unreliable")
        yields[direction] = values
        unreliable[direction] = flags
    result = DirectionalSpectrum(
        energies=energies,
        yield_left=yields['left'],
        yield_right=yields['right'],
        meta={'model': 'saddle', 'pulse': pulse.describe(), 'ip': atom.ip},
    )
    return result, unreliable
