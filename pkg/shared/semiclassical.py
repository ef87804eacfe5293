"""
Simple-man temporal double slit.

An electron released at rest at t0 ends with drift momentum p = -A(t0)
(atomic units, e = -1). Every real solution of p + A(t0) = 0 is a slit of
weight sqrt(R(E(t0))) and phase S(p, t0); the slit amplitudes add coherently.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from configs.simulation_configs import SEMICLASSICAL_DEFAULTS
from .ionization import Atom, rate
from .pulse import (
    Pulse,
    electric_field,
    sample_grid,
    vector_potential,
    vector_potential_analytic,
    vector_potential_integral,
    vector_potential_square_integral,
    vector_potential_zeros,
)

DIRECTIONS = ('left', 'right')


@dataclass(frozen=True)
class SlitSolution:
    t0: float
    weight: float
    action: float
    slope: float  # dA/dt at t0


@dataclass
class DirectionalSpectrum:
    energies: np.ndarray  # a.u., strictly increasing
    yield_left: np.ndarray  # p < 0
    yield_right: np.ndarray  # p > 0
    meta: Dict = field(default_factory=dict)

    def __post_init__(self):
        self.energies = np.asarray(self.energies, dtype=float)
        self.yield_left = np.asarray(self.yield_left, dtype=float)
        self.yield_right = np.asarray(self.yield_right, dtype=float)
        if not (self.energies.shape == self.yield_left.shape == self.yield_right.shape):
            raise ValueError("Energies and yields must have equal length")
        if self.energies.size > 1 and np.any(np.diff(self.energies) <= 0):
            raise ValueError("Energies must be strictly increasing")
        if np.any(self.yield_left < 0) or np.any(self.yield_right < 0):
            raise ValueError("Yields must be non-negative")

    def direction(self, name: str) -> np.ndarray:
        if name == 'left':
            return self.yield_left
        if name == 'right':
            return self.yield_right
        raise ValueError(f"Unknown direction {name!r}, expected 'left' or 'right'")


@dataclass
class SlitGroup:
    """One half-cycle lobe of A(t); its release times are the sub-slits"""
    lobe: int
    slits: List[SlitSolution]

    @property
    def strength(self) -> float:
        return float(sum(s.weight ** 2 for s in self.slits))

    @property
    def gap(self) -> float:
        if len(self.slits) < 2:
            return 0.0
        times = [s.t0 for s in self.slits]
        return max(times) - min(times)


def validate_energy_grid(energy_grid) -> np.ndarray:
    grid = np.asarray(energy_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("Energy grid must be a non-empty 1D array")
    if np.any(grid <= 0):
        raise ValueError("Energy grid must be positive")
    if grid.size > 1 and np.any(np.diff(grid) <= 0):
        raise ValueError("Energy grid must be strictly ascending")
    return grid


def momentum(energy: float, direction: str) -> float:
    p = math.sqrt(2.0 * energy)
    return -p if direction == 'left' else p


def find_slits(pulse: Pulse, p: float,
               samples_per_cycle: int = SEMICLASSICAL_DEFAULTS['samples_per_cycle'],
               tolerance: float = SEMICLASSICAL_DEFAULTS['root_tolerance']) -> np.ndarray:
    """Ascending real release times t0 with p + A(t0) = 0"""
    if p == 0:
        raise ValueError("find_slits needs |p| > 0")
    if pulse.a0 == 0:
        return np.array([])

    def mismatch(t):
        return p + vector_potential_analytic(pulse, t)

    grid = sample_grid(pulse, samples_per_cycle)
    values = mismatch(grid)
    roots = list(grid[values == 0.0])
    for i in np.nonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0)[0]:
        t0 = brentq(mismatch, grid[i], grid[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
        residual = abs(float(mismatch(t0)))
        if residual >= tolerance * max(1.0, abs(p)):
            logging.warning(f"Slit at t0={t0:.12g} for p={p:.6g} has residual {residual:.3e}")
        roots.append(t0)
    return np.array(sorted(roots))


def action(pulse: Pulse, atom: Atom, p: float, t0: float,
           epsabs: float = SEMICLASSICAL_DEFAULTS['action_epsabs']) -> float:
    """S(p, t0) = integral from t0 to the pulse end of (p + A)^2 / 2 + ip"""
    T = pulse.total_duration
    if not 0.0 <= t0 <= T:
        raise ValueError(f"Release time {t0} outside pulse support [0, {T}]")

    def integrand(t):
        return 0.5 * (p + vector_potential(pulse, t)) ** 2 + atom.ip

    breakpoints = [t for t in np.arange(1, math.ceil(pulse.n_cycles)) * pulse.optical_period if t0 < t < T]
    value, _ = quad(integrand, t0, T, epsabs=epsabs, epsrel=1e-13, limit=1000, points=breakpoints or None)
    return value


def action_analytic(pulse: Pulse, atom: Atom, p, t0):
    """Closed-form S(p, t0); the analytic continuation also accepts complex t0"""
    T = pulse.total_duration
    linear = vector_potential_integral(pulse, T) - vector_potential_integral(pulse, t0)
    square = vector_potential_square_integral(pulse, T) - vector_potential_square_integral(pulse, t0)
    return (0.5 * p * p + atom.ip) * (T - t0) + p * linear + 0.5 * square


def slit_weight(pulse: Pulse, atom: Atom, t0: float) -> float:
    return math.sqrt(rate(electric_field(pulse, t0), atom))


ACTION_METHODS = ('quadrature', 'closed_form')


def slit_action(pulse: Pulse, atom: Atom, p: float, t0: float,
                method: str = SEMICLASSICAL_DEFAULTS['action_method']) -> float:
    if method == 'quadrature':
        return action(pulse, atom, p, t0)
    if method == 'closed_form':
        return float(np.real(action_analytic(pulse, atom, p, t0)))
    raise ValueError(f"Unknown action method {method!r}; expected one of {ACTION_METHODS}")


def solve_slits(pulse: Pulse, atom: Atom, p: float,
                action_method: str = SEMICLASSICAL_DEFAULTS['action_method']) -> List[SlitSolution]:
    return [
        SlitSolution(
            t0=float(t0),
            weight=slit_weight(pulse, atom, t0),
            action=slit_action(pulse, atom, p, t0, action_method),
            slope=-float(electric_field(pulse, t0)),
        )
        for t0 in find_slits(pulse, p)
    ]


def coherent_sum(slits: List[SlitSolution]) -> complex:
    return complex(sum(s.weight * np.exp(1j * s.action) for s in slits))


def amplitude(pulse: Pulse, atom: Atom, p: float,
              action_method: str = SEMICLASSICAL_DEFAULTS['action_method']) -> complex:
    """M(p) = sum over slits of w_j exp(i S_j); zero for classically forbidden p"""
    return coherent_sum(solve_slits(pulse, atom, p, action_method))


def spectrum(pulse: Pulse, atom: Atom, energy_grid,
             action_method: str = SEMICLASSICAL_DEFAULTS['action_method']) -> DirectionalSpectrum:
    if action_method not in ACTION_METHODS:
        raise ValueError(f"Unknown action method {action_method!r}; expected one of {ACTION_METHODS}")
    energies = validate_energy_grid(energy_grid)
    yields = {}
    for direction in DIRECTIONS:
        yields[direction] = np.array([abs(amplitude(pulse, atom, momentum(e, direction), action_method)) ** 2
                                      for e in energies])
    return DirectionalSpectrum(
        energies=energies,
        yield_left=yields['left'],
        yield_right=yields['right'],
        meta={'model': 'semiclassical', 'pulse': pulse.describe(), 'ip': atom.ip, 'action_method': action_method},
    )


def group_slits(pulse: Pulse, slits: List[SlitSolution]) -> List[SlitGroup]:
    borders = vector_potential_zeros(pulse)
    groups: Dict[int, SlitGroup] = {}
    for slit in slits:
        lobe = int(np.searchsorted(borders, slit.t0))
        groups.setdefault(lobe, SlitGroup(lobe=lobe, slits=[])).slits.append(slit)
    return [groups[k] for k in sorted(groups)]


def which_way_balance(pulse: Pulse, atom: Atom, p: float) -> float:
    """Second-strongest over strongest slit strength: 1 means no which-way information"""
    strengths = sorted((g.strength for g in group_slits(pulse, solve_slits(pulse, atom, p))), reverse=True)
    if len(strengths) < 2 or strengths[0] == 0:
        return 0.0
    return strengths[1] / strengths[0]


def subslit_gap_vs_energy(pulse: Pulse, atom: Atom, energies, direction: str) -> np.ndarray:
    """Sub-slit gap (a.u.) in the strongest lobe per energy; NaN where the lobe has no pair"""
    gaps = []
    for energy in validate_energy_grid(energies):
        groups = group_slits(pulse, solve_slits(pulse, atom, momentum(energy, direction)))
        if not groups:
            gaps.append(np.nan)
            continue
        strongest = max(groups, key=lambda g: g.strength)
        gaps.append(strongest.gap if len(strongest.slits) >= 2 else np.nan)
    return np.array(gaps)
