"""
One-dimensional TDSE with a soft-core potential, V(x) = -z / sqrt(x^2 + a^2).

Propagation is second-order split-step on a periodic FFT grid. Length gauge
couples x E(t); velocity gauge shifts the kinetic momentum by A(t). A cos^(1/8)
mask removes flux at both box ends; the removed probability is booked per side
and, optionally, the wave passing the inner edge of each absorber is recorded
as a virtual detector signal.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from configs.simulation_configs import TDSE_DEFAULTS
from .errors import GroundStateConvergenceError, PropagationInstabilityError, RootFindingError
from .pulse import Pulse, electric_field, vector_potential
from .semiclassical import DirectionalSpectrum, validate_energy_grid


@dataclass(frozen=True)
class Grid1D:
    x_min: float
    x_max: float
    n_points: int
    dt: float

    def __post_init__(self):
        if self.x_max <= self.x_min:
            raise ValueError(f"x_max ({self.x_max}) must exceed x_min ({self.x_min})")
        if self.n_points < 1024 or self.n_points & (self.n_points - 1):
            raise ValueError(f"n_points must be a power of two >= 1024, got {self.n_points}")
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_points

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_points)

    @property
    def k(self) -> np.ndarray:
        return 2.0 * math.pi * np.fft.fftfreq(self.n_points, d=self.dx)

    def mirror_index(self) -> np.ndarray:
        """Index permutation realising x -> -x on a symmetric periodic grid"""
        return (-np.arange(self.n_points)) % self.n_points


@dataclass(frozen=True)
class SoftCorePotential:
    z: float = TDSE_DEFAULTS['z']
    softening: float = TDSE_DEFAULTS['softening']  # a^2

    def __post_init__(self):
        if self.softening <= 0:
            raise ValueError(f"Softening a^2 must be positive, got {self.softening}")
        if self.z < 0:
            raise ValueError(f"Effective charge must be non-negative, got {self.z}")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return -self.z / np.sqrt(x ** 2 + self.softening)


@dataclass
class Wavefunction1D:
    values: np.ndarray
    absorbed_left: float = 0.0
    absorbed_right: float = 0.0
    time: float = 0.0
    bound_energy: Optional[float] = None
    detector_times: np.ndarray = field(default_factory=lambda: np.array([]))
    detector_left: np.ndarray = field(default_factory=lambda: np.array([], dtype=complex))
    detector_right: np.ndarray = field(default_factory=lambda: np.array([], dtype=complex))

    def norm(self, grid: Grid1D) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * grid.dx)

    def copy(self) -> 'Wavefunction1D':
        return Wavefunction1D(
            values=self.values.copy(),
            absorbed_left=self.absorbed_left,
            absorbed_right=self.absorbed_right,
            time=self.time,
            bound_energy=self.bound_energy,
            detector_times=self.detector_times.copy(),
            detector_left=self.detector_left.copy(),
            detector_right=self.detector_right.copy(),
        )


def energy_expectation(values: np.ndarray, potential: SoftCorePotential, grid: Grid1D) -> float:
    density = np.abs(values) ** 2
    norm = np.sum(density) * grid.dx
    kinetic = np.sum(np.abs(np.fft.fft(values)) ** 2 * 0.5 * grid.k ** 2) * grid.dx / grid.n_points
    return float((kinetic + np.sum(potential(grid.x) * density) * grid.dx) / norm)


def ground_state(potential: SoftCorePotential, grid: Grid1D,
                 imaginary_steps: Tuple[float, ...] = (0.1, 0.02, 0.005),
                 tolerance: float = 1e-12,
                 max_steps: int = 200000) -> Tuple[Wavefunction1D, float]:
    """Imaginary-time split-step relaxation with renormalisation every step"""
    x, k = grid.x, grid.k
    v = potential(x)
    psi = np.exp(-0.5 * x ** 2 / 4.0).astype(complex)
    psi /= math.sqrt(np.sum(np.abs(psi) ** 2) * grid.dx)
    energy = energy_expectation(psi, potential, grid)
    for stage, tau in enumerate(imaginary_steps):
        last_stage = stage == len(imaginary_steps) - 1
        threshold = tolerance if last_stage else max(tolerance, 1e-10)
        half_potential = np.exp(-0.5 * tau * v)
        kinetic = np.exp(-0.5 * tau * k ** 2)
        change = math.inf
        for step in range(max_steps):
            psi = half_potential * np.fft.ifft(kinetic * np.fft.fft(half_potential * psi))
            psi /= math.sqrt(np.sum(np.abs(psi) ** 2) * grid.dx)
            new_energy = energy_expectation(psi, potential, grid)
            change = abs(new_energy - energy)
            energy = new_energy
            if change < threshold:
                break
        else:
            logging.error(f"Ground state did not converge at imaginary step {tau}")
            raise GroundStateConvergenceError(
                "Imaginary-time relaxation did not converge",
                {'tau': tau, 'steps': max_steps, 'last_change': change, 'energy': energy},
            )
        logging.debug(f"Imaginary step {tau}: E0={energy:.12f} after {step + 1} steps")
    edge_density = max(abs(psi[0]) ** 2, abs(psi[-1]) ** 2)
    if edge_density > 1e-12:
        logging.warning(f"Bound-state density at the box edge is {edge_density:.2e}; widen the grid")
    logging.info(f"Soft-core ground state E0 = {energy:.10f} a.u.")
    return Wavefunction1D(values=psi, bound_energy=energy), energy


def match_softening_to_ip(z: float, ip: float, grid: Grid1D,
                          bracket: Tuple[float, float] = (0.05, 20.0)) -> float:
    """Softening a^2 whose ground-state energy equals -ip"""

    def mismatch(softening):
        _, energy = ground_state(SoftCorePotential(z=z, softening=softening), grid, tolerance=1e-11)
        return energy + ip

    try:
        softening = brentq(mismatch, *bracket, xtol=1e-8)
    except (ValueError, RuntimeError) as e:
        logging.error(f"No softening in {bracket} reproduces ip={ip}: {e}")
        raise RootFindingError("Soft-core softening could not be matched to the ionization potential",
                               {'z': z, 'ip': ip, 'bracket': bracket}) from e
    logging.info(f"Soft-core softening matched to ip={ip}: a^2 = {softening:.8f}")
    return softening


def absorbing_mask(grid: Grid1D, fraction: float) -> np.ndarray:
    """cos^(1/8) mask over the outer `fraction` of each half of the box"""
    if fraction <= 0:
        return np.ones(grid.n_points)
    center = 0.5 * (grid.x_min + grid.x_max)
    half_width = 0.5 * (grid.x_max - grid.x_min)
    inner = (1.0 - fraction) * half_width
    distance = np.abs(grid.x - center)
    ramp = np.clip((distance - inner) / (half_width - inner), 0.0, 1.0)
    mask = np.cos(0.5 * math.pi * ramp) ** 0.125
    mask[distance >= half_width] = 0.0
    return mask


def detector_indices(grid: Grid1D, fraction: float) -> Tuple[int, int]:
    """Grid indices of the inner absorber edges (left, right), mirror images of each other"""
    half_width = 0.5 * (grid.x_max - grid.x_min)
    x_det = (1.0 - max(fraction, 0.0)) * half_width * 0.999
    right = int(round((x_det - grid.x_min) / grid.dx))
    return int(grid.mirror_index()[right]), right


def propagate(psi: Wavefunction1D, pulse: Pulse, potential: SoftCorePotential, grid: Grid1D,
              drift_time: float = 0.0,
              gauge: str = TDSE_DEFAULTS['gauge'],
              absorber_fraction: float = TDSE_DEFAULTS['absorber_fraction'],
              virtual_detector: bool = TDSE_DEFAULTS['virtual_detector'],
              checkpoint: Optional[Callable[[float, np.ndarray], None]] = None,
              checkpoint_every: int = 0) -> Wavefunction1D:
    if grid.dt > pulse.optical_period / 2000.0 * (1 + 1e-12):
        raise ValueError(f"dt={grid.dt} does not resolve the carrier; need dt <= T/2000 = "
                         f"{pulse.optical_period / 2000.0:.6g}")
    if gauge not in ('length', 'velocity'):
        raise ValueError(f"Unknown gauge {gauge!r}")
    if drift_time < 0:
        raise ValueError("Drift time must be non-negative")

    state = psi.copy()
    x, k, dx = grid.x, grid.k, grid.dx
    v = potential(x)
    mask = absorbing_mask(grid, absorber_fraction)
    left_side, right_side = x < 0, x > 0
    det_left, det_right = detector_indices(grid, absorber_fraction)

    duration = pulse.total_duration + drift_time
    n_steps = max(1, int(math.ceil(duration / grid.dt)))
    dt = duration / n_steps
    free_kinetic = np.exp(-0.5j * dt * k ** 2)
    half_static = np.exp(-0.5j * dt * v)

    values = state.values
    times = np.empty(n_steps) if virtual_detector else None
    signal_left = np.empty(n_steps, dtype=complex) if virtual_detector else None
    signal_right = np.empty(n_steps, dtype=complex) if virtual_detector else None
    norm = np.sum(np.abs(values) ** 2) * dx

    logging.info(f"Propagating {n_steps} steps (dt={dt:.5g}, gauge={gauge}, cep={pulse.cep:.4f})")
    for step in range(n_steps):
        t_mid = state.time + (step + 0.5) * dt
        if gauge == 'length':
            half = half_static * np.exp(-0.5j * dt * x * electric_field(pulse, t_mid))
            values = half * np.fft.ifft(free_kinetic * np.fft.fft(half * values))
        else:
            kinetic = np.exp(-0.5j * dt * (k + vector_potential(pulse, t_mid)) ** 2)
            values = half_static * np.fft.ifft(kinetic * np.fft.fft(half_static * values))

        if virtual_detector:
            times[step] = state.time + (step + 1) * dt
            signal_left[step] = values[det_left]
            signal_right[step] = values[det_right]

        density = np.abs(values) ** 2
        stepped_norm = np.sum(density) * dx
        if stepped_norm > norm + 1e-6:
            logging.error(f"Norm grew from {norm:.10f} to {stepped_norm:.10f} at step {step}")
            raise PropagationInstabilityError(
                "Propagation unstable",
                {'step': step, 'time': t_mid, 'norm_before': norm, 'norm_after': stepped_norm},
            )
        if absorber_fraction > 0:
            values = values * mask
            kept = np.abs(values) ** 2
            state.absorbed_left += float(np.sum((density - kept)[left_side]) * dx)
            state.absorbed_right += float(np.sum((density - kept)[right_side]) * dx)
            norm = np.sum(kept) * dx
        else:
            norm = stepped_norm

        if checkpoint is not None and checkpoint_every and (step + 1) % checkpoint_every == 0:
            checkpoint(state.time + (step + 1) * dt, np.abs(values) ** 2)

    state.values = values
    state.time += duration
    if virtual_detector:
        state.detector_times = np.concatenate([state.detector_times, times])
        state.detector_left = np.concatenate([state.detector_left, signal_left])
        state.detector_right = np.concatenate([state.detector_right, signal_right])
    logging.info(f"Propagation done: norm={norm:.8f} absorbed L/R="
                 f"{state.absorbed_left:.3e}/{state.absorbed_right:.3e}")
    return state


def ionized_fraction(psi: Wavefunction1D, grid: Grid1D, x_split: float = TDSE_DEFAULTS['x_split']) -> float:
    outside = np.abs(grid.x) > x_split
    return float(psi.absorbed_left + psi.absorbed_right
                 + np.sum(np.abs(psi.values[outside]) ** 2) * grid.dx)


def _sigmoid(u: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * u))


def _momentum_density(part: np.ndarray, grid: Grid1D) -> Tuple[np.ndarray, np.ndarray]:
    k = grid.k
    transformed = grid.dx / math.sqrt(2.0 * math.pi) * np.exp(-1j * k * grid.x_min) * np.fft.fft(part)
    return k, np.abs(transformed) ** 2


def _detector_density(times: np.ndarray, signal: np.ndarray, energies: np.ndarray) -> np.ndarray:
    if times.size == 0:
        return np.zeros_like(energies)
    dt = np.diff(times, prepend=times[0] - (times[1] - times[0] if times.size > 1 else 0.0))
    result = np.empty_like(energies)
    for start in range(0, energies.size, 64):
        chunk = energies[start:start + 64]
        amplitude = np.exp(1j * np.outer(chunk, times)) @ (signal * dt)
        result[start:start + 64] = np.sqrt(2.0 * chunk) / (2.0 * math.pi) * np.abs(amplitude) ** 2
    return result


def directional_spectrum(psi_final: Wavefunction1D, grid: Grid1D, potential: SoftCorePotential,
                         drift: float, energy_grid,
                         x_split: float = TDSE_DEFAULTS['x_split'],
                         split_width: float = 5.0,
                         absorber_fraction: float = TDSE_DEFAULTS['absorber_fraction']) -> DirectionalSpectrum:
    """dP/dE left (k < 0) and right (k > 0) from the split wavefunction plus detector flux"""
    energies = validate_energy_grid(energy_grid)
    if psi_final.bound_energy is not None and psi_final.bound_energy < 0:
        tail = math.exp(-2.0 * math.sqrt(-2.0 * psi_final.bound_energy) * x_split)
        if tail > 1e-6:
            logging.warning(f"Bound density reaches the split point x={x_split} ({tail:.1e}); "
                            f"move x_split outwards")
    slowest = 0.5 * (x_split / drift) ** 2 if drift > 0 else math.inf
    if slowest > energies[0]:
        logging.warning(f"Electrons below {slowest:.4g} a.u. may not have passed x_split during the drift")

    x = grid.x
    use_detector = psi_final.detector_times.size > 0
    right_window = _sigmoid((x - x_split) / split_width)
    left_window = _sigmoid((-x - x_split) / split_width)
    if use_detector:
        det_left, det_right = detector_indices(grid, absorber_fraction)
        right_window = right_window * (1.0 - _sigmoid((x - x[det_right]) / split_width))
        left_window = left_window * (1.0 - _sigmoid((-x + x[det_left]) / split_width))

    k_values = np.sqrt(2.0 * energies)
    yields = {}
    for name, window, sign in (('left', left_window, -1.0), ('right', right_window, 1.0)):
        k, density = _momentum_density(psi_final.values * window, grid)
        branch = sign * k > 0
        order = np.argsort(np.abs(k[branch]))
        k_abs = np.abs(k[branch])[order]
        per_energy = density[branch][order] / k_abs
        yields[name] = np.interp(k_values, k_abs, per_energy, left=0.0, right=0.0)
    if use_detector:
        yields['left'] = yields['left'] + _detector_density(psi_final.detector_times, psi_final.detector_left, energies)
        yields['right'] = yields['right'] + _detector_density(psi_final.detector_times, psi_final.detector_right, energies)

    return DirectionalSpectrum(
        energies=energies,
        yield_left=yields['left'],
        yield_right=yields['right'],
        meta={'model': 'tdse', 'softening': potential.softening, 'z': potential.z,
              'drift': drift, 'reliable_min_energy': slowest},
    )


@dataclass(frozen=True)
class TdseSettings:
    x_min: float = TDSE_DEFAULTS['x_min']
    x_max: float = TDSE_DEFAULTS['x_max']
    n_points: int = TDSE_DEFAULTS['n_points']
    steps_per_cycle: int = TDSE_DEFAULTS['steps_per_cycle']
    gauge: str = TDSE_DEFAULTS['gauge']
    z: float = TDSE_DEFAULTS['z']
    softening: float = TDSE_DEFAULTS['softening']
    match_ip: bool = TDSE_DEFAULTS['match_ip']
    drift_cycles: float = TDSE_DEFAULTS['drift_cycles']
    absorber_fraction: float = TDSE_DEFAULTS['absorber_fraction']
    x_split: float = TDSE_DEFAULTS['x_split']
    virtual_detector: bool = TDSE_DEFAULTS['virtual_detector']
    checkpoint_every: int = TDSE_DEFAULTS['checkpoint_every']

    def grid_for(self, pulse: Pulse) -> Grid1D:
        return Grid1D(self.x_min, self.x_max, self.n_points, pulse.optical_period / self.steps_per_cycle)


def prepare_initial_state(settings: TdseSettings, pulse: Pulse, ip: float) -> Tuple[SoftCorePotential, Wavefunction1D]:
    grid = settings.grid_for(pulse)
    softening = match_softening_to_ip(settings.z, ip, grid) if settings.match_ip else settings.softening
    potential = SoftCorePotential(z=settings.z, softening=softening)
    psi0, _ = ground_state(potential, grid)
    return potential, psi0


def tdse_spectrum(pulse: Pulse, settings: TdseSettings, energy_grid, ip: float,
                  initial: Optional[Tuple[SoftCorePotential, Wavefunction1D]] = None,
                  checkpoint: Optional[Callable[[float, np.ndarray], None]] = None) -> DirectionalSpectrum:
    grid = settings.grid_for(pulse)
    potential, psi0 = initial or prepare_initial_state(settings, pulse, ip)
    drift = settings.drift_cycles * pulse.optical_period
    final = propagate(psi0, pulse, potential, grid, drift_time=drift, gauge=settings.gauge,
                      absorber_fraction=settings.absorber_fraction,
                      virtual_detector=settings.virtual_detector,
                      checkpoint=checkpoint, checkpoint_every=settings.checkpoint_every)
    result = directional_spectrum(final, grid, potential, drift, energy_grid,
                                  x_split=settings.x_split, absorber_fraction=settings.absorber_fraction)
    result.meta['pulse'] = pulse.describe()
    result.meta['ionized_fraction'] = ionized_fraction(final, grid, settings.x_split)
    return result
