"""
Few-cycle laser pulse in atomic units.

The pulse is defined through its vector potential

    A(t) = -a0 * sin^2(pi t / T) * sin(omega (t - T/2) + cep),   0 <= t <= T

and A = 0 outside [0, T]. The electric field E = -dA/dt is evaluated
analytically. With this sign choice cep = 0 gives a cosine-like field
(E extremum at the envelope peak t = T/2) and cep = -pi/2 a sine-like one,
E(t) ~ E0(t) cos(omega (t - T/2) + cep). A shift of cep by pi flips the sign
of both A and E at every instant.
"""
import enum
import math
from dataclasses import dataclass, replace
from typing import Tuple, Union

import numpy as np
from scipy.optimize import brentq

from configs.simulation_configs import (
    AU_INTENSITY_W_CM2,
    BOHR_NM,
    SPEED_OF_LIGHT_AU,
)

ArrayLike = Union[float, complex, np.ndarray]


class Envelope(enum.Enum):
    SIN2 = 'sin2'


@dataclass(frozen=True)
class Pulse:
    a0: float
    omega: float
    cep: float
    n_cycles: float
    envelope: Envelope = Envelope.SIN2

    def __post_init__(self):
        if self.a0 < 0:
            raise ValueError(f"a0 must be non-negative, got {self.a0}")
        if self.omega <= 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        if self.n_cycles <= 0:
            raise ValueError(f"n_cycles must be positive, got {self.n_cycles}")
        if not isinstance(self.envelope, Envelope):
            object.__setattr__(self, 'envelope', Envelope(self.envelope))

    @property
    def optical_period(self) -> float:
        return 2.0 * math.pi / self.omega

    @property
    def total_duration(self) -> float:
        return self.n_cycles * self.optical_period

    @property
    def center(self) -> float:
        """Envelope peak (the t = 0 of the usual few-cycle convention)"""
        return 0.5 * self.total_duration

    @property
    def peak_field(self) -> float:
        return self.a0 * self.omega

    def with_cep(self, cep: float) -> 'Pulse':
        return replace(self, cep=cep)

    def describe(self) -> str:
        return (f"a0={self.a0:.6g} omega={self.omega:.6g} cep={self.cep:.6g} "
                f"n_cycles={self.n_cycles:.6g} envelope={self.envelope.value}")


@dataclass(frozen=True)
class ExperimentalParams:
    wavelength_nm: float
    intensity_w_cm2: float
    n_cycles: float
    cep: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'cep', math.fmod(self.cep, 2.0 * math.pi) % (2.0 * math.pi))


def _scalar_or_array(value: np.ndarray, like) -> ArrayLike:
    if np.ndim(like) == 0:
        return value.item()
    return value


def _carrier_phase(pulse: Pulse, t):
    return pulse.omega * (t - pulse.center) + pulse.cep


def _inside(pulse: Pulse, t: np.ndarray) -> np.ndarray:
    return (t >= 0.0) & (t <= pulse.total_duration)


def vector_potential_analytic(pulse: Pulse, t: ArrayLike) -> ArrayLike:
    """Closed form of A(t) without the support cut; valid for complex t"""
    t = np.asarray(t)
    envelope = np.sin(math.pi * t / pulse.total_duration) ** 2
    return -pulse.a0 * envelope * np.sin(_carrier_phase(pulse, t))


def electric_field_analytic(pulse: Pulse, t: ArrayLike) -> ArrayLike:
    """Closed form of E(t) = -dA/dt without the support cut; valid for complex t"""
    t = np.asarray(t)
    T = pulse.total_duration
    theta = _carrier_phase(pulse, t)
    envelope = np.sin(math.pi * t / T) ** 2
    envelope_slope = (math.pi / T) * np.sin(2.0 * math.pi * t / T)
    return pulse.a0 * (envelope_slope * np.sin(theta) + pulse.omega * envelope * np.cos(theta))


def vector_potential(pulse: Pulse, t: ArrayLike) -> ArrayLike:
    t_arr = np.asarray(t, dtype=float)
    values = np.where(_inside(pulse, t_arr), vector_potential_analytic(pulse, t_arr), 0.0)
    return _scalar_or_array(values, t)


def electric_field(pulse: Pulse, t: ArrayLike) -> ArrayLike:
    t_arr = np.asarray(t, dtype=float)
    values = np.where(_inside(pulse, t_arr), electric_field_analytic(pulse, t_arr), 0.0)
    return _scalar_or_array(values, t)


def _sinusoid_components(pulse: Pulse) -> Tuple[np.ndarray, np.ndarray, float]:
    # A(t) = sum_k c_k sin(nu_k t + beta) on the support
    envelope_omega = 2.0 * math.pi / pulse.total_duration
    amplitudes = np.array([-0.5 * pulse.a0, 0.25 * pulse.a0, 0.25 * pulse.a0])
    frequencies = np.array([pulse.omega, pulse.omega + envelope_omega, pulse.omega - envelope_omega])
    beta = pulse.cep - pulse.omega * pulse.center
    return amplitudes, frequencies, beta


def _integral_sin(nu: float, phase: float, t):
    if abs(nu) < 1e-14:
        return t * math.sin(phase)
    return -np.cos(nu * t + phase) / nu


def _integral_cos(nu: float, phase: float, t):
    if abs(nu) < 1e-14:
        return t * math.cos(phase)
    return np.sin(nu * t + phase) / nu


def vector_potential_integral(pulse: Pulse, t: ArrayLike) -> ArrayLike:
    """Antiderivative of A(t) (analytic continuation, complex t allowed)"""
    t = np.asarray(t)
    amplitudes, frequencies, beta = _sinusoid_components(pulse)
    total = np.zeros_like(t, dtype=complex if np.iscomplexobj(t) else float)
    for c, nu in zip(amplitudes, frequencies):
        total = total + c * _integral_sin(nu, beta, t)
    return total


def vector_potential_square_integral(pulse: Pulse, t: ArrayLike) -> ArrayLike:
    """Antiderivative of A(t)^2 (analytic continuation, complex t allowed)"""
    t = np.asarray(t)
    amplitudes, frequencies, beta = _sinusoid_components(pulse)
    total = np.zeros_like(t, dtype=complex if np.iscomplexobj(t) else float)
    for cj, nuj in zip(amplitudes, frequencies):
        for ck, nuk in zip(amplitudes, frequencies):
            weight = 0.5 * cj * ck
            total = total + weight * (_integral_cos(nuj - nuk, 0.0, t)
                                      - _integral_cos(nuj + nuk, 2.0 * beta, t))
    return total


def _refined_roots(func, grid: np.ndarray) -> np.ndarray:
    values = func(grid)
    roots = []
    for i in np.nonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0)[0]:
        roots.append(brentq(func, grid[i], grid[i + 1], xtol=1e-14, rtol=4 * np.finfo(float).eps))
    return np.array(roots)


def sample_grid(pulse: Pulse, samples_per_cycle: int = 400) -> np.ndarray:
    n_samples = max(int(math.ceil(samples_per_cycle * pulse.n_cycles)) + 1, 2)
    return np.linspace(0.0, pulse.total_duration, n_samples)


def vector_potential_extrema(pulse: Pulse, samples_per_cycle: int = 400) -> Tuple[np.ndarray, np.ndarray]:
    """Times and values of the interior local extrema of A (zeros of E)"""
    grid = sample_grid(pulse, samples_per_cycle)[1:-1]
    times = _refined_roots(lambda t: electric_field_analytic(pulse, t), grid)
    return times, np.asarray(vector_potential_analytic(pulse, times), dtype=float)


def vector_potential_zeros(pulse: Pulse, samples_per_cycle: int = 400) -> np.ndarray:
    """Interior sign changes of A, i.e. the borders between half-cycle lobes"""
    grid = sample_grid(pulse, samples_per_cycle)[1:-1]
    return _refined_roots(lambda t: vector_potential_analytic(pulse, t), grid)


def max_abs_vector_potential(pulse: Pulse, sign: int = 0) -> float:
    """max|A|; with sign=+1 (-1) only the positive (negative) lobes count"""
    if pulse.a0 == 0:
        return 0.0
    _, values = vector_potential_extrema(pulse)
    if sign > 0:
        values = values[values > 0]
    elif sign < 0:
        values = values[values < 0]
    return float(np.max(np.abs(values))) if values.size else 0.0


def from_experiment(params: ExperimentalParams) -> Pulse:
    if params.wavelength_nm <= 0 or params.intensity_w_cm2 <= 0 or params.n_cycles <= 0:
        raise ValueError(
            f"Experimental parameters must be positive: wavelength={params.wavelength_nm} nm, "
            f"intensity={params.intensity_w_cm2} W/cm2, n_cycles={params.n_cycles}"
        )
    omega = 2.0 * math.pi * SPEED_OF_LIGHT_AU * BOHR_NM / params.wavelength_nm
    peak_field = math.sqrt(params.intensity_w_cm2 / AU_INTENSITY_W_CM2)
    return Pulse(a0=peak_field / omega, omega=omega, cep=params.cep, n_cycles=params.n_cycles)


def ponderomotive_energy(pulse: Pulse) -> float:
    return 0.25 * pulse.a0 ** 2
