"""
Quasi-static tunneling rate used as the strength of each temporal slit:

    R(F) = C^2 * (2 kappa^3 / |F|)^(2/kappa - 1) * exp(-2 kappa^3 / (3 |F|)),  kappa = sqrt(2 ip)

Only relative slit weights enter the fringe observables, so C^2 defaults to 1.
"""
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.signal import find_peaks

from configs.simulation_configs import ATOM_DEFAULTS
from .pulse import Pulse, electric_field


@dataclass(frozen=True)
class Atom:
    ip: float = ATOM_DEFAULTS['ip']
    rate_prefactor: float = ATOM_DEFAULTS['rate_prefactor']

    def __post_init__(self):
        if self.ip <= 0:
            raise ValueError(f"Ionization potential must be positive, got {self.ip}")

    @property
    def kappa(self) -> float:
        return math.sqrt(2.0 * self.ip)


def rate(field, atom: Atom):
    """Tunneling rate for field strength(s) in a.u.; R(0) = 0 by continuity"""
    strength = np.abs(np.asarray(field, dtype=float))
    kappa3 = atom.kappa ** 3
    result = np.zeros_like(strength)
    nonzero = strength > 0
    f = strength[nonzero]
    result[nonzero] = (atom.rate_prefactor
                       * (2.0 * kappa3 / f) ** (2.0 / atom.kappa - 1.0)
                       * np.exp(-2.0 * kappa3 / (3.0 * f)))
    if np.ndim(field) == 0:
        return float(result)
    return result


def rate_profile(pulse: Pulse, atom: Atom, n_samples: int) -> Tuple[np.ndarray, np.ndarray]:
    """Uniform samples (t, R(E(t))) over the pulse support"""
    if n_samples < 2:
        raise ValueError(f"rate_profile needs at least 2 samples, got {n_samples}")
    times = np.linspace(0.0, pulse.total_duration, n_samples)
    return times, rate(electric_field(pulse, times), atom)


def slit_windows(times: np.ndarray, profile: np.ndarray, fraction: float = 0.1):
    """Connected time windows where R exceeds `fraction` of its local half-cycle maximum"""
    windows = []
    if profile.max() <= 0:
        return windows
    peaks, _ = find_peaks(profile)
    for peak in peaks:
        threshold = fraction * profile[peak]
        lo = peak
        while lo > 0 and profile[lo - 1] > threshold:
            lo -= 1
        hi = peak
        while hi < len(profile) - 1 and profile[hi + 1] > threshold:
            hi += 1
        windows.append((times[lo], times[hi], profile[peak]))
    return windows
