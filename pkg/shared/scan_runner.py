"""
Model dispatch and the CEP worker pool.

Workers share nothing; results are collected in CEP order, so a scan is
identical whatever the number of processes.
"""
import logging
from multiprocessing import Pool
from typing import Dict, Optional, Tuple

import numpy as np

from .analysis import PhaseScan
from .run_config import RunConfig
from .saddle import sfa_spectrum
from .semiclassical import DirectionalSpectrum, spectrum
from .tdse1d import SoftCorePotential, Wavefunction1D, prepare_initial_state, tdse_spectrum

InitialState = Optional[Tuple[SoftCorePotential, Wavefunction1D]]


def prepare(config: RunConfig) -> InitialState:
    """Model set-up shared by all CEP values (the TDSE ground state)"""
    if config.model != 'tdse':
        return None
    return prepare_initial_state(config.tdse, config.build_pulse(), config.atom.ip)


def compute_spectrum(config: RunConfig, cep: float, initial: InitialState = None) -> DirectionalSpectrum:
    pulse = config.build_pulse(cep)
    energies = config.energy.grid_au()
    logging.info(f"Computing {config.model} spectrum at cep={cep:.6f} rad")
    if config.model == 'semiclassical':
        return spectrum(pulse, config.atom, energies, action_method=config.action_method)
    if config.model == 'saddle':
        result, unreliable = sfa_spectrum(pulse, config.atom, energies)
        result.meta['unreliable_left'] = int(unreliable['left'].sum())
        result.meta['unreliable_right'] = int(unreliable['right'].sum())
        return result
    if config.model == 'tdse':
        return tdse_spectrum(pulse, config.tdse, energies, config.atom.ip, initial=initial)
    raise ValueError(f"Unknown model {config.model!r}")


def _worker(config: RunConfig, cep: float, initial: InitialState) -> DirectionalSpectrum:
    return compute_spectrum(config, cep, initial)


def run_spectra(config: RunConfig, ceps: np.ndarray, threads: Optional[int] = None) -> Dict[float, DirectionalSpectrum]:
    threads = threads or config.output.threads
    initial = prepare(config)
    jobs = [(config, float(cep), initial) for cep in ceps]
    if threads > 1 and len(jobs) > 1:
        with Pool(min(threads, len(jobs))) as pool:
            results = pool.starmap(_worker, jobs)
    else:
        results = [_worker(*job) for job in jobs]
    return {float(cep): result for cep, result in zip(ceps, results)}


def run_phase_scan(config: RunConfig, threads: Optional[int] = None) -> PhaseScan:
    ceps = config.scan.cep_list()
    spectra = run_spectra(config, ceps, threads)
    logging.info(f"Phase scan finished: {len(ceps)} CEP values, model={config.model}")
    return PhaseScan(cep_values=ceps, spectra=[spectra[float(c)] for c in ceps])
