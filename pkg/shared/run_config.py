"""
Run configuration: flat `section.key=value` files read with python-dotenv,
layered as defaults < run file < environment < command line.

Any table the tool wrote also serves as a run file: its `# config.` header
lines hold the resolved configuration that produced it.
"""
import logging
import math
import os
from dataclasses import dataclass, fields
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from dotenv import dotenv_values, load_dotenv

from configs.simulation_configs import (
    ANALYSIS_DEFAULTS,
    ATOM_DEFAULTS,
    ENERGY_GRID_DEFAULTS,
    HARTREE_EV,
    LOGGING_CONFIG,
    NOTIFY_CONFIG,
    OUTPUT_DEFAULTS,
    PULSE_DEFAULTS,
    SCAN_DEFAULTS,
    SEMICLASSICAL_DEFAULTS,
    TDSE_DEFAULTS,
)
from .errors import ConfigError, ConfigIssue
from .ionization import Atom
from .pulse import ExperimentalParams, Pulse, from_experiment
from .semiclassical import ACTION_METHODS
from .spectrum_io import is_tool_output, provenance_config, read_provenance
from .tdse1d import TdseSettings

MODELS = ('semiclassical', 'saddle', 'tdse')

ENV_OVERRIDES = {
    'ATTOSLIT_THREADS': 'output.threads',
    'ATTOSLIT_OUT_DIR': 'output.out_dir',
    'ATTOSLIT_LOG_LEVEL': 'logging.level',
}


@dataclass(frozen=True)
class PulseSettings:
    wavelength_nm: float
    intensity_w_cm2: float
    n_cycles: float
    cep: float


@dataclass(frozen=True)
class EnergyGridSettings:
    min_ev: float
    max_ev: float
    n_bins: int

    def grid_au(self) -> np.ndarray:
        return np.linspace(self.min_ev, self.max_ev, self.n_bins) / HARTREE_EV


@dataclass(frozen=True)
class ScanSettings:
    n_cep: int
    cep_values: Optional[Tuple[float, ...]] = None

    def cep_list(self) -> np.ndarray:
        if self.cep_values:
            return np.array(self.cep_values, dtype=float)
        return 2.0 * math.pi * np.arange(self.n_cep) / self.n_cep


@dataclass(frozen=True)
class AnalysisSettings:
    band_min_ev: Optional[float] = None
    band_max_ev: Optional[float] = None


@dataclass(frozen=True)
class OutputSettings:
    out_dir: str
    threads: int


@dataclass(frozen=True)
class RunConfig:
    pulse: PulseSettings
    atom: Atom
    model: str
    energy: EnergyGridSettings
    scan: ScanSettings
    tdse: TdseSettings
    analysis: AnalysisSettings
    output: OutputSettings
    recipients: Tuple[str, ...] = ()
    log_level: str = LOGGING_CONFIG['level']
    action_method: str = SEMICLASSICAL_DEFAULTS['action_method']

    def build_pulse(self, cep: Optional[float] = None) -> Pulse:
        pulse = from_experiment(ExperimentalParams(
            wavelength_nm=self.pulse.wavelength_nm,
            intensity_w_cm2=self.pulse.intensity_w_cm2,
            n_cycles=self.pulse.n_cycles,
        ))
        return pulse.with_cep(self.pulse.cep if cep is None else cep)

    def analysis_band(self) -> Tuple[float, float]:
        """Analysis band in eV; defaults to [0.2, 0.8] x 2Up"""
        cutoff_ev = 2.0 * 0.25 * self.build_pulse().a0 ** 2 * HARTREE_EV
        lo = self.analysis.band_min_ev if self.analysis.band_min_ev is not None else 0.2 * cutoff_ev
        hi = self.analysis.band_max_ev if self.analysis.band_max_ev is not None else 0.8 * cutoff_ev
        return lo, hi

    def to_flat(self) -> str:
        return '\n'.join(f"{key}={value}" for key, value in sorted(flatten(self).items())) + '\n'


def _optional_float(text: str) -> Optional[float]:
    return None if text in ('', 'None', 'none') else float(text)


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ('1', 'true', 'yes', 'on'):
        return True
    if lowered in ('0', 'false', 'no', 'off'):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _float_tuple(text: str) -> Optional[Tuple[float, ...]]:
    if text in ('', 'None', 'none'):
        return None
    return tuple(float(part) for part in text.split(',') if part.strip())


def _str_tuple(text: str) -> Tuple[str, ...]:
    return tuple(part.strip() for part in text.split(',') if part.strip())


# flat key -> (default, parser)
SCHEMA: Dict[str, Tuple[object, Callable[[str], object]]] = {
    'pulse.wavelength_nm': (PULSE_DEFAULTS['wavelength_nm'], float),
    'pulse.intensity_w_cm2': (PULSE_DEFAULTS['intensity_w_cm2'], float),
    'pulse.n_cycles': (PULSE_DEFAULTS['n_cycles'], float),
    'pulse.cep': (PULSE_DEFAULTS['cep'], float),
    'atom.ip': (ATOM_DEFAULTS['ip'], float),
    'atom.rate_prefactor': (ATOM_DEFAULTS['rate_prefactor'], float),
    'model.name': (OUTPUT_DEFAULTS['model'], str),
    'model.action_method': (SEMICLASSICAL_DEFAULTS['action_method'], str),
    'energy.min_ev': (ENERGY_GRID_DEFAULTS['min_ev'], float),
    'energy.max_ev': (ENERGY_GRID_DEFAULTS['max_ev'], float),
    'energy.n_bins': (ENERGY_GRID_DEFAULTS['n_bins'], int),
    'scan.n_cep': (SCAN_DEFAULTS['n_cep'], int),
    'scan.cep_values': (SCAN_DEFAULTS['cep_values'], _float_tuple),
    'analysis.band_min_ev': (ANALYSIS_DEFAULTS['band_min_ev'], _optional_float),
    'analysis.band_max_ev': (ANALYSIS_DEFAULTS['band_max_ev'], _optional_float),
    'output.out_dir': (OUTPUT_DEFAULTS['out_dir'], str),
    'output.threads': (OUTPUT_DEFAULTS['threads'], int),
    'notify.recipients': (tuple(NOTIFY_CONFIG['recipients']), _str_tuple),
    'logging.level': (LOGGING_CONFIG['level'], str),
}
for _key, _default in TDSE_DEFAULTS.items():
    SCHEMA[f"tdse.{_key}"] = (_default, _bool if isinstance(_default, bool) else type(_default))


def flatten(config: RunConfig) -> Dict[str, str]:
    def text(value) -> str:
        if value is None:
            return 'None'
        if isinstance(value, tuple):
            return ','.join(text(v) for v in value)
        if isinstance(value, float):
            return repr(value)
        return str(value)

    flat = {f"pulse.{f.name}": text(getattr(config.pulse, f.name)) for f in fields(PulseSettings)}
    flat.update({f"atom.{f.name}": text(getattr(config.atom, f.name)) for f in fields(Atom)})
    flat.update({f"energy.{f.name}": text(getattr(config.energy, f.name)) for f in fields(EnergyGridSettings)})
    flat.update({f"scan.{f.name}": text(getattr(config.scan, f.name)) for f in fields(ScanSettings)})
    flat.update({f"tdse.{f.name}": text(getattr(config.tdse, f.name)) for f in fields(TdseSettings)})
    flat.update({f"analysis.{f.name}": text(getattr(config.analysis, f.name)) for f in fields(AnalysisSettings)})
    flat.update({f"output.{f.name}": text(getattr(config.output, f.name)) for f in fields(OutputSettings)})
    flat['model.name'] = config.model
    flat['model.action_method'] = config.action_method
    flat['notify.recipients'] = text(config.recipients)
    flat['logging.level'] = config.log_level
    return flat


def _parse(raw: Dict[str, str], issues: List[ConfigIssue]) -> Dict[str, object]:
    parsed = {key: default for key, (default, _) in SCHEMA.items()}
    for key, value in raw.items():
        if key not in SCHEMA:
            issues.append(ConfigIssue('error', f"Unknown configuration key {key}", {'key': key}))
            continue
        if value is None:
            issues.append(ConfigIssue('error', f"Missing value for {key}", {'key': key}))
            continue
        try:
            parsed[key] = SCHEMA[key][1](value.strip())
        except ValueError as e:
            issues.append(ConfigIssue('error', f"Cannot parse {key}={value!r}: {e}", {'key': key}))
    return parsed


def validate_run_config(values: Dict[str, object]) -> List[ConfigIssue]:
    """Every problem with the parsed values, not only the first"""
    issues = []

    def require(condition: bool, key: str, message: str):
        if not condition:
            issues.append(ConfigIssue('error', f"{key}: {message}", {'key': key, 'value': values.get(key)}))

    for key in ('pulse.wavelength_nm', 'pulse.intensity_w_cm2', 'pulse.n_cycles', 'atom.ip',
                'atom.rate_prefactor', 'energy.min_ev', 'tdse.steps_per_cycle', 'tdse.softening'):
        require(values[key] > 0, key, "must be positive")
    require(math.isfinite(values['pulse.cep']), 'pulse.cep', "must be finite")
    require(values['model.name'] in MODELS, 'model.name', f"must be one of {', '.join(MODELS)}")
    require(values['model.action_method'] in ACTION_METHODS, 'model.action_method',
            f"must be one of {', '.join(ACTION_METHODS)}")
    require(values['energy.max_ev'] > values['energy.min_ev'], 'energy.max_ev', "must exceed energy.min_ev")
    require(values['energy.n_bins'] >= 2, 'energy.n_bins', "needs at least 2 bins")
    require(values['scan.n_cep'] >= 1, 'scan.n_cep', "needs at least one CEP value")
    if values['scan.cep_values'] is not None:
        require(len(values['scan.cep_values']) >= 1, 'scan.cep_values', "must not be empty")
    require(values['output.threads'] >= 1, 'output.threads', "must be at least 1")
    n_points = values['tdse.n_points']
    require(n_points >= 1024 and not n_points & (n_points - 1), 'tdse.n_points', "must be a power of two >= 1024")
    require(values['tdse.x_max'] > values['tdse.x_min'], 'tdse.x_max', "must exceed tdse.x_min")
    require(values['tdse.gauge'] in ('length', 'velocity'), 'tdse.gauge', "must be 'length' or 'velocity'")
    require(values['tdse.steps_per_cycle'] >= 2000, 'tdse.steps_per_cycle', "must be >= 2000 to resolve the carrier")
    require(0.0 <= values['tdse.absorber_fraction'] < 1.0, 'tdse.absorber_fraction', "must lie in [0, 1)")
    require(values['tdse.drift_cycles'] >= 0, 'tdse.drift_cycles', "must be non-negative")
    lo, hi = values['analysis.band_min_ev'], values['analysis.band_max_ev']
    if lo is not None and hi is not None:
        require(hi > lo, 'analysis.band_max_ev', "must exceed analysis.band_min_ev")
    if values['energy.n_bins'] < 100:
        issues.append(ConfigIssue('warning', "energy.n_bins below 100 resolves fringes poorly",
                                  {'key': 'energy.n_bins'}))
    return issues


def _build(values: Dict[str, object]) -> RunConfig:
    tdse = TdseSettings(**{f.name: values[f"tdse.{f.name}"] for f in fields(TdseSettings)})
    return RunConfig(
        pulse=PulseSettings(
            wavelength_nm=values['pulse.wavelength_nm'],
            intensity_w_cm2=values['pulse.intensity_w_cm2'],
            n_cycles=values['pulse.n_cycles'],
            cep=values['pulse.cep'],
        ),
        atom=Atom(ip=values['atom.ip'], rate_prefactor=values['atom.rate_prefactor']),
        model=values['model.name'],
        energy=EnergyGridSettings(values['energy.min_ev'], values['energy.max_ev'], values['energy.n_bins']),
        scan=ScanSettings(values['scan.n_cep'], values['scan.cep_values']),
        tdse=tdse,
        analysis=AnalysisSettings(values['analysis.band_min_ev'], values['analysis.band_max_ev']),
        output=OutputSettings(values['output.out_dir'], values['output.threads']),
        recipients=values['notify.recipients'],
        log_level=values['logging.level'],
        action_method=values['model.action_method'],
    )


def read_run_file(path: str) -> Dict[str, Optional[str]]:
    """A flat run file, or the configuration recorded in the header of an output file"""
    if is_tool_output(path):
        recorded = provenance_config(read_provenance(path))
        logging.info(f"Configuration taken from the provenance header of {path} ({len(recorded)} keys)")
        return recorded
    return dotenv_values(path)


def load_run_config(path: Optional[str] = None, overrides: Optional[Dict[str, str]] = None) -> RunConfig:
    load_dotenv()
    raw: Dict[str, str] = {}
    if path:
        if not os.path.exists(path):
            raise ConfigError([ConfigIssue('error', f"Config file not found: {path}", {'path': path})])
        raw.update(read_run_file(path))
    for env_key, key in ENV_OVERRIDES.items():
        if os.getenv(env_key):
            raw[key] = os.getenv(env_key)
    raw.update(overrides or {})

    issues: List[ConfigIssue] = []
    values = _parse(raw, issues)
    if not any(issue.severity == 'error' for issue in issues):
        issues.extend(validate_run_config(values))
    errors = [issue for issue in issues if issue.severity == 'error']
    if errors:
        raise ConfigError(issues)
    for issue in issues:
        logging.warning(issue.message)
    return _build(values)
