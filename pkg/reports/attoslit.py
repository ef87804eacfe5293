import sys
import os
import argparse
import logging
import math
from dataclasses import replace
from typing import Dict, List, Optional

import numpy as np

# Allow running as `python reports/attoslit.py` from the repository root
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from configs.simulation_configs import AU_TIME_AS, HARTREE_EV, LOGGING_CONFIG
from shared.analysis import (fringe_report, normalize_by_phase_average,
                             phase_scan_visibility, stripe_excursion, track_fringes)
from shared.email_utils import notify_run
from shared.errors import (ConfigError, InsufficientFringesError, NumericalError,
                           SpectrumFormatError)
from shared.run_config import RunConfig, load_run_config
from shared.scan_runner import InitialState, compute_spectrum, prepare, run_phase_scan
from shared.semiclassical import DIRECTIONS, DirectionalSpectrum, group_slits, solve_slits
from shared.spectrum_io import (provenance_config, read_table, scan_ceps,
                                write_key_value_report, write_pgm, write_scan_matrix,
                                write_spectrum_csv, write_table)
from shared.tdse1d import SoftCorePotential, ground_state, match_softening_to_ip, tdse_spectrum

DOMINANT_FRACTION = 0.5


def setup_logging(level: str):
    logging.basicConfig(
        level=logging.INFO,
        format=LOGGING_CONFIG['format'],
        handlers=[logging.StreamHandler(sys.stdout)]
    )
    logging.getLogger().setLevel(getattr(logging, level.upper(), logging.INFO))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='flat section.key=value run file')
    common.add_argument('--model', choices=['semiclassical', 'saddle', 'tdse'])
    common.add_argument('--cep', type=float, help='carrier-envelope phase in rad')
    common.add_argument('--out', help='output directory')
    common.add_argument('--threads', type=int)

    parser = argparse.ArgumentParser(prog='attoslit', description='Attosecond double-slit photoelectron simulator')
    sub = parser.add_subparsers(dest='command', required=True)
    sub.add_parser('spectrum', parents=[common], help='directional spectra at one CEP')
    sub.add_parser('scan', parents=[common], help='CEP scan with normalized maps')

    slits = sub.add_parser('slits', parents=[common], help='release times and weights for one momentum')
    target = slits.add_mutually_exclusive_group(required=True)
    target.add_argument('--momentum', type=float, help='|p| in atomic units')
    target.add_argument('--energy-ev', type=float, help='final kinetic energy in eV')

    analyze = sub.add_parser('analyze', parents=[common], help='fringe report for spectrum or scan files')
    analyze.add_argument('inputs', nargs='+')
    analyze.add_argument('--band', type=float, nargs=2, metavar=('LO_EV', 'HI_EV'))

    sub.add_parser('tdse-groundstate', parents=[common], help='soft-core ground state of the TDSE model')
    return parser


def config_overrides(args: argparse.Namespace) -> Dict[str, str]:
    overrides = {}
    if args.model:
        overrides['model.name'] = args.model
    if args.cep is not None:
        overrides['pulse.cep'] = repr(args.cep)
    if args.out:
        overrides['output.out_dir'] = args.out
    if args.threads is not None:
        overrides['output.threads'] = str(args.threads)
    if getattr(args, 'band', None):
        overrides['analysis.band_min_ev'] = repr(args.band[0])
        overrides['analysis.band_max_ev'] = repr(args.band[1])
    return overrides


def spectrum_ceps(config: RunConfig, cep_given: bool) -> List[float]:
    """The CEP values of a spectrum run: an explicit --cep, else scan.cep_values, else pulse.cep"""
    if config.scan.cep_values and not cep_given:
        return [float(c) for c in config.scan.cep_values]
    return [config.pulse.cep]


def at_cep(config: RunConfig, cep: float) -> RunConfig:
    """The configuration that reproduces the spectrum at one CEP value"""
    return replace(config, pulse=replace(config.pulse, cep=cep), scan=replace(config.scan, cep_values=None))


def _spectrum_at(config: RunConfig, cep: float, initial: InitialState) -> DirectionalSpectrum:
    if not (config.model == 'tdse' and config.tdse.checkpoint_every):
        return compute_spectrum(config, cep, initial)
    pulse = config.build_pulse(cep)
    x = config.tdse.grid_for(pulse).x
    provenance = at_cep(config, cep).to_flat()

    def checkpoint(time: float, density: np.ndarray):
        path = os.path.join(config.output.out_dir, f"checkpoint_cep{cep:+.4f}_t{time:.2f}au.csv")
        write_table(path, ['x_au', 'density_per_au'], zip(x.tolist(), density.tolist()), provenance)
        logging.info(f"Checkpoint written: {path}")

    return tdse_spectrum(pulse, config.tdse, config.energy.grid_au(), config.atom.ip,
                         initial=initial, checkpoint=checkpoint)


def cmd_spectrum(config: RunConfig, cep_given: bool = False) -> List[str]:
    out_dir = config.output.out_dir
    initial = prepare(config)
    written = []
    for cep in spectrum_ceps(config, cep_given):
        result = _spectrum_at(config, cep, initial)
        provenance = at_cep(config, cep).to_flat()
        energies = result.energies * HARTREE_EV
        meta = {key: str(value) for key, value in result.meta.items()}
        for direction in DIRECTIONS:
            path = os.path.join(out_dir, f"spectrum_{config.model}_cep{cep:+.4f}_{direction}.csv")
            written.append(write_spectrum_csv(path, energies, result.direction(direction), provenance, meta))
            logging.info(f"Spectrum written: {path}")
    return written


def photon_energy_ev(config: RunConfig) -> float:
    return config.build_pulse().omega * HARTREE_EV


def cmd_scan(config: RunConfig) -> List[str]:
    out_dir = config.output.out_dir
    provenance = config.to_flat()
    scan = run_phase_scan(config)
    normalized = normalize_by_phase_average(scan)
    energies = scan.spectra[0].energies * HARTREE_EV
    band = config.analysis_band()
    photon_ev = photon_energy_ev(config)
    written = []

    for direction in DIRECTIONS:
        stem = os.path.join(out_dir, f"scan_{config.model}_{direction}")
        written.append(write_scan_matrix(f"{stem}_raw.csv", energies, scan.cep_values,
                                         scan.matrix(direction), provenance))
        written.append(write_scan_matrix(f"{stem}_normalized.csv", energies, scan.cep_values,
                                         normalized.matrix(direction), provenance,
                                         {'neutral_bins': str(int(normalized.neutral_bins[direction].sum()))}))
        written.append(write_pgm(f"{stem}_normalized.pgm", normalized.matrix(direction)))
        try:
            tracks = track_fringes(normalized, direction, band, fringe_spacing=photon_ev)
        except InsufficientFringesError as e:
            logging.warning(f"No stripes to track to the {direction}: {e}")
            continue
        header = ['cep_rad'] + [f"stripe_{i}_eV" for i in range(tracks.shape[1])]
        rows = [[float(c)] + [float(v) for v in row] for c, row in zip(scan.cep_values, tracks)]
        meta = {'stripe_drift_eV': f"{tracks[-1, 0] - tracks[0, 0]:.6f}",
                'stripe_excursion_eV': f"{stripe_excursion(tracks):.6f}",
                'stripe_spacing_eV': f"{photon_ev:.6f}"}
        written.append(write_table(f"{stem}_stripes.csv", header, rows, provenance, meta))

    maps = phase_scan_visibility(scan, band, expected_spacing=photon_ev)
    rows = [(float(c), float(l), float(r)) for c, l, r in zip(scan.cep_values, maps['left'], maps['right'])]
    written.append(write_table(os.path.join(out_dir, f"scan_{config.model}_visibility.csv"),
                               ['cep_rad', 'visibility_left', 'visibility_right'], rows, provenance,
                               {'band_eV': f"{band[0]:.6f}:{band[1]:.6f}"}))
    for path in written:
        logging.info(f"Scan output written: {path}")
    return written


def cmd_slits(config: RunConfig, p: Optional[float], energy_ev: Optional[float]) -> List[str]:
    pulse = config.build_pulse()
    if p is None:
        p = math.sqrt(2.0 * energy_ev / HARTREE_EV)
    if p <= 0:
        raise ValueError(f"Momentum must be positive, got {p}")
    rows = []
    dominant = {}
    for direction in DIRECTIONS:
        signed = p if direction == 'right' else -p
        groups = group_slits(pulse, solve_slits(pulse, config.atom, signed))
        strongest = max((g.strength for g in groups), default=0.0)
        dominant[direction] = sum(1 for g in groups if strongest > 0 and g.strength >= DOMINANT_FRACTION * strongest)
        for group in groups:
            for index, slit in enumerate(group.slits):
                rows.append((direction, group.lobe, index, float(slit.t0),
                             float((slit.t0 - pulse.center) * AU_TIME_AS),
                             float(slit.weight), float(slit.action)))
        logging.info(f"{direction}: {len(groups)} slits, {dominant[direction]} dominant")
    path = os.path.join(config.output.out_dir, f"slits_p{p:.4f}.csv")
    meta = {'momentum_au': f"{p:.8e}", 'dominant_left': str(dominant['left']),
            'dominant_right': str(dominant['right'])}
    write_table(path, ['direction', 'lobe', 'subslit', 't0_au', 't_rel_as', 'weight_au', 'action_rad'],
                rows, config.to_flat(), meta)
    return [path]


def _report_record(energies: np.ndarray, yields: np.ndarray, band, photon_ev: float) -> Dict[str, object]:
    try:
        report = fringe_report(energies, yields, band, expected_spacing=photon_ev)
    except InsufficientFringesError as e:
        logging.warning(f"Fringe analysis skipped: {e}")
        return {'status': 'insufficient_fringes'}
    return {
        'status': 'ok',
        'n_peaks': int(report.peak_energies.size),
        'visibility': report.visibility,
        'spacing_mean_eV': report.spacing_mean,
        'envelope_fringe_count': report.envelope_fringe_count,
        'subslit_separation_as': report.subslit_separation,
        'envelope_resolved': report.envelope_resolved,
    }


def cmd_analyze(config: RunConfig, inputs: List[str], band_given: bool) -> List[str]:
    records: Dict[str, Dict[str, object]] = {}
    for filepath in inputs:
        table = read_table(filepath)
        source = config
        recorded = provenance_config(table.provenance)
        if recorded:
            # band defaults and the photon energy follow the pulse that produced the file
            source = load_run_config(overrides=recorded)
        band = config.analysis_band() if band_given else source.analysis_band()
        photon_ev = photon_energy_ev(source)
        name = os.path.splitext(os.path.basename(filepath))[0]
        energies = table.data[:, 0]
        ceps = scan_ceps(table)
        if ceps is None:
            records[name] = _report_record(energies, table.data[:, 1], band, photon_ev)
        else:
            for column, cep in enumerate(ceps, 1):
                records[f"{name}.cep{cep:+.4f}"] = _report_record(energies, table.data[:, column], band, photon_ev)
        logging.info(f"Analyzed {filepath} in band {band[0]:.3f}-{band[1]:.3f} eV")

    stem = os.path.join(config.output.out_dir, 'analysis_report')
    columns = ['status', 'n_peaks', 'visibility', 'spacing_mean_eV', 'envelope_fringe_count',
               'subslit_separation_as', 'envelope_resolved']
    rows = [[name] + [records[name].get(c, '') for c in columns] for name in sorted(records)]
    return [write_key_value_report(f"{stem}.txt", records, config.to_flat()),
            write_table(f"{stem}.csv", ['source'] + columns, rows, config.to_flat())]


def cmd_tdse_groundstate(config: RunConfig) -> List[str]:
    settings = config.tdse
    grid = settings.grid_for(config.build_pulse())
    softening = match_softening_to_ip(settings.z, config.atom.ip, grid) if settings.match_ip else settings.softening
    psi, energy = ground_state(SoftCorePotential(z=settings.z, softening=softening), grid)
    out_dir = config.output.out_dir
    density = np.abs(psi.values) ** 2
    meta = {'energy_au': f"{energy:.10e}", 'energy_eV': f"{energy * HARTREE_EV:.10e}",
            'softening': f"{softening:.10e}"}
    return [
        write_table(os.path.join(out_dir, 'groundstate.csv'), ['x_au', 'density_per_au'],
                    zip(grid.x.tolist(), density.tolist()), config.to_flat(), meta),
        write_key_value_report(os.path.join(out_dir, 'groundstate_report.txt'),
                               {'groundstate': {'energy_au': energy, 'energy_eV': energy * HARTREE_EV,
                                                'softening': softening, 'norm': psi.norm(grid)}},
                               config.to_flat()),
    ]


def run_command(args: argparse.Namespace, config: RunConfig) -> List[str]:
    if args.command == 'spectrum':
        return cmd_spectrum(config, args.cep is not None)
    if args.command == 'scan':
        return cmd_scan(config)
    if args.command == 'slits':
        return cmd_slits(config, args.momentum, args.energy_ev)
    if args.command == 'analyze':
        return cmd_analyze(config, args.inputs, bool(args.band))
    return cmd_tdse_groundstate(config)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(os.getenv('ATTOSLIT_LOG_LEVEL', LOGGING_CONFIG['level']))
    try:
        config = load_run_config(args.config, config_overrides(args))
        setup_logging(config.log_level)
        logging.info(f"Running {args.command} with model={config.model}")
        written = run_command(args, config)
    except ConfigError as e:
        for issue in e.issues:
            logging.error(f"{issue.severity}: {issue.message}")
        return 1
    except (SpectrumFormatError, ValueError) as e:
        logging.error(str(e))
        return 1
    except NumericalError as e:
        logging.error(str(e))
        return 2

    logging.info(f"{args.command} finished: {len(written)} files written")
    attachments = {os.path.basename(p): p for p in written if p.endswith(('.txt', '.csv'))}
    if args.command not in ('analyze', 'scan'):
        attachments = {}
    notify_run(args.command, '\n'.join(written), config.recipients, attachments)
    return 0


if __name__ == '__main__':
    sys.exit(main())
