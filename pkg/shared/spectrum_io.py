"""
Flat-file formats.

Every table is comma separated with LF endings, preceded by a provenance
header of '#' lines (tool version, a git-style hash of the table body and the
fully resolved run configuration). Numbers use 9 significant digits.
"""
import csv
import hashlib
import io
import os
import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .errors import SpectrumFormatError

TOOL_NAME = 'attoslit'
CEP_COLUMN = re.compile(r'^cep_(?P<value>[-+0-9.eE]+)_rad$')


@dataclass
class Table:
    header: List[str]
    data: np.ndarray  # rows x columns, float
    provenance: Dict[str, str]


def format_number(value: float) -> str:
    return f"{value:.8e}"


def content_hash(body: str) -> str:
    encoded = body.encode('utf-8')
    return hashlib.sha1(b'blob %d\0' % len(encoded) + encoded).hexdigest()


def _render_body(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_number(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buffer.getvalue()


def write_table(filepath: str, header: Sequence[str], rows: Sequence[Sequence],
                config_text: str = '', extra: Optional[Dict[str, str]] = None) -> str:
    """Writes header + rows with a provenance block; returns the path"""
    body = _render_body(header, rows)
    lines = [f"# tool={TOOL_NAME}", f"# version={__version__}", f"# content_hash={content_hash(body)}"]
    for key, value in sorted((extra or {}).items()):
        lines.append(f"# meta.{key}={value}")
    for line in config_text.splitlines():
        if line.strip():
            lines.append(f"# config.{line}")
    os.makedirs(os.path.dirname(filepath) or '.', exist_ok=True)
    with open(filepath, 'w', newline='', encoding='utf-8') as f:
        f.write('\n'.join(lines) + '\n' + body)
    return filepath


def write_spectrum_csv(filepath: str, energies_ev: np.ndarray, yields: np.ndarray,
                       config_text: str = '', extra: Optional[Dict[str, str]] = None) -> str:
    rows = [(float(e), float(y)) for e, y in zip(energies_ev, yields)]
    return write_table(filepath, ['energy_eV', 'yield_arb'], rows, config_text, extra)


def cep_column(cep: float) -> str:
    return f"cep_{format_number(cep)}_rad"


def write_scan_matrix(filepath: str, energies_ev: np.ndarray, cep_values: np.ndarray,
                      matrix: np.ndarray, config_text: str = '',
                      extra: Optional[Dict[str, str]] = None) -> str:
    """Rows are energy bins, columns CEP values"""
    header = ['energy_eV'] + [cep_column(c) for c in cep_values]
    rows = [[float(e)] + [float(v) for v in row] for e, row in zip(energies_ev, matrix)]
    return write_table(filepath, header, rows, config_text, extra)


def write_pgm(filepath: str, matrix: np.ndarray) -> str:
    """8-bit binary graymap, row 0 = highest energy"""
    image = np.asarray(matrix, dtype=float)[::-1, :]
    lo, hi = float(np.min(image)), float(np.max(image))
    scale = (image - lo) / (hi - lo) if hi > lo else np.zeros_like(image)
    pixels = np.round(255.0 * scale).astype(np.uint8)
    height, width = pixels.shape
    os.makedirs(os.path.dirname(filepath) or '.', exist_ok=True)
    with open(filepath, 'wb') as f:
        f.write(f"P5\n{width} {height}\n255\n".encode('ascii'))
        f.write(pixels.tobytes())
    return filepath


def read_pgm(filepath: str) -> np.ndarray:
    with open(filepath, 'rb') as f:
        raw = f.read()
    parts = raw.split(b'\n', 3)
    if parts[0] != b'P5':
        raise SpectrumFormatError(filepath, 1, "not a binary PGM (P5) file")
    width, height = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(height, width)


def read_table(filepath: str) -> Table:
    provenance: Dict[str, str] = {}
    header: Optional[List[str]] = None
    rows: List[List[float]] = []
    with open(filepath, 'r', newline='', encoding='utf-8') as f:
        for number, line in enumerate(f, 1):
            line = line.rstrip('\n').rstrip('\r')
            if not line.strip():
                continue
            if line.startswith('#'):
                key, sep, value = line[1:].strip().partition('=')
                if sep:
                    provenance[key] = value
                continue
            cells = next(csv.reader([line]))
            if header is None:
                header = [c.strip() for c in cells]
                if len(header) < 2:
                    raise SpectrumFormatError(filepath, number, "header needs an energy column and a yield column")
                if header[0] != 'energy_eV':
                    raise SpectrumFormatError(filepath, number, f"first column must be energy_eV, got {header[0]!r}")
                continue
            if len(cells) != len(header):
                raise SpectrumFormatError(filepath, number,
                                          f"expected {len(header)} columns, found {len(cells)}")
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                raise SpectrumFormatError(filepath, number, f"non-numeric value in {line!r}")
    if header is None or not rows:
        raise SpectrumFormatError(filepath, 0, "no data rows")
    data = np.array(rows)
    energies = data[:, 0]
    if np.any(np.diff(energies) <= 0):
        bad = int(np.argmax(np.diff(energies) <= 0))
        raise SpectrumFormatError(filepath, 0, f"energies not strictly increasing at data row {bad + 2}")
    return Table(header=header, data=data, provenance=provenance)


def scan_ceps(table: Table) -> Optional[np.ndarray]:
    """CEP values encoded in a scan-matrix header, or None for a plain spectrum"""
    values = []
    for name in table.header[1:]:
        match = CEP_COLUMN.match(name)
        if not match:
            return None
        values.append(float(match.group('value')))
    return np.array(values)


def read_provenance(filepath: str) -> Dict[str, str]:
    """The `# key=value` lines of any text file this tool writes"""
    provenance: Dict[str, str] = {}
    with open(filepath, 'r', newline='', encoding='utf-8') as f:
        for line in f:
            if line.startswith('#'):
                key, sep, value = line[1:].strip().partition('=')
                if sep:
                    provenance[key] = value
    return provenance


def is_tool_output(filepath: str) -> bool:
    with open(filepath, 'r', encoding='utf-8', errors='replace') as f:
        return f.readline().rstrip('\r\n') == f"# tool={TOOL_NAME}"


def provenance_config(provenance: Dict[str, str]) -> Dict[str, str]:
    """Resolved run configuration recorded in a provenance header"""
    return {key[len('config.'):]: value for key, value in provenance.items() if key.startswith('config.')}


def write_key_value_report(filepath: str, records: Dict[str, Dict[str, object]], config_text: str = '') -> str:
    lines = [f"# tool={TOOL_NAME}", f"# version={__version__}"]
    for name in sorted(records):
        for key, value in records[name].items():
            if isinstance(value, (float, np.floating)):
                value = format_number(float(value))
            lines.append(f"{name}.{key}={value}")
    for line in config_text.splitlines():
        if line.strip():
            lines.append(f"# config.{line}")
    os.makedirs(os.path.dirname(filepath) or '.', exist_ok=True)
    with open(filepath, 'w', newline='', encoding='utf-8') as f:
        f.write('\n'.join(lines) + '\n')
    return filepath


def read_key_value_report(filepath: str) -> Dict[str, str]:
    values = {}
    with open(filepath, 'r', encoding='utf-8') as f:
        for line in f:
            line = line.strip()
            if line and not line.startswith('#'):
                key, _, value = line.partition('=')
                values[key] = value
    return values


def read_spectrum(filepath: str) -> Tuple[np.ndarray, np.ndarray]:
    table = read_table(filepath)
    return table.data[:, 0], table.data[:, 1]
