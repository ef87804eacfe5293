import numpy as np
import pytest

from shared.errors import SpectrumFormatError
from shared.spectrum_io import (
    cep_column,
    content_hash,
    format_number,
    is_tool_output,
    provenance_config,
    read_key_value_report,
    read_pgm,
    read_provenance,
    read_spectrum,
    read_table,
    scan_ceps,
    write_key_value_report,
    write_pgm,
    write_scan_matrix,
    write_spectrum_csv,
)


def test_number_format():
    assert format_number(1.0) == '1.00000000e+00'
    assert format_number(-0.000123456789) == '-1.23456789e-04'


def test_content_hash_is_git_blob_sha1():
    # `git hash-object` of an empty file
    assert content_hash('') == 'e69de29bb2d1d6434b8b29ae775ad8c2d48c5391'
    assert content_hash('a\n') == content_hash('a\n')
    assert content_hash('a\n') != content_hash('b\n')


def test_spectrum_file_layout(tmp_path):
    path = str(tmp_path / 'spectrum.csv')
    write_spectrum_csv(path, np.array([1.0, 2.0]), np.array([0.5, 0.25]), 'pulse.cep=0.0\n', {'model': 'semiclassical'})
    raw = open(path, 'rb').read()
    assert b'\r\n' not in raw
    lines = raw.decode().splitlines()
    assert lines[0] == '# tool=attoslit'
    assert lines[2].startswith('# content_hash=')
    assert '# meta.model=semiclassical' in lines
    assert '# config.pulse.cep=0.0' in lines
    assert lines[-3:] == ['energy_eV,yield_arb', '1.00000000e+00,5.00000000e-01', '2.00000000e+00,2.50000000e-01']
    energies, yields = read_spectrum(path)
    np.testing.assert_allclose(yields, [0.5, 0.25])
    table = read_table(path)
    assert provenance_config(table.provenance) == {'pulse.cep': '0.0'}
    assert read_provenance(path) == table.provenance
    assert is_tool_output(path)
    assert scan_ceps(table) is None


def test_identical_inputs_give_identical_files(tmp_path):
    first, second = str(tmp_path / 'a.csv'), str(tmp_path / 'b.csv')
    for path in (first, second):
        write_spectrum_csv(path, np.linspace(1, 2, 5), np.arange(5.0), 'x=1\n')
    assert open(first, 'rb').read() == open(second, 'rb').read()


def test_scan_matrix_columns(tmp_path):
    path = str(tmp_path / 'scan.csv')
    ceps = np.array([0.0, np.pi])
    write_scan_matrix(path, np.array([1.0, 2.0, 3.0]), ceps, np.arange(6.0).reshape(3, 2))
    table = read_table(path)
    assert table.header[1] == cep_column(0.0)
    np.testing.assert_allclose(scan_ceps(table), ceps)
    assert table.data.shape == (3, 3)


def test_pgm_puts_highest_energy_first(tmp_path):
    path = str(tmp_path / 'map.pgm')
    matrix = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
    write_pgm(path, matrix)
    assert open(path, 'rb').read().startswith(b'P5\n2 3\n255\n')
    pixels = read_pgm(path)
    assert pixels.tolist() == [[255, 255], [128, 128], [0, 0]]


@pytest.mark.parametrize('body, line', [
    ('energy_eV,yield_arb\n1.0,2.0\n2.0\n', 3),
    ('energy_eV,yield_arb\n1.0,abc\n', 2),
    ('# tool=attoslit\nenergy,yield_arb\n1.0,2.0\n', 2),
])
def test_format_errors_name_the_line(tmp_path, body, line):
    path = tmp_path / 'bad.csv'
    path.write_text(body)
    with pytest.raises(SpectrumFormatError) as excinfo:
        read_table(str(path))
    assert excinfo.value.line == line
    assert f"bad.csv:{line}:" in str(excinfo.value)


def test_non_increasing_energies_rejected(tmp_path):
    path = tmp_path / 'bad.csv'
    path.write_text('energy_eV,yield_arb\n2.0,1.0\n1.0,1.0\n')
    with pytest.raises(SpectrumFormatError):
        read_table(str(path))


def test_key_value_report(tmp_path):
    path = str(tmp_path / 'report.txt')
    write_key_value_report(path, {'run': {'visibility': 0.5, 'n_peaks': 4, 'status': 'ok'}}, 'model.name=saddle\n')
    values = read_key_value_report(path)
    assert values == {'run.visibility': '5.00000000e-01', 'run.n_peaks': '4', 'run.status': 'ok'}
    assert '# config.model.name=saddle' in open(path).read()


def test_foreign_files_are_not_tool_output(tmp_path):
    plain = tmp_path / 'run.cfg'
    plain.write_text('pulse.cep=0\n# tool=attoslit\n')
    assert not is_tool_output(str(plain))
    assert read_provenance(str(plain)) == {'tool': 'attoslit'}
