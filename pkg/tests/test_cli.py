import json

import numpy as np
import pytest

from dyadic_morrey.cli import ExitCode, main
from dyadic_morrey.core.array_packer import encode_doubles
from dyadic_morrey.ensembles import random_ensemble
from dyadic_morrey.files import FunctionFile, parse_report, read_function, write_function
from dyadic_morrey.operators import commutator_direct, fractional_integral


@pytest.fixture
def sample_file(tmp_path, line):
    path = tmp_path / "f.json"
    write_function(str(path), random_ensemble(line, 1, seed=1)[0])
    return path


@pytest.fixture
def symbol_file(tmp_path, line):
    path = tmp_path / "a.json"
    write_function(str(path), random_ensemble(line, 1, seed=2)[0])
    return path


def test_transform_round_trip(tmp_path, sample_file):
    coefficients, back = tmp_path / "c.json", tmp_path / "back.json"
    assert main(['transform', str(sample_file), '--out', str(coefficients)]) == ExitCode.PASS
    assert FunctionFile.read(str(coefficients)).kind.value == 'coefficients'
    assert main(['transform', str(coefficients), '--direction', 'inverse', '--out', str(back)]) == 0
    assert np.allclose(read_function(str(back)).values, read_function(str(sample_file)).values)


def test_norm_report(tmp_path, sample_file):
    out = tmp_path / "norm.csv"
    assert main(['norm', str(sample_file), '--kind', 'morrey', '--p', '4', '--q', '2', '--out', str(out)]) == 0
    metadata, header, rows = parse_report(out.read_text())
    assert metadata['command'].startswith("dyadic-morrey norm")
    assert json.loads(metadata['parameters'])['p'] == 4.0
    assert header[:3] == ['kind', 'value', 'witness']
    assert rows[0][0] == 'morrey'
    assert float(rows[0][1]) > 0.0
    assert rows[0][2].startswith("Q[")


def test_block_norm_report(tmp_path, shifted):
    source, out = tmp_path / "f.json", tmp_path / "block.csv"
    write_function(str(source), random_ensemble(shifted, 1, seed=4)[0])
    assert main(['norm', str(source), '--kind', 'block', '--p', '2', '--q', '3', '--out', str(out)]) == 0
    _, header, rows = parse_report(out.read_text())
    row = dict(zip(header, rows[0]))
    assert float(row['lower']) <= float(row['upper']) + 1e-9
    assert row['converged'] in ('true', 'false')


def test_apply_fractional_integral(tmp_path, sample_file):
    out = tmp_path / "i.json"
    assert main(['apply', 'ialpha', str(sample_file), '--alpha', '0.5', '--out', str(out)]) == 0
    expected = fractional_integral(read_function(str(sample_file)), 0.5)
    assert np.allclose(read_function(str(out)).values, expected.values)


def test_apply_commutator(tmp_path, sample_file, symbol_file):
    out = tmp_path / "k.json"
    assert main(['apply', 'commutator', str(symbol_file), str(sample_file), '--alpha', '0.25',
                 '--out', str(out)]) == 0
    expected = commutator_direct(read_function(str(symbol_file)), read_function(str(sample_file)), 0.25)
    assert np.allclose(read_function(str(out)).values, expected.values)


def test_apply_needs_its_parameters(tmp_path, sample_file, symbol_file):
    out = str(tmp_path / "x.json")
    assert main(['apply', 'ialpha', str(sample_file), '--out', out]) == ExitCode.USAGE
    assert main(['apply', 'tail_high', str(symbol_file), str(sample_file), '--alpha', '0.5',
                 '--out', out]) == ExitCode.USAGE
    assert main(['apply', 'paraproduct', str(sample_file), '--out', out]) == ExitCode.USAGE
    assert main(['apply', 'ialpha', str(sample_file), '--alpha', '2.0', '--out', out]) == ExitCode.USAGE


def test_apply_rejects_mismatched_geometry(tmp_path, sample_file, shifted):
    other = tmp_path / "other.json"
    write_function(str(other), random_ensemble(shifted, 1, seed=1)[0])
    assert main(['apply', 'paraproduct', str(other), str(sample_file)]) == ExitCode.USAGE


def test_nonfinite_input_is_a_data_error(tmp_path):
    path = tmp_path / "nan.json"
    path.write_text(json.dumps({"kind": "function", "n": 1, "j_min": 0, "J": 1, "base_mean": 0.0,
                                "payload": encode_doubles([1.0, float('inf')])}))
    assert main(['norm', str(path)]) == ExitCode.DATA


def test_missing_file_is_a_usage_error(tmp_path):
    assert main(['norm', str(tmp_path / "absent.json")]) == ExitCode.USAGE


def test_unknown_command_exits_with_usage():
    with pytest.raises(SystemExit) as error:
        main(['frobnicate'])
    assert error.value.code == 2


def test_sample_is_seeded(tmp_path):
    first, second = tmp_path / "1.json", tmp_path / "2.json"
    assert main(['sample', '--J', '5', '--seed', '3', '--out', str(first)]) == 0
    assert main(['sample', '--J', '5', '--seed', '3', '--out', str(second)]) == 0
    assert first.read_text() == second.read_text()
    assert read_function(str(first)).geometry.finest_level == 5


def test_verify_passes_and_writes_report(tmp_path):
    config, out = tmp_path / "verify.yaml", tmp_path / "decomp.csv"
    config.write_text("pair_count: 3\n")
    assert main(['verify', 'decomp', '--config', str(config), '--J', '4', '--out', str(out)]) == ExitCode.PASS
    metadata, _, rows = parse_report(out.read_text())
    assert metadata['seed'] == "42"
    assert all(row[-1] == 'true' for row in rows)


def test_verify_gate_failure_exits_one(tmp_path):
    config, out = tmp_path / "verify.yaml", tmp_path / "decomp.csv"
    config.write_text("pair_count: 2\nidentity_tolerance: 0.0\n")
    assert main(['verify', 'decomp', '--config', str(config), '--J', '3', '--out', str(out)]) \
        == ExitCode.GATE_FAILURE
    assert out.exists()


def test_verify_rejects_bad_config(tmp_path):
    config = tmp_path / "verify.yaml"
    config.write_text("no_such_field: 1\n")
    assert main(['verify', 'decomp', '--config', str(config)]) == ExitCode.USAGE


def test_apply_records_its_parameters(tmp_path, sample_file, symbol_file):
    out = tmp_path / "tail.json"
    assert main(['apply', 'tail_high', str(symbol_file), str(sample_file), '--alpha', '0.5', '--L', '9',
                 '--out', str(out)]) == 0
    document = FunctionFile.read(str(out))
    assert document.parameters['op'] == 'tail_high'
    assert document.parameters['L'] == 9
    assert document.to_function().is_zero()
