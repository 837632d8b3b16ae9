import json

import numpy as np
import pytest

from dyadic_morrey import __version__
from dyadic_morrey.core.array_packer import encode_doubles
from dyadic_morrey.core.grid import GridFunction
from dyadic_morrey.ensembles import random_ensemble
from dyadic_morrey.errors import DataError, ParameterError, ParseError
from dyadic_morrey.files import (FileKind, FunctionFile, ReportMetadata, ReportTable, parse_report,
                                 read_function, write_function)
from dyadic_morrey.haar import forward_transform


def _document(**fields):
    header = {"kind": "function", "n": 1, "j_min": 0, "J": 2, "base_mean": 0.0,
              "payload": encode_doubles([1.0, 2.0, 3.0, 4.0])}
    header.update(fields)
    return json.dumps(header, indent=2)


def test_function_file_preserves_values_bitwise(tmp_path, shifted):
    f = random_ensemble(shifted, 1, seed=3)[0] + 0.1
    path = tmp_path / "f.json"
    write_function(str(path), f)
    back = read_function(str(path))
    assert back.geometry == shifted
    assert np.array_equal(back.values, f.values)


def test_coefficient_file(planar_functions):
    c = forward_transform(planar_functions[0] + 2.0)
    document = FunctionFile.loads(FunctionFile.of_coefficients(c).dumps())
    assert document.kind == FileKind.COEFFICIENTS
    back = document.to_coefficients()
    assert back.base_mean == c.base_mean
    assert np.array_equal(back.to_vector(), c.to_vector())
    with pytest.raises(ParseError):
        document.to_function()


def test_header_fields(line):
    document = json.loads(FunctionFile.of_function(GridFunction.zeros(line)).dumps())
    assert set(document) == {"kind", "n", "j_min", "J", "base_mean", "payload", "parameters"}
    assert document["kind"] == "function"
    assert document["J"] == 6


def test_loads_valid_document():
    f = FunctionFile.loads(_document()).to_function()
    assert np.array_equal(f.values, [1.0, 2.0, 3.0, 4.0])


def test_malformed_json_reports_location():
    with pytest.raises(ParseError) as error:
        FunctionFile.loads('{\n  "kind": "function",\n  oops\n}')
    assert error.value.line == 3


def test_bad_header_field_reports_its_line():
    with pytest.raises(ParseError) as error:
        FunctionFile.loads(_document(kind="spline"))
    assert error.value.line == 2
    assert "kind" in str(error.value)


def test_bad_geometry_in_header():
    with pytest.raises(ParseError):
        FunctionFile.loads(_document(j_min=3))


def test_payload_length_must_match_header():
    with pytest.raises(ParseError):
        FunctionFile.loads(_document(J=3)).to_function()


def test_nonfinite_values_are_data_errors():
    with pytest.raises(DataError) as error:
        FunctionFile.loads(_document(payload=encode_doubles([1.0, float('nan'), 3.0, 4.0]))).to_function()
    assert error.value.exit_code == 3
    assert "value 1" in str(error.value)


def test_non_object_document():
    with pytest.raises(ParseError):
        FunctionFile.loads("[1, 2, 3]")


def test_report_table_layout():
    table = ReportTable(ReportMetadata(command="verify thm1", seed=42, geometry="n=1 j_min=0 J=8",
                                       parameters={"p": 1.6}), ["check", "value", "passed"])
    table.add_row(check="band", value=0.1, passed=True)
    table.add_row(check="floor")
    text = table.dumps()
    lines = text.splitlines()
    assert lines[0] == "# command: verify thm1"
    assert lines[1] == "# seed: 42"
    assert lines[4] == f"# version: {__version__}"
    assert lines[5] == "check,value,passed"
    assert lines[6] == "band,0.10000000000000001,true"
    assert lines[7] == "floor,,"
    assert table.column("check") == ["band", "floor"]


def test_report_rejects_unknown_columns():
    table = ReportTable(ReportMetadata(command="x"), ["a"])
    with pytest.raises(ParameterError):
        table.add_row(b=1)


def test_parse_report_reads_back(tmp_path):
    table = ReportTable(ReportMetadata(command="norm", parameters={"q": 2.0}), ["kind", "value"])
    table.add_row(kind="lq", value=1.5)
    path = tmp_path / "report.csv"
    table.write(str(path))
    metadata, header, rows = parse_report(path.read_text())
    assert metadata["command"] == "norm"
    assert json.loads(metadata["parameters"]) == {"q": 2.0}
    assert header == ["kind", "value"]
    assert rows == [["lq", "1.5"]]
