"""Function files and report tables.

A function file is one JSON document:

    {"kind": "function" | "coefficients", "n": 1, "j_min": 0, "J": 8,
     "base_mean": 0.0, "payload": "<base64 of little-endian float64>",
     "parameters": {...}}

Function payloads list the cell values row-major; coefficient payloads list
the Haar coefficients in canonical order with the base mean in the header.
The optional parameters object records how an operator output was produced.
Report tables are CSV preceded by '#' metadata lines.
"""
import csv
import io
import json
import math
from enum import Enum
from typing import Any, Dict, List, Optional, TextIO, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from dyadic_morrey import __version__
from dyadic_morrey.core.array_packer import decode_doubles, encode_doubles
from dyadic_morrey.core.cubes import GridGeometry
from dyadic_morrey.core.grid import GridFunction
from dyadic_morrey.errors import DataError, ParameterError, ParseError
from dyadic_morrey.haar import HaarCoefficients
from dyadic_morrey.helpers.logging_helpers import get_logger
log = get_logger(__name__)


class FileKind(str, Enum):
    FUNCTION = 'function'
    COEFFICIENTS = 'coefficients'


class FunctionFile(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: FileKind
    n: int
    j_min: int
    J: int
    base_mean: float = 0.0
    payload: str
    parameters: Dict[str, Any] = Field(default_factory=dict)

    @property
    def geometry(self) -> GridGeometry:
        return GridGeometry.create(self.n, self.j_min, self.J)

    @classmethod
    def of_function(cls, f: GridFunction, parameters: Optional[Dict[str, Any]] = None) -> "FunctionFile":
        g = f.geometry
        return cls(kind=FileKind.FUNCTION, n=g.dimension, j_min=g.coarsest_level, J=g.finest_level,
                   payload=encode_doubles(f.values), parameters=parameters or {})

    @classmethod
    def of_coefficients(cls, c: HaarCoefficients) -> "FunctionFile":
        g = c.geometry
        return cls(kind=FileKind.COEFFICIENTS, n=g.dimension, j_min=g.coarsest_level, J=g.finest_level,
                   base_mean=c.base_mean, payload=encode_doubles(c.to_vector()))

    def _values(self, expected: int) -> np.ndarray:
        values = np.array(decode_doubles(self.payload, expected), dtype=np.float64)
        bad = np.flatnonzero(~np.isfinite(values))
        if bad.size or not math.isfinite(self.base_mean):
            where = f"value {int(bad[0])}" if bad.size else "base_mean"
            raise DataError(f"nonfinite {where} in {self.kind.value} file")
        return values

    def to_function(self) -> GridFunction:
        if self.kind != FileKind.FUNCTION:
            raise ParseError(f"expected a function file, found {self.kind.value}")
        g = self.geometry
        return GridFunction(g, self._values(g.cell_count))

    def to_coefficients(self) -> HaarCoefficients:
        if self.kind != FileKind.COEFFICIENTS:
            raise ParseError(f"expected a coefficient file, found {self.kind.value}")
        g = self.geometry
        count = ((1 << g.dimension) - 1) * sum(g.cube_count(j) for j in g.haar_levels)
        return HaarCoefficients.from_vector(g, self.base_mean, self._values(count))

    def dumps(self) -> str:
        return json.dumps(self.model_dump(mode='json'), indent=2) + "\n"

    @classmethod
    def loads(cls, text: str) -> "FunctionFile":
        try:
            document = json.loads(text)
        except json.JSONDecodeError as e:
            raise ParseError(f"malformed function file: {e.msg}", line=e.lineno, offset=e.pos) from e
        if not isinstance(document, dict):
            raise ParseError("function file must hold a JSON object", line=1)
        try:
            header = cls.model_validate(document)
        except ValidationError as e:
            error = e.errors()[0]
            field = ".".join(str(x) for x in error['loc'])
            raise ParseError(f"bad header field '{field}': {error['msg']}", line=_line_of(text, field)) from e
        try:
            header.geometry
        except ParameterError as e:
            raise ParseError(f"bad geometry in header: {e}", line=_line_of(text, 'J')) from e
        return header

    def write(self, path: str):
        with open(path, 'w') as stream:
            stream.write(self.dumps())

    @classmethod
    def read(cls, path: str) -> "FunctionFile":
        with open(path) as stream:
            document = cls.loads(stream.read())
        log.debug(f"read {document.kind.value} file {path} ({document.geometry})")
        return document


def _line_of(text: str, field: str) -> Optional[int]:
    for number, line in enumerate(text.splitlines(), start=1):
        if f'"{field}"' in line:
            return number
    return None


def read_function(path: str) -> GridFunction:
    return FunctionFile.read(path).to_function()


def write_function(path: str, f: GridFunction):
    FunctionFile.of_function(f).write(path)


Cell = Union[float, int, str, bool, None]


def _format_cell(value: Cell) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), '.17g')
    return str(value)


class ReportMetadata(BaseModel):
    model_config = ConfigDict(frozen=True)

    command: str
    seed: Optional[int] = None
    geometry: str = ""
    parameters: Dict[str, Any] = Field(default_factory=dict)
    version: str = __version__


class ReportTable:
    """Named columns of measured values plus the provenance needed to rerun them."""

    def __init__(self, metadata: ReportMetadata, columns: List[str]):
        self._metadata = metadata
        self._columns = list(columns)
        self._rows: List[List[Cell]] = []

    @property
    def metadata(self) -> ReportMetadata:
        return self._metadata

    @property
    def columns(self) -> List[str]:
        return self._columns

    @property
    def rows(self) -> List[List[Cell]]:
        return self._rows

    def add_row(self, **values: Cell):
        unknown = set(values) - set(self._columns)
        if unknown:
            raise ParameterError(f"unknown report columns {sorted(unknown)}")
        self._rows.append([values.get(name) for name in self._columns])

    def column(self, name: str) -> List[Cell]:
        index = self._columns.index(name)
        return [row[index] for row in self._rows]

    def write_to(self, stream: TextIO):
        meta = self._metadata
        stream.write(f"# command: {meta.command}\n")
        stream.write(f"# seed: {'' if meta.seed is None else meta.seed}\n")
        stream.write(f"# geometry: {meta.geometry}\n")
        stream.write(f"# parameters: {json.dumps(meta.parameters, sort_keys=True)}\n")
        stream.write(f"# version: {meta.version}\n")
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(self._columns)
        for row in self._rows:
            writer.writerow([_format_cell(value) for value in row])

    def dumps(self) -> str:
        buffer = io.StringIO()
        self.write_to(buffer)
        return buffer.getvalue()

    def write(self, path: str):
        with open(path, 'w', newline="") as stream:
            self.write_to(stream)


def parse_report(text: str):
    """Split a report into its metadata lines and CSV rows of strings."""
    metadata, body = {}, []
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            metadata[key] = value
        else:
            body.append(line)
    rows = list(csv.reader(body))
    return metadata, rows[0] if rows else [], rows[1:]
