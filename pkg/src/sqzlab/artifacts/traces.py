"""Strict CSV tables and JSON documents on disk.

Every table is UTF-8 with LF line endings: optional ``# key=value`` metadata rows (values are
JSON), one header row, then numeric rows. Numbers use '.' as the decimal separator and are
written with 17 significant digits so that reading a file back returns the same doubles.
Empty cells stand for values that were not computed (e.g. above threshold).

Design Philosophy:
- One writer and one reader for every file the CLI produces or consumes
- Writes are atomic: a temporary file in the target directory is renamed over the target
- The reader rejects anything locale-dependent instead of guessing
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import re
import tempfile
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence, Union

import numpy as np
from numpy.typing import NDArray

from sqzlab.errors import ColumnMismatchError, TraceFormatError
from sqzlab.models import SpectrumTrace, TraceUnit, TransmissionCurve
from sqzlab.units import angular_to_hz, hz_to_angular

Cell = Union[float, int, str, None]

_NUMBER = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")
_SPECIAL = {"nan": math.nan, "inf": math.inf, "-inf": -math.inf}

SPECTRUM_COLUMNS = {
    TraceUnit.RAW_PSD: ["freq_hz", "psd"],
    TraceUnit.SHOT_NORMALIZED_LINEAR: ["freq_hz", "psd_rel_shot"],
    TraceUnit.SHOT_NORMALIZED_DB: ["freq_hz", "psd_db_rel_shot"],
}
TRANSMISSION_COLUMNS = ["detuning_hz", "transmittance", "phase_rad"]


def format_cell(value: Cell) -> str:
    """Locale-free text for one cell."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        number = float(value)
        if math.isnan(number):
            return "nan"
        if math.isinf(number):
            return "inf" if number > 0 else "-inf"
        return format(number, ".17g")
    return str(value)


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Path):
        return value.as_posix()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def dumps(data: Any) -> str:
    """Canonical JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(data, indent=2, sort_keys=True, default=_json_default) + "\n"


def atomic_write_text(path: Path, text: str) -> Path:
    """Write ``text`` to ``path`` through a temporary sibling and ``os.replace``."""
    path.parent.mkdir(parents=True, exist_ok=True)
    handle, temp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(handle, "w", encoding="utf-8", newline="\n") as file:
            file.write(text)
        os.replace(temp_name, path)
    except BaseException:
        Path(temp_name).unlink(missing_ok=True)
        raise
    return path


def write_json(path: Path, data: Any) -> Path:
    return atomic_write_text(path, dumps(data))


def file_digest(path: Path) -> str:
    """Hex SHA-256 of a file's bytes."""
    digest = hashlib.sha256()
    with path.open("rb") as file:
        for chunk in iter(lambda: file.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass(frozen=True)
class Table:
    """Columns read from a strict CSV file; empty cells are NaN."""

    columns: list[str]
    data: dict[str, NDArray[np.float64]]
    metadata: dict[str, Any] = field(default_factory=dict)

    def __getitem__(self, column: str) -> NDArray[np.float64]:
        return self.data[column]

    def __len__(self) -> int:
        return int(next(iter(self.data.values())).size) if self.data else 0


def write_table(
    path: Path,
    columns: Sequence[str],
    rows: Iterable[Sequence[Cell]],
    metadata: Optional[Mapping[str, Any]] = None,
) -> Path:
    """Write a header plus rows; metadata keys are emitted sorted.

    Raises:
        ValueError: If a row length differs from the header
    """
    buffer = io.StringIO()
    for key in sorted(metadata or {}):
        value = json.dumps((metadata or {})[key], sort_keys=True, default=_json_default)
        buffer.write(f"# {key}={value}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for index, row in enumerate(rows):
        if len(row) != len(columns):
            raise ValueError(f"Row {index} has {len(row)} cells for {len(columns)} columns")
        writer.writerow([format_cell(cell) for cell in row])
    return atomic_write_text(path, buffer.getvalue())


def _parse_number(text: str, line: int) -> float:
    if text == "":
        return math.nan
    if text in _SPECIAL:
        return _SPECIAL[text]
    if not _NUMBER.match(text):
        raise TraceFormatError(f"not a '.'-decimal number: {text!r}", line)
    return float(text)


def read_table(path: Path, expected: Optional[Sequence[str]] = None) -> Table:
    """Read a strict CSV table.

    Args:
        path: CSV file
        expected: Required header; compared exactly, order included

    Raises:
        TraceFormatError: On non-UTF-8 bytes, CR line endings, malformed metadata or numbers
        ColumnMismatchError: If the header differs from ``expected``
    """
    raw = path.read_bytes()
    if b"\r" in raw:
        raise TraceFormatError(f"{path.name} uses CR line endings; only LF is accepted")
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise TraceFormatError(f"{path.name} is not UTF-8: {exc.reason}") from exc

    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    metadata: dict[str, Any] = {}
    start = 0
    while start < len(lines) and lines[start].startswith("#"):
        entry = lines[start][1:].strip()
        if "=" not in entry:
            raise TraceFormatError("metadata row must look like '# key=value'", start + 1)
        key, value = entry.split("=", 1)
        try:
            metadata[key.strip()] = json.loads(value)
        except json.JSONDecodeError as exc:
            raise TraceFormatError(f"metadata value is not JSON: {exc.msg}", start + 1) from exc
        start += 1
    if start >= len(lines):
        raise TraceFormatError(f"{path.name} has no header row")

    rows = list(csv.reader(lines[start:]))
    header = [name.strip() for name in rows[0]]
    if expected is not None and header != list(expected):
        raise ColumnMismatchError(list(expected), header)

    columns: list[list[float]] = [[] for _ in header]
    for offset, row in enumerate(rows[1:], start=start + 2):
        if len(row) != len(header):
            raise TraceFormatError(f"expected {len(header)} cells, found {len(row)}", offset)
        for index, cell in enumerate(row):
            columns[index].append(_parse_number(cell.strip(), offset))
    data = {name: np.asarray(values, dtype=float) for name, values in zip(header, columns)}
    return Table(columns=header, data=data, metadata=metadata)


def write_spectrum_trace(path: Path, trace: SpectrumTrace) -> Path:
    """Two-column trace with its unit and metadata in the comment rows."""
    columns = SPECTRUM_COLUMNS[trace.unit]
    metadata = {**trace.metadata, "unit": trace.unit.value}
    return write_table(path, columns, zip(trace.freqs, trace.values), metadata)


def read_spectrum_trace(path: Path) -> SpectrumTrace:
    """Read a trace written by ``write_spectrum_trace``; the unit row picks the header.

    Files without a unit row are accepted when their header names a known unit.
    """
    table = read_table(path)
    unit_name = table.metadata.get("unit")
    if unit_name is None:
        matches = [unit for unit, cols in SPECTRUM_COLUMNS.items() if cols == table.columns]
        if not matches:
            raise ColumnMismatchError(SPECTRUM_COLUMNS[TraceUnit.SHOT_NORMALIZED_DB], table.columns)
        unit = matches[0]
    else:
        try:
            unit = TraceUnit(unit_name)
        except ValueError as exc:
            raise TraceFormatError(f"unknown trace unit {unit_name!r}") from exc
    columns = SPECTRUM_COLUMNS[unit]
    if table.columns != columns:
        raise ColumnMismatchError(columns, table.columns)
    metadata = {k: v for k, v in table.metadata.items() if k != "unit"}
    try:
        return SpectrumTrace(table[columns[0]], table[columns[1]], unit, metadata)
    except ValueError as exc:
        raise TraceFormatError(f"{path.name}: {exc}") from exc


def write_transmission(
    path: Path, curve: TransmissionCurve, metadata: Optional[Mapping[str, Any]] = None
) -> Path:
    """Transmission curve with detunings converted to Hz."""
    rows = zip(angular_to_hz(curve.detunings), curve.transmittance, curve.amplitude_phase)
    return write_table(path, TRANSMISSION_COLUMNS, rows, metadata)


def read_transmission(path: Path) -> tuple[TransmissionCurve, dict[str, Any]]:
    """Transmission curve and the metadata rows of its file."""
    table = read_table(path, TRANSMISSION_COLUMNS)
    try:
        curve = TransmissionCurve(
            detunings=hz_to_angular(table["detuning_hz"]),
            transmittance=table["transmittance"],
            amplitude_phase=table["phase_rad"],
        )
    except ValueError as exc:
        raise TraceFormatError(f"{path.name}: {exc}") from exc
    return curve, table.metadata
