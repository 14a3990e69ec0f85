"""
Export Service
--------------
JSON artifacts and CSV tables for external tools, and the reader for
spectral-data input files.

CSV layout of a spectral row (fixed):

  arg_1 .. arg_m                      arguments of t, descending
  c{k}_1                              real first coordinate of column k
  c{k}_{j}_re, c{k}_{j}_im            j = 2..n, columns k = 1..m in order
  u{i}{j}_re, u{i}{j}_im              U row-major

CSV output starts with "# key: value" lines (version, command, seed and the
resolved config as JSON) ahead of the header.

Spectral input files are read as CSV (``.csv``), as a JSON artifact
written by ``sample --extract``, or as JSON lines of SpectralRecord.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import sys
from pathlib import Path
from typing import Any, Iterable

import numpy as np
from pydantic import ValidationError

from haar_radial.errors import RecordParseError
from haar_radial.models import Artifact, SpectralRecord
from haar_radial.services.spectral import SpectralData

logger = logging.getLogger(__name__)

STDOUT = "-"
COMMENT = "# "


# =============================================
# CSV LAYOUT
# =============================================
def spectral_header(n: int, m: int) -> list[str]:
    header = [f"arg_{k}" for k in range(1, m + 1)]
    for k in range(1, m + 1):
        header.append(f"c{k}_1")
        for j in range(2, n + 1):
            header += [f"c{k}_{j}_re", f"c{k}_{j}_im"]
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            header += [f"u{i}{j}_re", f"u{i}{j}_im"]
    return header


def spectral_row(sd: SpectralData) -> list[float]:
    row = [float(a) for a in sd.args]
    for k in range(sd.m):
        row.append(float(sd.C[0, k].real))
        for j in range(1, sd.n):
            row += [float(sd.C[j, k].real), float(sd.C[j, k].imag)]
    for z in sd.U.reshape(-1):
        row += [float(z.real), float(z.imag)]
    return row


def spectral_from_row(row: dict[str, str], n: int, m: int) -> SpectralData:
    t = np.exp(1j * np.array([float(row[f"arg_{k}"]) for k in range(1, m + 1)]))
    c = np.zeros((n, m), dtype=np.complex128)
    for k in range(1, m + 1):
        c[0, k - 1] = float(row[f"c{k}_1"])
        for j in range(2, n + 1):
            c[j - 1, k - 1] = complex(float(row[f"c{k}_{j}_re"]), float(row[f"c{k}_{j}_im"]))
    u = np.array(
        [
            [complex(float(row[f"u{i}{j}_re"]), float(row[f"u{i}{j}_im"])) for j in range(1, n + 1)]
            for i in range(1, n + 1)
        ]
    )
    return SpectralData(t=t, C=c, U=u)


def matrix_header(k: int) -> list[str]:
    return [f"g{i}{j}_{part}" for i in range(1, k + 1) for j in range(1, k + 1) for part in ("re", "im")]


def matrix_row(g: np.ndarray) -> list[float]:
    return [float(x) for z in g.reshape(-1) for x in (z.real, z.imag)]


def _sizes_from_header(header: list[str]) -> tuple[int, int]:
    m = sum(1 for name in header if name.startswith("arg_"))
    n = int(round(np.sqrt(sum(1 for name in header if name.startswith("u") and name.endswith("_re")))))
    if m < 1 or n < 1 or header != spectral_header(n, m):
        raise RecordParseError(1, "header does not match the spectral CSV layout")
    return n, m


# =============================================
# WRITERS
# =============================================
def _open_out(path: str):
    if path == STDOUT:
        return _NoClose(sys.stdout)
    return open(path, "w", newline="", encoding="utf-8")


class _NoClose:
    def __init__(self, stream):
        self._stream = stream

    def __enter__(self):
        return self._stream

    def __exit__(self, *exc):
        self._stream.flush()
        return False


def write_csv(path: str, header: list[str], rows: Iterable[list[Any]], preamble: Iterable[str] = ()) -> None:
    """Preamble lines go first, each behind "# "; readers skip them."""
    with _open_out(path) as fh:
        for line in preamble:
            fh.write(f"{COMMENT}{line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(x) if isinstance(x, float) else x for x in row])


def write_json(path: str, artifact: Artifact) -> None:
    with _open_out(path) as fh:
        fh.write(artifact.model_dump_json(indent=2))
        fh.write("\n")


# =============================================
# READER
# =============================================
def _parse_json_record(obj: Any, line: int) -> SpectralData:
    try:
        return SpectralRecord.model_validate(obj).to_spectral()
    except (ValidationError, ValueError) as e:
        raise RecordParseError(line, str(e)) from e


def read_spectral_records(path: str | Path) -> list[tuple[int, SpectralData]]:
    """
    (line, SpectralData) pairs. For a JSON artifact the "line" is the
    1-based index of the record in payload.records.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if not text.strip():
        return []

    if path.suffix.lower() == ".csv":
        lines = text.splitlines(keepends=True)
        skipped = 0
        while skipped < len(lines) and lines[skipped].startswith("#"):
            skipped += 1
        reader = csv.DictReader(io.StringIO("".join(lines[skipped:])))
        try:
            n, m = _sizes_from_header(reader.fieldnames or [])
        except RecordParseError as e:
            raise RecordParseError(skipped + 1, "header does not match the spectral CSV layout") from e
        out = []
        for row in reader:
            line = skipped + reader.line_num
            try:
                out.append((line, spectral_from_row(row, n, m)))
            except (KeyError, TypeError, ValueError) as e:
                raise RecordParseError(line, f"bad value: {e}") from e
        return out

    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        doc = None
    if isinstance(doc, dict) and "payload" in doc:
        records = (doc.get("payload") or {}).get("records")
        if not isinstance(records, list):
            raise RecordParseError(1, "artifact payload has no 'records' list")
        return [(i, _parse_json_record(obj, i)) for i, obj in enumerate(records, start=1)]

    out = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise RecordParseError(line_no, f"invalid JSON: {e.msg}") from e
        out.append((line_no, _parse_json_record(obj, line_no)))
    logger.debug(f"read {len(out)} spectral records from {path}")
    return out
