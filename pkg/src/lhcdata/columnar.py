"""Reading and writing :class:`EventTable` objects.

Formats and compressions (``FileFormat``)::

    ArrowIPC  none zstd lz4                  (Arrow IPC file, "feather v2")
    Parquet   none zstd gzip brotli snappy
    Jsonl     none gzip zstd                 (whole-file compression)
    Csv       none gzip zstd                 (whole-file compression)

Ragged columns become Arrow list columns, JSON arrays in Jsonl and JSON
arrays inside quoted CSV fields.  Floats are written with ``repr`` in the
text formats, so every format round-trips bit-exactly in practice.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import platform
import statistics
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
import pyarrow as pa
import pyarrow.feather as feather
import pyarrow.parquet as pq

from .errors import DomainError, FormatError, IoError, ParseError, UnsupportedCombination
from .model import (
    COLLECTIONS,
    EventTable,
    META_COLUMNS,
    RaggedArray,
    schema_columns,
    table_from_events,
    validate_table,
)

log = logging.getLogger(__name__)

KINDS = ("ArrowIPC", "Parquet", "Jsonl", "Csv")
SUPPORT: dict[str, tuple[str, ...]] = {
    "ArrowIPC": ("none", "zstd", "lz4"),
    "Parquet": ("none", "zstd", "gzip", "brotli", "snappy"),
    "Jsonl": ("none", "gzip", "zstd"),
    "Csv": ("none", "gzip", "zstd"),
}
_KIND_ALIASES = {
    "arrow": "ArrowIPC", "arrowipc": "ArrowIPC", "ipc": "ArrowIPC", "feather": "ArrowIPC",
    "parquet": "Parquet", "jsonl": "Jsonl", "json": "Jsonl", "csv": "Csv",
}
_EXTENSIONS = {
    ".arrow": "ArrowIPC", ".feather": "ArrowIPC", ".ipc": "ArrowIPC", ".parquet": "Parquet",
    ".jsonl": "Jsonl", ".json": "Jsonl", ".csv": "Csv",
}
_SUFFIX = {"ArrowIPC": ".arrow", "Parquet": ".parquet", "Jsonl": ".jsonl", "Csv": ".csv"}

_ARROW_MAGIC = b"ARROW1"
_PARQUET_MAGIC = b"PAR1"
_GZIP_MAGIC = b"\x1f\x8b"
_ZSTD_MAGIC = b"\x28\xb5\x2f\xfd"


@dataclass(frozen=True)
class FileFormat:
    kind: str = "ArrowIPC"
    compression: str = "zstd"

    def __post_init__(self):
        kind = _KIND_ALIASES.get(self.kind.lower(), self.kind) if isinstance(self.kind, str) else self.kind
        comp = (self.compression or "none").lower()
        if comp in ("uncompressed", "null"):
            comp = "none"
        if kind not in SUPPORT:
            raise UnsupportedCombination(f"unknown format kind {self.kind!r}")
        if comp not in SUPPORT[kind]:
            raise UnsupportedCombination(
                f"{kind} does not support {comp!r} compression (supported: {', '.join(SUPPORT[kind])})")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "compression", comp)

    @classmethod
    def parse(cls, text: str) -> "FileFormat":
        """``"arrow"``, ``"parquet+gzip"``, ``"Csv:zstd"`` and similar."""
        for sep in ("+", ":", "/"):
            if sep in text:
                kind, comp = text.split(sep, 1)
                return cls(kind.strip(), comp.strip())
        kind = _KIND_ALIASES.get(text.strip().lower(), text.strip())
        return cls(kind, "zstd" if kind == "ArrowIPC" else "none")

    @property
    def suffix(self) -> str:
        s = _SUFFIX[self.kind]
        if self.kind in ("Jsonl", "Csv") and self.compression != "none":
            s += {"gzip": ".gz", "zstd": ".zst"}[self.compression]
        return s

    def __str__(self):
        return f"{self.kind}+{self.compression}"


def all_formats() -> list[FileFormat]:
    return [FileFormat(k, c) for k in KINDS for c in SUPPORT[k]]


# --------------------------------------------------------------------------
# Arrow conversion
# --------------------------------------------------------------------------


def to_arrow(t: EventTable) -> pa.Table:
    arrays, names = [], []
    for name, col in t.columns.items():
        if isinstance(col, RaggedArray):
            values = pa.array(col.values)
            if col.offsets[-1] < 2 ** 31 - 1:
                arr = pa.ListArray.from_arrays(pa.array(col.offsets.astype(np.int32)), values)
            else:
                arr = pa.LargeListArray.from_arrays(pa.array(col.offsets), values)
        else:
            arr = pa.array(np.asarray(col))
        arrays.append(arr)
        names.append(name)
    if not arrays:
        return pa.table({})
    return pa.Table.from_arrays(arrays, names=names)


def from_arrow(table: pa.Table) -> EventTable:
    cols: dict[str, Any] = {}
    for name in table.column_names:
        chunked = table.column(name)
        arr = chunked.combine_chunks() if chunked.num_chunks != 1 else chunked.chunk(0)
        if pa.types.is_list(arr.type) or pa.types.is_large_list(arr.type):
            offsets = np.asarray(arr.offsets, dtype=np.int64)
            values = arr.flatten().to_numpy(zero_copy_only=False)
            cols[name] = RaggedArray(offsets - offsets[0], values)
        else:
            cols[name] = arr.to_numpy(zero_copy_only=False)
    return EventTable(cols, table.num_rows)


# --------------------------------------------------------------------------
# text formats
# --------------------------------------------------------------------------

_SCHEMA_KIND: dict[str, tuple[bool, Any]] = {}
for _c in META_COLUMNS:
    _SCHEMA_KIND[_c.name] = (False, _c.dtype)
for _coll in COLLECTIONS:
    _SCHEMA_KIND[_coll.count] = (False, np.int64)
    for _c in _coll.columns:
        _SCHEMA_KIND[_c.name] = (True, _c.dtype)


def _column_lists(t: EventTable) -> dict[str, list]:
    return {name: (col.to_lists() if isinstance(col, RaggedArray) else np.asarray(col).tolist())
            for name, col in t.columns.items()}


def _infer_dtype(values: list):
    if not values:
        return np.float64
    if all(isinstance(v, bool) for v in values):
        return np.bool_
    if all(isinstance(v, int) and not isinstance(v, bool) for v in values):
        return np.int64
    return np.float64


def _build_columns(names: Sequence[str], rows: dict[str, list], n: int) -> dict[str, Any]:
    """Typed columns from per-row Python values (schema dtype where known)."""
    cols: dict[str, Any] = {}
    for name in names:
        vals = rows[name]
        ragged, dtype = _SCHEMA_KIND.get(name, (None, None))
        if ragged is None:
            ragged = any(isinstance(v, list) for v in vals)
            if ragged:
                dtype = _infer_dtype([x for v in vals for x in v])
            else:
                dtype = _infer_dtype(vals)
        if ragged:
            cols[name] = RaggedArray.from_lists(vals, dtype=dtype)
        else:
            cols[name] = np.asarray(vals, dtype=dtype) if vals else np.zeros(0, dtype=dtype)
    return cols


def _open_text_out(path: Path, compression: str):
    if compression == "none":
        return open(path, "w", encoding="utf-8", newline="")
    raw = pa.CompressedOutputStream(str(path), compression)
    return io.TextIOWrapper(raw, encoding="utf-8", newline="")


def _read_text(path: Path, data: bytes) -> str:
    if data.startswith(_GZIP_MAGIC) or data.startswith(_ZSTD_MAGIC):
        codec = "gzip" if data.startswith(_GZIP_MAGIC) else "zstd"
        try:
            with pa.CompressedInputStream(pa.BufferReader(data), codec) as stream:
                data = stream.read()
        except (pa.ArrowInvalid, pa.ArrowIOError, OSError) as exc:
            raise FormatError(f"corrupt {codec} stream in {path}: {exc}", len(data)) from exc
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path} is not valid UTF-8", exc.start) from exc


def _write_jsonl(t: EventTable, path: Path, compression: str):
    lists = _column_lists(t)
    names = list(lists)
    with _open_text_out(path, compression) as fh:
        for i in range(t.n_rows):
            fh.write(json.dumps({k: lists[k][i] for k in names}, separators=(",", ":")))
            fh.write("\n")


def _check_counts(rec: dict, line: int):
    """Raise ParseError naming the first vec column disagreeing with its count."""
    for coll in COLLECTIONS:
        n = rec.get(coll.count)
        for col in coll.columns:
            if col.name not in rec:
                continue
            v = rec[col.name]
            if not isinstance(v, list):
                raise ParseError(f"{col.name} must be an array", line, col.name)
            if n is None:
                n = len(v)
            elif len(v) != n:
                raise ParseError(f"{col.name} has {len(v)} entries but {coll.count} = {n}", line, col.name)


def _parse_jsonl(text: str, path) -> tuple[list[str], list[dict], list[int]]:
    records, line_numbers = [], []
    names: dict[str, None] = {}
    offset = 0
    for lineno, line in enumerate(text.splitlines(keepends=True), 1):
        stripped = line.strip()
        if stripped:
            try:
                rec = json.loads(stripped)
            except json.JSONDecodeError as exc:
                lead = len(line) - len(line.lstrip())
                pos = offset + len(line[:lead + exc.pos].encode("utf-8"))
                raise ParseError(f"invalid JSON: {exc.msg}", lineno, exc.colno, pos) from exc
            if not isinstance(rec, dict):
                raise ParseError("each line must hold a JSON object", lineno)
            _check_counts(rec, lineno)
            records.append(rec)
            line_numbers.append(lineno)
            for k in rec:
                names.setdefault(k, None)
        offset += len(line.encode("utf-8"))
    if text and not text.endswith("\n"):
        raise FormatError(f"{path} ends without a newline (truncated?)", len(text.encode("utf-8")))
    return list(names), records, line_numbers


def _records_to_table(names, records, line_numbers) -> EventTable:
    rows: dict[str, list] = {k: [] for k in names}
    for rec, lineno in zip(records, line_numbers):
        for k in names:
            if k not in rec:
                raise ParseError(f"column {k!r} missing on this line", lineno, k)
            rows[k].append(rec[k])
    return EventTable(_build_columns(names, rows, len(records)), len(records))


def _write_csv(t: EventTable, path: Path, compression: str):
    lists = _column_lists(t)
    names = list(lists)
    with _open_text_out(path, compression) as fh:
        w = csv.writer(fh, lineterminator="\n")
        if names:
            w.writerow(names)
        for i in range(t.n_rows):
            w.writerow([json.dumps(lists[k][i], separators=(",", ":")) for k in names])


def _parse_csv(text: str, path) -> EventTable:
    if not text:
        return EventTable({}, 0)
    if not text.endswith("\n"):
        raise FormatError(f"{path} ends without a newline (truncated?)", len(text.encode("utf-8")))
    csv.field_size_limit(sys.maxsize)
    reader = csv.reader(io.StringIO(text, newline=""), strict=True)
    try:
        header = next(reader)
    except csv.Error as exc:
        raise ParseError(f"malformed CSV header: {exc}", 1) from exc
    rows: dict[str, list] = {k: [] for k in header}
    n = 0
    while True:
        start_line = reader.line_num + 1
        try:
            row = next(reader)
        except StopIteration:
            break
        except csv.Error as exc:
            raise ParseError(f"malformed CSV: {exc}", start_line) from exc
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, found {len(row)}", start_line)
        rec = {}
        for name, cell in zip(header, row):
            try:
                rec[name] = json.loads(cell)
            except json.JSONDecodeError as exc:
                raise ParseError(f"cannot decode cell: {exc.msg}", start_line, name) from exc
        _check_counts(rec, start_line)
        for k in header:
            rows[k].append(rec[k])
        n += 1
    return EventTable(_build_columns(header, rows, n), n)


# --------------------------------------------------------------------------
# public read/write
# --------------------------------------------------------------------------


def write_table(t: EventTable, path, fmt: FileFormat = FileFormat()) -> int:
    """Write ``t`` to ``path``; returns the number of bytes written.

    The file is written next to its destination and renamed into place.

    Raises
    ------
    UnsupportedCombination
        For a ``(kind, compression)`` pair outside the support matrix.
    IoError
        When the destination cannot be written.
    """
    if not isinstance(fmt, FileFormat):
        fmt = FileFormat.parse(str(fmt))
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(prefix=".tmp-", suffix=fmt.suffix, dir=path.parent or ".")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    os.close(fd)
    tmp = Path(tmp)
    try:
        if fmt.kind == "ArrowIPC":
            comp = "uncompressed" if fmt.compression == "none" else fmt.compression
            feather.write_feather(to_arrow(t), str(tmp), compression=comp, version=2)
        elif fmt.kind == "Parquet":
            comp = "NONE" if fmt.compression == "none" else fmt.compression
            pq.write_table(to_arrow(t), str(tmp), compression=comp)
        elif fmt.kind == "Jsonl":
            _write_jsonl(t, tmp, fmt.compression)
        else:
            _write_csv(t, tmp, fmt.compression)
        os.replace(tmp, path)
    except OSError as exc:
        tmp.unlink(missing_ok=True)
        raise IoError(f"cannot write {path}: {exc}") from exc
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise
    return path.stat().st_size


def detect_format(path, data: bytes | None = None) -> str:
    """Format kind from magic bytes, falling back to the file extension."""
    path = Path(path)
    if data is None:
        with open(path, "rb") as fh:
            data = fh.read(8)
    if data.startswith(_ARROW_MAGIC):
        return "ArrowIPC"
    if data.startswith(_PARQUET_MAGIC):
        return "Parquet"
    suffixes = [s for s in path.suffixes if s not in (".gz", ".zst")]
    by_ext = _EXTENSIONS.get(suffixes[-1].lower()) if suffixes else None
    if data.startswith(_GZIP_MAGIC) or data.startswith(_ZSTD_MAGIC):
        if by_ext in ("Jsonl", "Csv"):
            return by_ext
        head = _read_text(path, open(path, "rb").read()).lstrip()[:1]
        return "Jsonl" if head == "{" else "Csv"
    if by_ext:
        return by_ext
    return "Jsonl" if data.lstrip()[:1] == b"{" else "Csv"


def _slurp(path: Path) -> bytes:
    try:
        return path.read_bytes()
    except FileNotFoundError as exc:
        raise IoError(f"no such file: {path}") from exc
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


def _attach_warnings(t: EventTable) -> EventTable:
    report = validate_table(t)
    t.warnings.extend(str(v) for v in report.violations)
    t.warnings.extend(report.warnings)
    return t


def read_table(path, fmt: FileFormat | str | None = None) -> EventTable:
    """Read a table written by :func:`write_table` (or any conforming file).

    Schema findings are attached to ``table.warnings``.

    Raises
    ------
    IoError
        If the file is missing or unreadable.
    FormatError
        For truncated or corrupt content; the message carries a byte offset.
    """
    path = Path(path)
    data = _slurp(path)
    if fmt is None:
        kind = detect_format(path, data[:8])
    else:
        kind = fmt.kind if isinstance(fmt, FileFormat) else FileFormat.parse(str(fmt)).kind
    if kind in ("ArrowIPC", "Parquet"):
        magic = _ARROW_MAGIC if kind == "ArrowIPC" else _PARQUET_MAGIC
        if not data.startswith(magic):
            raise FormatError(f"{path} lacks the {kind} header magic", 0)
        if not data.endswith(magic):
            raise FormatError(f"{path} is truncated: {kind} footer magic missing", len(data))
        try:
            if kind == "ArrowIPC":
                table = feather.read_table(pa.BufferReader(data))
            else:
                table = pq.read_table(pa.BufferReader(data))
        except (pa.ArrowInvalid, pa.ArrowIOError, OSError, ValueError) as exc:
            raise FormatError(f"corrupt {kind} file {path}: {exc}", len(data)) from exc
        return _attach_warnings(from_arrow(table))
    text = _read_text(path, data)
    if kind == "Jsonl":
        names, records, lines = _parse_jsonl(text, path)
        if not records:
            # no line carries column names; use the empty schema table
            return table_from_events([])
        return _attach_warnings(_records_to_table(names, records, lines))
    return _attach_warnings(_parse_csv(text, path))


def ingest_jsonl(path) -> EventTable:
    """Per-event JSON lines (one object keyed by column names) to a table.

    Missing schema columns are filled (counts from any array of the same
    collection, values from the object defaults, zero otherwise) and listed
    in ``table.warnings``; unknown keys are kept as extra columns.

    Raises
    ------
    ParseError
        With the line number (and column name for count mismatches).
    """
    from dataclasses import MISSING, fields as dc_fields

    path = Path(path)
    text = _read_text(path, _slurp(path))
    names, records, lines = _parse_jsonl(text, path)
    warnings: list[str] = []
    if not records:
        return table_from_events([])
    known = set(schema_columns(include_optional=True))
    filled: dict[str, int] = {}
    meta_defaults = {"nEvent": None, "runNum": 1, "evtNum": None, "lumisection": 1.0,
                     "fMET_PT": 0.0, "fMET_Eta": 0.0, "fMET_Phi": 0.0}
    for idx, rec in enumerate(records):
        for col in META_COLUMNS:
            if col.name not in rec:
                default = meta_defaults.get(col.name, False)
                rec[col.name] = idx + 1 if default is None else default
                filled[col.name] = filled.get(col.name, 0) + 1
        for coll in COLLECTIONS:
            defaults = {f.name: (f.default if f.default is not MISSING else 0) for f in dc_fields(coll.cls)}
            if coll.count not in rec:
                present = [rec[c.name] for c in coll.columns if c.name in rec]
                rec[coll.count] = len(present[0]) if present else 0
                filled[coll.count] = filled.get(coll.count, 0) + 1
            n = int(rec[coll.count])
            for col in coll.columns:
                if col.name in rec or col.optional:
                    continue
                rec[col.name] = [defaults[col.attr]] * n
                filled[col.name] = filled.get(col.name, 0) + 1
    extra = [k for k in names if k not in known]
    for k in extra:
        # extras have no schema default: empty array or NaN
        fill = [] if any(isinstance(r.get(k), list) for r in records) else math.nan
        for rec in records:
            if k not in rec:
                rec[k] = list(fill) if isinstance(fill, list) else fill
                filled[k] = filled.get(k, 0) + 1
    for name, count in filled.items():
        warnings.append(f"column {name!r} missing in {count} record(s); filled with defaults")
    for k in extra:
        warnings.append(f"unknown column {k!r} kept as an extra column")
    ordered = [c for c in schema_columns(include_optional=True) if all(c in r for r in records)]
    ordered += [k for k in names if k not in set(ordered)]
    t = _records_to_table(ordered, records, lines)
    t.warnings.extend(warnings)
    report = validate_table(t)
    t.warnings.extend(str(v) for v in report.violations)
    return t


# --------------------------------------------------------------------------
# benchmark harness
# --------------------------------------------------------------------------

BENCH_CSV_COLUMNS = ("format", "compression", "file_bytes", "write_ms", "read_ms", "n_events")


@dataclass
class BenchRow:
    format: str
    compression: str
    file_bytes: int | None
    write_ms: float | None
    read_ms: float | None
    n_events: int
    write_ms_raw: list[float] = field(default_factory=list)
    read_ms_raw: list[float] = field(default_factory=list)
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class BenchReport:
    rows: list[BenchRow]
    environment: dict[str, str] = field(default_factory=dict)

    def row(self, kind: str, compression: str) -> BenchRow:
        for r in self.rows:
            if r.format == kind and r.compression == compression:
                return r
        raise KeyError(f"{kind}+{compression}")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(BENCH_CSV_COLUMNS)
        for r in self.rows:
            if not r.ok:
                continue
            w.writerow([r.format, r.compression, r.file_bytes, f"{r.write_ms:.3f}",
                        f"{r.read_ms:.3f}", r.n_events])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"environment": self.environment,
                           "rows": [asdict(r) for r in self.rows]}, indent=2)


def _environment() -> dict[str, str]:
    return {
        "python": platform.python_version(),
        "platform": platform.platform(),
        "machine": platform.machine(),
        "numpy": np.__version__,
        "pyarrow": pa.__version__,
        "cpu_count": str(os.cpu_count()),
    }


def run_benchmark(t: EventTable, matrix: Iterable[FileFormat], repetitions: int, workdir) -> BenchReport:
    """Disk size plus median write and read wall-clock time per format.

    Each combination runs one discarded warm-up, then ``repetitions``
    timed write/read pairs.  A failing combination is reported with its
    error instead of aborting the run.  Temporary files are removed.
    """
    if repetitions < 3:
        raise DomainError("repetitions must be >= 3")
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    rows = []
    for fmt in matrix:
        if not isinstance(fmt, FileFormat):
            fmt = FileFormat.parse(str(fmt))
        target = workdir / f"bench-{fmt.kind}-{fmt.compression}{fmt.suffix}"
        writes, reads = [], []
        try:
            for rep in range(repetitions + 1):
                t0 = time.perf_counter()
                size = write_table(t, target, fmt)
                t1 = time.perf_counter()
                read_table(target, fmt)
                t2 = time.perf_counter()
                if rep:  # the first pass is a warm-up
                    writes.append((t1 - t0) * 1e3)
                    reads.append((t2 - t1) * 1e3)
            rows.append(BenchRow(fmt.kind, fmt.compression, size, statistics.median(writes),
                                 statistics.median(reads), t.n_rows, writes, reads))
        except Exception as exc:  # row-level failure is data, not an abort
            log.warning("benchmark %s failed: %s", fmt, exc)
            rows.append(BenchRow(fmt.kind, fmt.compression, None, None, None, t.n_rows,
                                 writes, reads, error=f"{type(exc).__name__}: {exc}"))
        finally:
            target.unlink(missing_ok=True)
    return BenchReport(rows, _environment())
