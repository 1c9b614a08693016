"""Reading real data tables and the on-disk dataset formats.

Two dataset formats are supported:

* binary (``.bssd``): magic ``BSSD``, little-endian header with format version,
  ``n``, ``p`` and flags, then the UTF-8 dataset and column names, then ``X``
  row-major and ``y`` as float64;
* text (``.csv``): ``#``-prefixed metadata lines, a header row of column names
  ending in the response, then one row per observation with floats written
  in shortest round-trip form.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataFormatError, InvalidArgumentError
from .linalg import Dataset, standardize_columns

MAGIC = b"BSSD"
VERSION = 1
_HEADER = struct.Struct("<4sHQQB")
_MISSING = {"", "na", "nan", "null", "?"}


@dataclass
class RawTable:
    """A parsed numeric table; ``response`` is the 0-based index of the response column."""

    column_names: list[str]
    values: np.ndarray
    response: int
    dropped_rows: int = 0
    source: str = field(default="", repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[1] != len(self.column_names):
            raise InvalidArgumentError("values must be a matrix with one column per name")
        if not 0 <= self.response < len(self.column_names):
            raise InvalidArgumentError(f"response column {self.response} out of range")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def predictor_names(self) -> list[str]:
        return [c for i, c in enumerate(self.column_names) if i != self.response]

    @property
    def predictors(self) -> np.ndarray:
        return np.delete(self.values, self.response, axis=1)

    @property
    def y(self) -> np.ndarray:
        return self.values[:, self.response]


def _resolve_column(names: list[str], selector) -> int:
    if isinstance(selector, int) or (isinstance(selector, str) and selector.strip().lstrip("-").isdigit()
                                      and selector.strip() not in names):
        idx = int(selector)
        if not 1 <= idx <= len(names):
            raise InvalidArgumentError(f"response index {idx} outside 1..{len(names)}")
        return idx - 1
    try:
        return names.index(str(selector))
    except ValueError:
        raise InvalidArgumentError(f"no column named {selector!r}; columns are {names}") from None


def read_delimited(path, response=-1) -> RawTable:
    """Parse a comma-separated file with a header row.

    ``response`` is a column name or a 1-based index; ``-1`` means the last
    column. Rows with missing cells are dropped and counted.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        rows, dropped = [], 0
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataFormatError(f"{path}: line {lineno} has {len(row)} fields, expected {len(header)}")
            if any(c.strip().lower() in _MISSING for c in row):
                dropped += 1
                continue
            vals = []
            for name, cell in zip(header, row):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise DataFormatError(
                        f"{path}: non-numeric value {cell!r} at line {lineno}, column {name!r}") from None
            rows.append(vals)
    resp = len(header) - 1 if response in (-1, None) else _resolve_column(header, response)
    values = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return RawTable(header, values, resp, dropped, str(path))


def quadratic_expand(table: RawTable) -> RawTable:
    """Append all squares and pairwise products of the predictors.

    Terms follow the order ``X1^2, X1X2, X2^2, X1X3, X2X3, X3^2, ...``: for each
    ``j`` the products ``Xi * Xj`` for ``i = 1..j``. ``m`` predictors become
    ``m + m(m+1)/2``.
    """
    base = table.predictors
    names = table.predictor_names
    cols, new_names = [], []
    for j in range(base.shape[1]):
        for i in range(j + 1):
            cols.append(base[:, i] * base[:, j])
            new_names.append(f"{names[i]}^2" if i == j else f"{names[i]}*{names[j]}")
    values = np.column_stack([base] + cols + [table.y])
    return RawTable(names + new_names + [table.column_names[table.response]], values,
                    values.shape[1] - 1, table.dropped_rows, table.source)


def to_dataset(table: RawTable, standardize_y: bool = False, name: str | None = None) -> Dataset:
    """Standardize the predictors (and optionally center and unit-normalize ``y``)."""
    if table.n < 2:
        raise InvalidArgumentError("need at least two observations to standardize")
    names = table.predictor_names
    X = standardize_columns(table.predictors, names)
    y = table.y.astype(float)
    if standardize_y:
        y = y - y.mean()
        norm = np.linalg.norm(y)
        if norm == 0:
            raise InvalidArgumentError("response is constant and cannot be standardized")
        y = y / norm
    return Dataset(X, y, name=name or Path(table.source).stem or "table", standardized=True,
                   column_names=tuple(names))


def _pack_str(s: str) -> bytes:
    b = s.encode("utf-8")
    return struct.pack("<I", len(b)) + b


def save_dataset(data: Dataset, path) -> Path:
    """Write ``data`` in the binary format, or as text when ``path`` ends in ``.csv``/``.txt``."""
    path = Path(path)
    if path.suffix.lower() in (".csv", ".txt"):
        return _save_text(data, path)
    names = data.column_names or tuple(f"x{j + 1}" for j in range(data.p))
    parts = [_HEADER.pack(MAGIC, VERSION, data.n, data.p, int(data.standardized)), _pack_str(data.name)]
    parts += [_pack_str(c) for c in names]
    parts.append(data.X.astype("<f8").tobytes(order="C"))
    parts.append(data.y.astype("<f8").tobytes())
    path.write_bytes(b"".join(parts))
    return path


def _save_text(data: Dataset, path: Path) -> Path:
    names = list(data.column_names or (f"x{j + 1}" for j in range(data.p)))
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(f"# bssd-text {VERSION}\n# name={data.name}\n# standardized={int(data.standardized)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names + ["y"])
        for row, yi in zip(data.X, data.y):
            w.writerow([repr(float(v)) for v in row] + [repr(float(yi))])
    return path


def load_dataset(path) -> Dataset:
    """Read a dataset written by :func:`save_dataset` (format detected from content)."""
    path = Path(path)
    raw = path.read_bytes()
    if raw[:4] == MAGIC:
        return _load_binary(raw, path)
    if raw.startswith(b"# bssd-text"):
        return _load_text(path)
    raise DataFormatError(f"{path}: unrecognized dataset format")


def _load_binary(raw: bytes, path: Path) -> Dataset:
    try:
        magic, version, n, p, flags = _HEADER.unpack_from(raw, 0)
        if version != VERSION:
            raise DataFormatError(f"{path}: unsupported format version {version}")
        off = _HEADER.size
        strings = []
        for _ in range(p + 1):
            (ln,) = struct.unpack_from("<I", raw, off)
            off += 4
            if off + ln > len(raw):
                raise DataFormatError(f"{path}: truncated header")
            strings.append(raw[off:off + ln].decode("utf-8"))
            off += ln
    except struct.error as exc:
        raise DataFormatError(f"{path}: corrupt header ({exc})") from None
    need = off + 8 * (n * p + n)
    if len(raw) != need:
        raise DataFormatError(f"{path}: expected {need} bytes, found {len(raw)} (truncated or corrupt)")
    X = np.frombuffer(raw, dtype="<f8", count=n * p, offset=off).reshape(n, p)
    y = np.frombuffer(raw, dtype="<f8", count=n, offset=off + 8 * n * p)
    return Dataset(X, y, name=strings[0], standardized=bool(flags & 1), column_names=tuple(strings[1:]))


def _load_text(path: Path) -> Dataset:
    meta = {}
    with path.open(encoding="utf-8") as fh:
        lines = fh.readlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            if val:
                meta[key.strip()] = val.strip()
            elif key.startswith("bssd-text") and key.split()[-1] != str(VERSION):
                raise DataFormatError(f"{path}: unsupported text format version {key.split()[-1]}")
        else:
            body.append(line)
    rows = list(csv.reader(body))
    if not rows:
        raise DataFormatError(f"{path}: missing header row")
    header, data_rows = rows[0], [r for r in rows[1:] if r]
    try:
        arr = np.array([[float(c) for c in r] for r in data_rows], dtype=float)
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from None
    if arr.ndim != 2 or arr.shape[1] != len(header):
        raise DataFormatError(f"{path}: ragged or truncated rows")
    return Dataset(arr[:, :-1], arr[:, -1], name=meta.get("name", path.stem),
                   standardized=meta.get("standardized", "0") == "1", column_names=tuple(header[:-1]))
