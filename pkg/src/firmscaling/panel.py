"""Firm panel data model, delimited-file ingestion and classification/year filters.

A :class:`FirmPanel` is an immutable, column-oriented table of firm-year
records.  Size measures that are absent in the source are stored as ``NaN``
and never coerced to zero.
"""
from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass
from typing import BinaryIO, Iterator, Mapping

import numpy as np

from .exceptions import PanelFormatError

MEASURES = ("sales", "employees", "assets")
MANDATORY_FIELDS = ("firm_id", "year")
LOGICAL_FIELDS = ("firm_id", "year", "classification") + MEASURES
YEAR_BOUNDS = (1950, 2100)
MISSING_TOKENS = frozenset({"", "NA", "na", "NaN", "nan"})

DEFAULT_SCHEMA = {name: name for name in LOGICAL_FIELDS}


def check_code(code: str, *, what: str = "classification code") -> str:
    """Return ``code`` if it is 2, 4, 6 or 8 decimal digits, else raise ValueError."""
    code = str(code).strip()
    if len(code) not in (2, 4, 6, 8) or not code.isdigit():
        raise ValueError(f"invalid {what} {code!r}: expected 2, 4, 6 or 8 decimal digits")
    return code


def check_measure(measure: str) -> str:
    if measure not in MEASURES:
        raise ValueError(f"unknown size measure {measure!r}; expected one of {MEASURES}")
    return measure


def parse_schema(text: str | Mapping[str, str] | None) -> dict[str, str]:
    """Build a logical-field -> column-name mapping.

    Accepts ``None`` (identity mapping), a mapping, or ``"firm_id=id,year=fyear"``
    text. Unmentioned fields keep their identity names.
    """
    schema = dict(DEFAULT_SCHEMA)
    if text is None:
        return schema
    if isinstance(text, Mapping):
        items = text.items()
    else:
        items = []
        for part in str(text).split(","):
            part = part.strip()
            if not part:
                continue
            if "=" not in part:
                raise ValueError(f"schema entry {part!r} is not of the form field=column")
            key, _, value = part.partition("=")
            items.append((key.strip(), value.strip()))
    for key, value in items:
        if key not in LOGICAL_FIELDS:
            raise ValueError(f"unknown schema field {key!r}; expected one of {LOGICAL_FIELDS}")
        schema[key] = value
    return schema


@dataclass(frozen=True)
class FirmRecord:
    firm_id: str
    year: int
    classification: str
    sales: float | None = None
    employees: float | None = None
    assets: float | None = None


@dataclass(frozen=True)
class Rejection:
    """A source row that did not make it into the panel."""

    line: int
    reason: str  # "malformed", "duplicate" or "negative"
    detail: str
    key: tuple[str, int] | None = None


@dataclass(frozen=True)
class ValidationReport:
    record_count: int
    accepted_count: int
    firm_count: int
    year_span: tuple[int, int] | None
    duplicate_keys: list[tuple[str, int]]
    negative_values: list[tuple[str, int, str]]
    malformed_lines: list[int]
    missing_measure_counts: dict[str, int]

    @property
    def rejected_count(self) -> int:
        return self.record_count - self.accepted_count

    def to_text(self) -> str:
        span = "-" if self.year_span is None else f"{self.year_span[0]}:{self.year_span[1]}"
        lines = [
            f"record_count\t{self.record_count}",
            f"accepted\t{self.accepted_count}",
            f"rejected\t{self.rejected_count}",
            f"firm_count\t{self.firm_count}",
            f"year_span\t{span}",
            f"duplicate_keys\t{len(self.duplicate_keys)}",
            f"negative_values\t{len(self.negative_values)}",
            f"malformed_rows\t{len(self.malformed_lines)}",
        ]
        for name in MEASURES:
            lines.append(f"missing_{name}\t{self.missing_measure_counts.get(name, 0)}")
        return "\n".join(lines) + "\n"


def _as_str_array(values) -> np.ndarray:
    arr = np.asarray(list(values) if not isinstance(values, np.ndarray) else values)
    if arr.size == 0:
        return np.zeros(0, dtype="<U1")
    return arr.astype(str)


class FirmPanel:
    """Immutable longitudinal table of firm-year records.

    Columns are numpy arrays sorted by ``(firm_id, year)``; absent size
    measures are ``NaN``. Construct through :meth:`from_arrays`,
    :meth:`from_records` or :func:`load_panel`.
    """

    __slots__ = ("_cols", "provenance", "size_measure_default", "rejected")

    def __init__(self, cols: dict[str, np.ndarray], provenance: str = "",
                 size_measure_default: str = "sales", rejected: tuple[Rejection, ...] = ()):
        check_measure(size_measure_default)
        n = len(cols["firm_id"])
        for name in LOGICAL_FIELDS:
            if len(cols[name]) != n:
                raise ValueError(f"column {name!r} has length {len(cols[name])}, expected {n}")
        order = np.lexsort((cols["year"], cols["firm_id"]))
        cols = {k: v[order] for k, v in cols.items()}
        if n > 1:
            same = (cols["firm_id"][1:] == cols["firm_id"][:-1]) & (cols["year"][1:] == cols["year"][:-1])
            if same.any():
                i = int(np.flatnonzero(same)[0])
                raise ValueError(f"duplicate (firm_id, year) key {(str(cols['firm_id'][i]), int(cols['year'][i]))}")
        for name in MEASURES:
            if np.any(cols[name] < 0):
                raise ValueError(f"negative values in measure {name!r}")
        for arr in cols.values():
            arr.setflags(write=False)
        object.__setattr__(self, "_cols", cols)
        object.__setattr__(self, "provenance", provenance)
        object.__setattr__(self, "size_measure_default", size_measure_default)
        object.__setattr__(self, "rejected", tuple(rejected))

    def __setattr__(self, name, value):
        raise AttributeError("FirmPanel is immutable")

    @classmethod
    def from_arrays(cls, firm_id, year, classification=None, sales=None, employees=None,
                    assets=None, *, provenance: str = "", size_measure_default: str = "sales") -> FirmPanel:
        firm_id = _as_str_array(firm_id)
        n = len(firm_id)
        year = np.asarray(year, dtype=np.int64).reshape(n)
        if classification is None:
            classification = np.full(n, "", dtype="<U1")
        cols = {
            "firm_id": firm_id,
            "year": year,
            "classification": _as_str_array(classification).reshape(n),
        }
        for name, values in zip(MEASURES, (sales, employees, assets)):
            if values is None:
                cols[name] = np.full(n, np.nan)
            elif isinstance(values, np.ndarray):
                cols[name] = values.astype(float).reshape(n)
            else:
                cols[name] = np.array([np.nan if v is None else v for v in values], dtype=float).reshape(n)
        return cls(cols, provenance=provenance, size_measure_default=size_measure_default)

    @classmethod
    def from_records(cls, records, *, provenance: str = "", size_measure_default: str = "sales") -> FirmPanel:
        records = list(records)
        return cls.from_arrays(
            [r.firm_id for r in records],
            [r.year for r in records],
            [r.classification for r in records],
            [r.sales for r in records],
            [r.employees for r in records],
            [r.assets for r in records],
            provenance=provenance,
            size_measure_default=size_measure_default,
        )

    @classmethod
    def empty(cls, provenance: str = "") -> FirmPanel:
        return cls.from_arrays([], [], provenance=provenance)

    def column(self, name: str) -> np.ndarray:
        """Read-only view of one column (``firm_id``, ``year``, ``classification`` or a measure)."""
        return self._cols[name]

    def __len__(self) -> int:
        return len(self._cols["firm_id"])

    def __iter__(self) -> Iterator[FirmRecord]:
        c = self._cols
        for i in range(len(self)):
            sizes = [None if math.isnan(c[m][i]) else float(c[m][i]) for m in MEASURES]
            yield FirmRecord(str(c["firm_id"][i]), int(c["year"][i]), str(c["classification"][i]), *sizes)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FirmPanel):
            return NotImplemented
        return all(np.array_equal(self._cols[k], other._cols[k], equal_nan=k in MEASURES)
                   for k in LOGICAL_FIELDS)

    __hash__ = None

    def __repr__(self) -> str:
        return f"FirmPanel(records={len(self)}, firms={self.firm_count}, provenance={self.provenance!r})"

    @property
    def firm_count(self) -> int:
        return int(len(np.unique(self._cols["firm_id"])))

    @property
    def year_span(self) -> tuple[int, int] | None:
        years = self._cols["year"]
        if len(years) == 0:
            return None
        return int(years.min()), int(years.max())

    def _subset(self, mask: np.ndarray, note: str) -> FirmPanel:
        cols = {k: v[mask] for k, v in self._cols.items()}
        prov = f"{self.provenance}; {note}" if self.provenance else note
        return FirmPanel(cols, provenance=prov, size_measure_default=self.size_measure_default)


def _parse_size(text: str) -> float:
    text = text.strip()
    if text in MISSING_TOKENS:
        return math.nan
    value = float(text)
    if math.isnan(value) or math.isinf(value):
        raise ValueError(f"non-finite size {text!r}")
    return value


def _read_text(source) -> str:
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            data = fh.read()
    elif isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    else:
        data = source.read()
    if isinstance(data, str):
        return data
    try:
        return data.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise PanelFormatError(f"panel source is not valid UTF-8: {exc}") from exc


def load_panel(source: BinaryIO | bytes | str | os.PathLike, schema=None, *,
               provenance: str | None = None, size_measure_default: str = "sales") -> FirmPanel:
    """Parse a delimited firm panel.

    The delimiter (tab or comma) is detected from the header line. Rows with
    a duplicate ``(firm_id, year)`` key or a negative size are rejected and
    logged on ``panel.rejected``; other unparseable rows count as malformed.
    More than 50% malformed rows is a hard error.

    Parameters
    ----------
    source : binary stream, bytes, or path
        UTF-8 delimited text with a header row.
    schema : mapping or "field=column,..." text, optional
        Logical field to column-name mapping; see :func:`parse_schema`.
    """
    schema = parse_schema(schema)
    try:
        text = _read_text(source)
    except OSError as exc:
        raise PanelFormatError(f"cannot read panel source: {exc}") from exc
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise PanelFormatError("panel source is empty or lacks a header row")
    delimiter = "\t" if "\t" in lines[0] else ","
    reader = csv.reader(io.StringIO(text), delimiter=delimiter)
    header = [h.strip() for h in next(reader)]
    index = {}
    for logical in LOGICAL_FIELDS:
        col = schema[logical]
        if col in header:
            index[logical] = header.index(col)
        elif logical in MANDATORY_FIELDS:
            raise PanelFormatError(f"missing mandatory column {col!r} for field {logical!r}")

    ids, years, codes = [], [], []
    sizes: dict[str, list[float]] = {m: [] for m in MEASURES}
    seen: set[tuple[str, int]] = set()
    rejected: list[Rejection] = []
    n_rows = 0
    for row in reader:
        line = reader.line_num
        if not any(cell.strip() for cell in row):
            continue
        n_rows += 1
        try:
            if len(row) != len(header):
                raise ValueError(f"expected {len(header)} fields, found {len(row)}")
            firm = row[index["firm_id"]].strip()
            if not firm:
                raise ValueError("empty firm_id")
            year = int(row[index["year"]].strip())
            if not YEAR_BOUNDS[0] <= year <= YEAR_BOUNDS[1]:
                raise ValueError(f"year {year} outside {YEAR_BOUNDS}")
            code = ""
            if "classification" in index:
                code = row[index["classification"]].strip()
                if code not in MISSING_TOKENS:
                    check_code(code)
                else:
                    code = ""
            values = {m: (_parse_size(row[index[m]]) if m in index else math.nan) for m in MEASURES}
        except ValueError as exc:
            rejected.append(Rejection(line, "malformed", str(exc)))
            continue
        key = (firm, year)
        negative = [m for m, v in values.items() if v < 0]
        if negative:
            rejected.append(Rejection(line, "negative", ",".join(negative), key))
            continue
        if key in seen:
            rejected.append(Rejection(line, "duplicate", "repeated (firm_id, year)", key))
            continue
        seen.add(key)
        ids.append(firm)
        years.append(year)
        codes.append(code)
        for m in MEASURES:
            sizes[m].append(values[m])

    malformed = [r for r in rejected if r.reason == "malformed"]
    if n_rows and len(malformed) * 2 > n_rows:
        first = malformed[0]
        raise PanelFormatError(
            f"{len(malformed)} of {n_rows} rows are malformed; first offending line {first.line}: {first.detail}"
        )
    if provenance is None:
        provenance = os.fspath(source) if isinstance(source, (str, os.PathLike)) else "stream"
    panel = FirmPanel.from_arrays(ids, years, codes, sizes["sales"], sizes["employees"], sizes["assets"],
                                  provenance=provenance, size_measure_default=size_measure_default)
    return FirmPanel(panel._cols, provenance=panel.provenance, size_measure_default=size_measure_default,
                     rejected=tuple(rejected))


def _fmt_size(value: float) -> str:
    return "" if math.isnan(value) else repr(float(value))


def dump_panel(panel: FirmPanel, fh, delimiter: str = "\t") -> None:
    """Write ``panel`` as delimited text with the default column names.

    Floats are written with ``repr`` so a reload reproduces every value bit for bit.
    """
    writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
    writer.writerow(LOGICAL_FIELDS)
    c = panel._cols
    for i in range(len(panel)):
        writer.writerow([c["firm_id"][i], int(c["year"][i]), c["classification"][i]]
                        + [_fmt_size(c[m][i]) for m in MEASURES])


def panel_to_bytes(panel: FirmPanel, delimiter: str = "\t") -> bytes:
    buf = io.StringIO()
    dump_panel(panel, buf, delimiter=delimiter)
    return buf.getvalue().encode("utf-8")


def validate_panel(panel: FirmPanel) -> ValidationReport:
    """Summarise a panel and the rows rejected while loading it. The panel is not modified."""
    c = panel._cols
    missing = {m: int(np.isnan(c[m]).sum()) for m in MEASURES}
    return ValidationReport(
        record_count=len(panel) + len(panel.rejected),
        accepted_count=len(panel),
        firm_count=panel.firm_count,
        year_span=panel.year_span,
        duplicate_keys=[r.key for r in panel.rejected if r.reason == "duplicate"],
        negative_values=[(r.key[0], r.key[1], r.detail) for r in panel.rejected if r.reason == "negative"],
        malformed_lines=[r.line for r in panel.rejected if r.reason == "malformed"],
        missing_measure_counts=missing,
    )


def filter_classification(panel: FirmPanel, prefix: str) -> FirmPanel:
    """Keep records whose classification code starts with ``prefix`` (2/4/6/8 digits)."""
    prefix = check_code(prefix, what="classification prefix")
    codes = panel.column("classification")
    mask = np.char.startswith(codes.astype(str), prefix) if len(codes) else np.zeros(0, dtype=bool)
    return panel._subset(mask, f"prefix={prefix}")


def filter_years(panel: FirmPanel, start: int, end: int) -> FirmPanel:
    """Keep records with ``start <= year <= end``."""
    if start > end:
        raise ValueError(f"year range start {start} is after end {end}")
    years = panel.column("year")
    return panel._subset((years >= start) & (years <= end), f"years={start}:{end}")
