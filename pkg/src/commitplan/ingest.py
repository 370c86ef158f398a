"""CSV ingestion into :class:`DemandSeries` objects.

Column names come from a :class:`ColumnMapping`, usually loaded from a JSON
document::

    {"timestamp_col": "ts", "value_col": "demand",
     "dimension_cols": ["region", "machine_type"],
     "timestamp_format": "iso8601", "expected_granularity": "hour",
     "gap": {"mode": "fill_linear", "max_fill_run": 3}}

Row numbers in errors are 1-based file lines (the header is line 1).
"""
from __future__ import annotations

import csv
import json
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .errors import (
    ConfigError,
    DataError,
    DuplicateTimestamp,
    EmptySelection,
    GapTooLong,
    GranularityMismatch,
    NonUniformGranularity,
    ParseError,
)
from .series import EPOCH, DemandSeries, granularity_name, parse_granularity

GAP_MODES = ("reject", "fill_zero", "fill_linear")


@dataclass(frozen=True)
class GapPolicy:
    mode: str = "reject"
    max_fill_run: int = 0

    def __post_init__(self):
        if self.mode not in GAP_MODES:
            raise ConfigError(f"gap mode must be one of {GAP_MODES}")
        if int(self.max_fill_run) < 0:
            raise ConfigError("max_fill_run must be >= 0")


@dataclass(frozen=True)
class ColumnMapping:
    timestamp_col: str
    value_col: str
    dimension_cols: tuple = ()
    timestamp_format: str = "iso8601"
    expected_granularity: timedelta = timedelta(hours=1)
    # When set, the series value is max(0, value_col - returned_col).
    returned_col: str | None = None
    unit_label: str = "instances"
    gap: GapPolicy = field(default_factory=GapPolicy)

    def __post_init__(self):
        dims = tuple(self.dimension_cols)
        object.__setattr__(self, "dimension_cols", dims)
        object.__setattr__(self, "expected_granularity", parse_granularity(self.expected_granularity))
        if self.timestamp_col == self.value_col:
            raise ConfigError("timestamp_col and value_col must differ")
        if len(set(dims)) != len(dims):
            raise ConfigError("dimension_cols must be distinct")
        if self.timestamp_format not in ("iso8601", "epoch_seconds"):
            raise ConfigError(f"unknown timestamp_format {self.timestamp_format!r}")

    @classmethod
    def from_dict(cls, doc: dict) -> "ColumnMapping":
        try:
            gap = doc.get("gap") or {}
            return cls(
                timestamp_col=doc["timestamp_col"],
                value_col=doc["value_col"],
                dimension_cols=tuple(doc.get("dimension_cols", ())),
                timestamp_format=doc.get("timestamp_format", "iso8601"),
                expected_granularity=doc.get("expected_granularity", "hour"),
                returned_col=doc.get("returned_col"),
                unit_label=doc.get("unit_label", "instances"),
                gap=GapPolicy(gap.get("mode", "reject"), int(gap.get("max_fill_run", 0))),
            )
        except KeyError as exc:
            raise ConfigError(f"mapping is missing {exc.args[0]!r}") from None

    def to_dict(self) -> dict:
        doc = {
            "timestamp_col": self.timestamp_col,
            "value_col": self.value_col,
            "dimension_cols": list(self.dimension_cols),
            "timestamp_format": self.timestamp_format,
            "expected_granularity": granularity_name(self.expected_granularity),
            "unit_label": self.unit_label,
            "gap": {"mode": self.gap.mode, "max_fill_run": self.gap.max_fill_run},
        }
        if self.returned_col:
            doc["returned_col"] = self.returned_col
        return doc


def load_mapping(path) -> ColumnMapping:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read mapping {path}: {exc}") from None
    return ColumnMapping.from_dict(doc)


class SeriesMap(dict):
    """``dict`` of dimension tuple -> DemandSeries, plus load bookkeeping."""

    def __init__(self, *args, dimension_cols=(), rows_parsed=0, filled=None):
        super().__init__(*args)
        self.dimension_cols = tuple(dimension_cols)
        self.rows_parsed = rows_parsed
        self.filled = dict(filled or {})


def _parse_ts(text, fmt):
    if fmt == "epoch_seconds":
        return int(float(text))
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return int((ts - EPOCH).total_seconds())


def load_csv(path, mapping: ColumnMapping, gap: GapPolicy | None = None) -> SeriesMap:
    """Load one series per distinct dimension tuple from a CSV file."""
    gap = gap or mapping.gap
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"input file not found: {path}")
    rows = defaultdict(list)
    n_rows = 0
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        needed = [mapping.timestamp_col, mapping.value_col, *mapping.dimension_cols]
        if mapping.returned_col:
            needed.append(mapping.returned_col)
        missing = [c for c in needed if c not in header]
        if missing:
            raise ParseError(1, missing[0], "column not found in header")
        for rec in reader:
            line = reader.line_num
            try:
                ts = _parse_ts(rec[mapping.timestamp_col], mapping.timestamp_format)
            except (TypeError, ValueError):
                raise ParseError(line, mapping.timestamp_col, f"bad timestamp {rec[mapping.timestamp_col]!r}") from None
            value = _parse_value(rec, mapping.value_col, line)
            if mapping.returned_col:
                value = max(0.0, value - _parse_value(rec, mapping.returned_col, line))
            key = tuple(rec[c] for c in mapping.dimension_cols)
            rows[key].append((ts, value, line))
            n_rows += 1
    if not rows:
        raise DataError(f"{path} has no data rows")

    out = SeriesMap(dimension_cols=mapping.dimension_cols, rows_parsed=n_rows)
    for key in sorted(rows):
        series, filled = _build_series(rows[key], mapping, gap, key)
        out[key] = series
        out.filled[key] = filled
    return out


def _parse_value(rec, col, line):
    raw = rec[col]
    try:
        value = float(raw)
    except (TypeError, ValueError):
        raise ParseError(line, col, f"not a number: {raw!r}") from None
    if not np.isfinite(value) or value < 0:
        raise ParseError(line, col, f"demand must be finite and >= 0, got {raw!r}")
    return value


def _build_series(records, mapping, gap, key):
    records.sort(key=lambda r: r[0])
    times = np.array([r[0] for r in records], dtype=np.int64)
    values = np.array([r[1] for r in records], dtype=np.float64)
    step = int(mapping.expected_granularity.total_seconds())
    diffs = np.diff(times)
    dup = np.flatnonzero(diffs == 0)
    if dup.size:
        i = dup[0]
        raise DuplicateTimestamp(
            f"{key}: rows {records[i][2]} and {records[i + 1][2]} share a timestamp"
        )
    bad = np.flatnonzero(diffs % step != 0)
    if bad.size:
        i = bad[0]
        raise NonUniformGranularity(
            f"{key}: row {records[i + 1][2]} is off the {mapping.expected_granularity} grid"
        )
    runs = diffs // step - 1
    filled = int(runs.sum())
    if filled:
        worst = int(np.argmax(runs))
        if gap.mode == "reject" or runs[worst] > gap.max_fill_run:
            raise GapTooLong(
                f"{key}: {int(runs[worst])} missing samples before row {records[worst + 1][2]}"
                f" (policy {gap.mode}, max_fill_run={gap.max_fill_run})"
            )
        idx = (times - times[0]) // step
        full = np.zeros(int(idx[-1]) + 1)
        full[idx] = values
        if gap.mode == "fill_linear":
            missing = np.ones(full.shape[0], dtype=bool)
            missing[idx] = False
            full[missing] = np.interp(np.flatnonzero(missing), idx, values)
        values = full
    start = EPOCH + timedelta(seconds=int(times[0]))
    return (
        DemandSeries(start, mapping.expected_granularity, values, mapping.unit_label),
        filled,
    )


def _selector(series_map, select):
    if select is None:
        return lambda key: True
    if callable(select):
        return select
    dims = getattr(series_map, "dimension_cols", ())
    wanted = {}
    for name, allowed in select.items():
        pos = dims.index(name) if isinstance(name, str) else int(name)
        wanted[pos] = {allowed} if isinstance(allowed, str) else set(allowed)
    return lambda key: all(key[p] in vals for p, vals in wanted.items())


def aggregate(series_map, select=None, agg: str = "sum") -> DemandSeries:
    """Pointwise sum of the selected series over their common span.

    ``select`` is ``None`` (everything), a predicate on the dimension tuple,
    or a dict of dimension name -> allowed value(s).
    """
    if agg != "sum":
        raise ConfigError("only agg='sum' is supported")
    keep = _selector(series_map, select)
    chosen = [series_map[k] for k in sorted(series_map) if keep(k)]
    if not chosen:
        raise EmptySelection("no series matched the selection")
    gran = chosen[0].granularity
    if any(s.granularity != gran for s in chosen):
        raise GranularityMismatch("selected series have different granularities")
    lo = max(s.start for s in chosen)
    hi = min(s.end for s in chosen)
    if hi <= lo:
        raise DataError("selected series do not overlap in time")
    total = None
    for s in chosen:
        if (lo - s.start) % gran:
            raise GranularityMismatch("selected series sit on offset time grids")
        part = s.slice_time(lo, hi).values
        total = part.copy() if total is None else total + part
    return DemandSeries(lo, gran, total, chosen[0].unit_label)
