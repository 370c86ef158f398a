"""Regularly sampled demand series and hour-of-week profiles."""
from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone

import numpy as np

from .errors import DataError, ConfigError

HOUR = timedelta(hours=1)
DAY = timedelta(days=1)
WEEK = timedelta(weeks=1)
MINUTE = timedelta(minutes=1)
HOURS_PER_WEEK = 168

GRANULARITIES = {
    "minute": MINUTE,
    "hour": HOUR,
    "day": DAY,
    "week": WEEK,
}

# 1970-01-05 is a Monday; week buckets are anchored there.
WEEK_ANCHOR = datetime(1970, 1, 5, tzinfo=timezone.utc)
EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


def parse_granularity(value) -> timedelta:
    if isinstance(value, timedelta):
        return value
    key = str(value).strip().lower()
    if key in GRANULARITIES:
        return GRANULARITIES[key]
    for suffix, unit in (("min", 60), ("m", 60), ("h", 3600), ("d", 86400), ("w", 604800), ("s", 1)):
        if key.endswith(suffix) and key[: -len(suffix)].isdigit():
            return timedelta(seconds=int(key[: -len(suffix)]) * unit)
    raise ConfigError(f"unknown granularity {value!r}")


def granularity_name(td: timedelta) -> str:
    for name, g in GRANULARITIES.items():
        if g == td:
            return name
    return f"{int(td.total_seconds())}s"


def as_utc(ts) -> datetime:
    """Coerce a datetime/date/ISO string to an aware UTC datetime."""
    if isinstance(ts, str):
        ts = datetime.fromisoformat(ts.replace("Z", "+00:00"))
    elif isinstance(ts, np.datetime64):
        ts = EPOCH + timedelta(seconds=int(ts.astype("datetime64[s]").astype(np.int64)))
    elif isinstance(ts, date) and not isinstance(ts, datetime):
        ts = datetime(ts.year, ts.month, ts.day)
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def epoch_seconds(ts: datetime) -> int:
    return int((as_utc(ts) - EPOCH).total_seconds())


@dataclass(frozen=True, eq=False)
class DemandSeries:
    """Demand sampled every ``granularity`` starting at ``start`` (UTC)."""

    start: datetime
    granularity: timedelta
    values: np.ndarray
    unit_label: str = "instances"

    def __post_init__(self):
        start = as_utc(self.start)
        gran = parse_granularity(self.granularity)
        if gran <= timedelta(0):
            raise ConfigError("granularity must be positive")
        vals = np.array(self.values, dtype=np.float64).reshape(-1)
        if vals.size < 1:
            raise DataError("a demand series needs at least one value")
        if not np.all(np.isfinite(vals)):
            raise DataError("demand values must be finite")
        if np.any(vals < 0):
            raise DataError("demand values must be non-negative")
        vals.setflags(write=False)
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "granularity", gran)
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return self.values.shape[0]

    def __eq__(self, other):
        if not isinstance(other, DemandSeries):
            return NotImplemented
        return (
            self.start == other.start
            and self.granularity == other.granularity
            and self.unit_label == other.unit_label
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    @property
    def dt_hours(self) -> float:
        return self.granularity.total_seconds() / 3600.0

    @property
    def end(self) -> datetime:
        """Exclusive end of the covered span."""
        return self.start + len(self) * self.granularity

    @property
    def span_hours(self) -> float:
        return len(self) * self.dt_hours

    def epoch_times(self) -> np.ndarray:
        """Sample times as integer seconds since the Unix epoch."""
        step = int(self.granularity.total_seconds())
        return epoch_seconds(self.start) + step * np.arange(len(self), dtype=np.int64)

    def timestamps(self) -> np.ndarray:
        return self.epoch_times().astype("datetime64[s]")

    def index_of(self, ts) -> int:
        """Index of the sample starting at ``ts`` (may be out of range)."""
        delta = as_utc(ts) - self.start
        q, r = divmod(delta, self.granularity)
        if r:
            raise DataError(f"{ts} is not aligned to the series grid")
        return int(q)

    def slice_time(self, lo, hi) -> "DemandSeries":
        """Samples with ``lo <= t < hi``; both bounds must be grid-aligned."""
        i, j = self.index_of(lo), self.index_of(hi)
        if i < 0 or j > len(self) or i >= j:
            raise DataError(f"range [{lo}, {hi}) not inside series span")
        return self.with_values(self.values[i:j], start=self.start + i * self.granularity)

    def with_values(self, values, start=None) -> "DemandSeries":
        return DemandSeries(
            start=self.start if start is None else start,
            granularity=self.granularity,
            values=values,
            unit_label=self.unit_label,
        )

    def hour_of_week(self) -> np.ndarray:
        """Monday-based hour-of-week index (0..167) of every sample."""
        return hour_of_week_index(self.epoch_times())


def hour_of_week_index(epoch_secs) -> np.ndarray:
    secs = np.asarray(epoch_secs, dtype=np.int64)
    anchor = epoch_seconds(WEEK_ANCHOR)
    return ((secs - anchor) // 3600) % HOURS_PER_WEEK


@dataclass(frozen=True)
class HourOfWeekProfile:
    """168 factors indexed ``day_of_week * 24 + hour`` with Monday = 0."""

    factors: np.ndarray
    basis: str = "multiplicative"

    def __post_init__(self):
        f = np.array(self.factors, dtype=np.float64).reshape(-1)
        if f.shape[0] != HOURS_PER_WEEK:
            raise DataError(f"profile needs {HOURS_PER_WEEK} factors, got {f.shape[0]}")
        if np.any(f < 0) or not np.all(np.isfinite(f)):
            raise DataError("profile factors must be finite and non-negative")
        if self.basis not in ("multiplicative", "additive"):
            raise ConfigError(f"unknown profile basis {self.basis!r}")
        f.setflags(write=False)
        object.__setattr__(self, "factors", f)

    def normalized(self) -> "HourOfWeekProfile":
        m = float(np.mean(self.factors))
        if m <= 0:
            raise DataError("cannot normalise an all-zero profile")
        return HourOfWeekProfile(self.factors / m, self.basis)

    def at(self, day_of_week: int, hour: int) -> float:
        return float(self.factors[day_of_week * 24 + hour])


@dataclass(frozen=True)
class DateRange:
    """Inclusive range of UTC calendar days."""

    first: date
    last: date

    def __post_init__(self):
        first = _as_date(self.first)
        last = _as_date(self.last)
        if last < first:
            raise ConfigError(f"empty date range {first}..{last}")
        object.__setattr__(self, "first", first)
        object.__setattr__(self, "last", last)

    @property
    def lo(self) -> datetime:
        return datetime(self.first.year, self.first.month, self.first.day, tzinfo=timezone.utc)

    @property
    def hi(self) -> datetime:
        """Exclusive upper bound (midnight after ``last``)."""
        return datetime(self.last.year, self.last.month, self.last.day, tzinfo=timezone.utc) + DAY


def _as_date(d) -> date:
    if isinstance(d, datetime):
        return d.date()
    if isinstance(d, date):
        return d
    return date.fromisoformat(str(d))


@dataclass(frozen=True)
class RecurringWindow:
    """A month/day range repeating every year, e.g. Dec 24 - Jan 1.

    ``end`` may precede ``start`` in the calendar, meaning the window wraps
    over the new year.
    """

    start_month: int
    start_day: int
    end_month: int
    end_day: int
    name: str = field(default="")

    @classmethod
    def parse(cls, text: str, name: str = "") -> "RecurringWindow":
        try:
            a, b = text.split(":") if ":" in text else text.split("..")
            sm, sd = (int(x) for x in a.strip().split("-"))
            em, ed = (int(x) for x in b.strip().split("-"))
            date(2000, sm, sd), date(2000, em, ed)
        except ValueError:
            raise ConfigError(f"bad recurring window {text!r}, expected MM-DD:MM-DD") from None
        return cls(sm, sd, em, ed, name or text)

    def label(self) -> str:
        return f"{self.start_month:02d}-{self.start_day:02d}:{self.end_month:02d}-{self.end_day:02d}"

    def wraps(self) -> bool:
        return (self.end_month, self.end_day) < (self.start_month, self.start_day)

    def mask(self, epoch_secs) -> np.ndarray:
        """Boolean mask of which timestamps fall inside the window."""
        days = np.asarray(epoch_secs, dtype=np.int64).astype("datetime64[s]").astype("datetime64[D]")
        months = days.astype("datetime64[M]")
        month = months.astype(np.int64) % 12 + 1
        day = (days - months.astype("datetime64[D]")).astype(np.int64) + 1
        key = month * 100 + day
        lo = self.start_month * 100 + self.start_day
        hi = self.end_month * 100 + self.end_day
        if self.wraps():
            return (key >= lo) | (key <= hi)
        return (key >= lo) & (key <= hi)
