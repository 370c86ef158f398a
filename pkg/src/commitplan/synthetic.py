"""Synthetic demand generators for tests, benchmarks and demos."""
from __future__ import annotations

import csv
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .series import HOUR, HOURS_PER_WEEK, MINUTE, DemandSeries, RecurringWindow, hour_of_week_index


def business_week_profile(peak: float = 1.45, night: float = 1.0, weekend: float = 0.85) -> np.ndarray:
    """168-slot profile: busy weekday business hours, quiet nights and weekends."""
    hours = np.arange(24)
    day = night + (peak - night) * np.clip(np.sin(np.pi * (hours - 6) / 14), 0, None)
    week = np.concatenate([day] * 5 + [np.full(24, weekend)] * 2)
    return week / week.mean()


def fleet_demand(
    start=datetime(2021, 1, 4, tzinfo=timezone.utc),
    weeks: int = 156,
    level: float = 100.0,
    annual_growth: float = 0.58,
    holiday_factor: float = 0.92,
    noise: float = 0.02,
    seed: int = 0,
    profile: np.ndarray | None = None,
) -> DemandSeries:
    """Hourly aggregate demand with trend, weekly cycle, holiday dip and noise."""
    rng = np.random.default_rng(seed)
    n = weeks * HOURS_PER_WEEK
    secs = int(start.timestamp()) + 3600 * np.arange(n, dtype=np.int64)
    prof = business_week_profile() if profile is None else profile
    trend = level * (1 + annual_growth) ** (np.arange(n) / (52 * HOURS_PER_WEEK))
    hol = np.where(RecurringWindow(12, 24, 1, 1).mask(secs), holiday_factor, 1.0)
    vals = trend * prof[hour_of_week_index(secs)] * hol
    if noise:
        vals = vals * np.exp(rng.normal(0.0, noise, n))
    return DemandSeries(start, HOUR, vals)


def write_fleet_csv(
    path,
    regions: int = 4,
    machine_types: int = 12,
    weeks: int = 20,
    start=datetime(2023, 10, 2, tzinfo=timezone.utc),
    seed: int = 0,
) -> Path:
    """Write a long-format CSV with one hourly series per (region, machine type)."""
    rng = np.random.default_rng(seed)
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", "region", "machine_type", "demand"])
        for r in range(regions):
            for m in range(machine_types):
                s = fleet_demand(
                    start=start,
                    weeks=weeks,
                    level=float(rng.uniform(0.2, 3.0)),
                    annual_growth=float(rng.uniform(0.1, 0.9)),
                    seed=int(rng.integers(1 << 31)),
                )
                stamps = s.timestamps()
                for ts, v in zip(stamps, s.values):
                    w.writerow([f"{ts}Z", f"region-{r}", f"type-{m:02d}", f"{v:.6f}"])
    return path


def mixed_series(rng: np.random.Generator, n: int = 336) -> np.ndarray:
    """Random hourly-like series mixing sinusoids, steps, spikes and noise."""
    t = np.arange(n)
    kind = rng.integers(4)
    base = rng.uniform(20, 100)
    amp = rng.uniform(0.05, 0.5) * base
    vals = base + amp * np.sin(2 * np.pi * t / 24 + rng.uniform(0, 2 * np.pi))
    if kind >= 1:
        vals += 0.5 * amp * np.sin(2 * np.pi * t / 168 + rng.uniform(0, 2 * np.pi))
    if kind >= 2:
        vals += rng.normal(0, rng.uniform(0.01, 0.2) * base, n)
    if kind == 3:
        spikes = rng.random(n) < 0.03
        vals += spikes * rng.uniform(0.5, 1.5) * base
    return np.clip(vals, 0.0, None)


def spiky_pool_trace(
    start=datetime(2024, 3, 4, tzinfo=timezone.utc),
    hours: int = 72,
    base: float = 20.0,
    spike: float = 0.6,
    noise: float = 2.0,
    seed: int = 0,
) -> DemandSeries:
    """Per-minute net VM demand with a spike at the top of every hour."""
    rng = np.random.default_rng(seed)
    n = hours * 60
    minute = np.arange(n) % 60
    bump = np.where(minute == 0, spike * base, 0.0) + np.where(minute == 1, 0.5 * spike * base, 0.0)
    vals = np.round(np.clip(base + bump + rng.normal(0, noise, n), 0, None))
    return DemandSeries(start, MINUTE, vals)


def write_pool_csv(path, hours: int = 72, seed: int = 0) -> Path:
    """Write per-minute ``requested``/``returned`` columns whose net is a spiky trace."""
    rng = np.random.default_rng(seed)
    net = spiky_pool_trace(hours=hours, seed=seed)
    returned = np.round(rng.uniform(0, 5, len(net)))
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", "requested", "returned"])
        for ts, v, r in zip(net.timestamps(), net.values, returned):
            w.writerow([f"{ts}Z", f"{v + r:.0f}", f"{r:.0f}"])
    return path
