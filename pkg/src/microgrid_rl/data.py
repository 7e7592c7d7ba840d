"""Wind, price and load series: CSV ingestion, synthesis and the scenario bundle.

CSV schema for hourly series: a header row, then ``timestamp,value`` rows
with ISO-8601 timestamps one hour apart and a decimal point. Wind files use
the header ``timestamp,kwh``, price files ``timestamp,price``. Household
profiles use ``hour,kwh`` with hours 0..23.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

HOURS = 24
EPOCH = datetime(2018, 1, 1)


class DataError(ValueError):
    """Base class for malformed input series."""


class MissingFileError(DataError, FileNotFoundError):
    pass


class MalformedRowError(DataError):
    pass


class CadenceError(DataError):
    pass


class NegativeValueError(DataError):
    pass


class LengthError(DataError):
    pass


@dataclass(frozen=True)
class WindTrace:
    generation: np.ndarray  # gross kWh per hour
    beta: float = 1.0

    def __post_init__(self):
        g = np.asarray(self.generation, dtype=float)
        object.__setattr__(self, "generation", g)
        if g.ndim != 1 or g.size == 0 or g.size % HOURS:
            raise LengthError(f"wind trace length {g.size} is not a positive multiple of {HOURS}")
        if np.any(g < 0):
            raise NegativeValueError("wind generation must be non-negative")
        if not 0 <= self.beta <= 1:
            raise ValueError("beta must lie in [0, 1]")

    @property
    def length(self) -> int:
        return self.generation.size

    @property
    def days(self) -> int:
        return self.length // HOURS

    def available(self, hour_index: int) -> float:
        return wind_power(float(self.generation[hour_index]), self.beta)


def wind_power(gross: float, beta: float) -> float:
    if gross < 0:
        raise ValueError("gross generation must be non-negative")
    if not 0 <= beta <= 1:
        raise ValueError("beta must lie in [0, 1]")
    return beta * gross


def _read_hourly(path, column: str) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise MissingFileError(f"no such file: {path}")
    values = []
    prev = None
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["timestamp", column]:
            raise MalformedRowError(f"{path}: expected header 'timestamp,{column}', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise MalformedRowError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
            try:
                ts = datetime.fromisoformat(row[0].strip())
                value = float(row[1])
            except ValueError as exc:
                raise MalformedRowError(f"{path}:{lineno}: {exc}") from exc
            if not np.isfinite(value):
                raise MalformedRowError(f"{path}:{lineno}: non-finite value")
            if value < 0:
                raise NegativeValueError(f"{path}:{lineno}: negative value {value}")
            if prev is not None and ts - prev != timedelta(hours=1):
                raise CadenceError(f"{path}:{lineno}: timestamp {ts} is not one hour after {prev}")
            prev = ts
            values.append(value)
    arr = np.array(values, dtype=float)
    if arr.size == 0 or arr.size % HOURS:
        raise LengthError(f"{path}: {arr.size} rows is not a positive multiple of {HOURS}")
    return arr


def _write_hourly(path, column: str, values, start: datetime = EPOCH) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", column])
        for i, v in enumerate(values):
            w.writerow([(start + timedelta(hours=i)).isoformat(), repr(float(v))])


def load_wind_csv(path, beta: float = 1.0) -> WindTrace:
    return WindTrace(_read_hourly(path, "kwh"), beta)


def write_wind_csv(trace: WindTrace, path) -> None:
    _write_hourly(path, "kwh", trace.generation)


def load_price_csv(path) -> np.ndarray:
    prices = _read_hourly(path, "price")
    if np.any(prices <= 0):
        raise NegativeValueError(f"{path}: market prices must be positive")
    return prices


def write_price_csv(prices, path) -> None:
    _write_hourly(path, "price", prices)


def load_profile_csv(path) -> np.ndarray:
    """Household base-load profile: 24 rows of ``hour,kwh``."""
    path = Path(path)
    if not path.exists():
        raise MissingFileError(f"no such file: {path}")
    out = np.full(HOURS, np.nan)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip().lower() for f in reader.fieldnames] != ["hour", "kwh"]:
            raise MalformedRowError(f"{path}: expected header 'hour,kwh'")
        for lineno, row in enumerate(reader, start=2):
            try:
                hour, kwh = int(row["hour"]), float(row["kwh"])
            except (TypeError, ValueError) as exc:
                raise MalformedRowError(f"{path}:{lineno}: {exc}") from exc
            if not 0 <= hour < HOURS:
                raise MalformedRowError(f"{path}:{lineno}: hour {hour} out of range")
            if kwh < 0:
                raise NegativeValueError(f"{path}:{lineno}: negative load")
            out[hour] = kwh
    if np.isnan(out).any():
        raise LengthError(f"{path}: profile must cover all 24 hours")
    return out


def synth_wind(days: int, seed: int, mean_kwh: float, variability: float = 1.0) -> WindTrace:
    """Seeded synthetic wind generation.

    Each day draws a lognormal weather level; within the day a weak diurnal
    swing is overlaid with AR(1) gusts. Negative excursions are clipped and
    the whole trace is rescaled so its mean is exactly ``mean_kwh``.
    """
    if days < 1:
        raise ValueError("days must be at least 1")
    rng = np.random.default_rng(seed)
    n = days * HOURS
    levels = np.repeat(rng.lognormal(0.0, 0.5 * variability, size=days), HOURS)
    hours = np.arange(n) % HOURS
    diurnal = 1.0 + 0.2 * variability * np.sin(2 * np.pi * (hours - 9) / HOURS)
    gust = np.empty(n)
    e = 0.0
    for t, z in enumerate(rng.standard_normal(n)):
        e = 0.8 * e + 0.25 * variability * z
        gust[t] = e
    shape = np.clip(levels * (diurnal + gust), 0.0, None)
    if shape.sum() == 0:
        shape = np.ones(n)
    return WindTrace(shape * (mean_kwh / shape.mean()))


def synth_market_price(days: int, seed: int, base: float = 4.5, noise: float = 0.05) -> np.ndarray:
    """Two-peak diurnal tariff: a midday maximum near 11-12 h, a smaller
    evening peak and a night valley, scaled per day by seeded noise."""
    rng = np.random.default_rng(seed)
    h = np.arange(HOURS)
    profile = (
        base
        + 2.5 * np.exp(-0.5 * ((h - 11.5) / 2.0) ** 2)
        + 1.5 * np.exp(-0.5 * ((h - 18.5) / 1.5) ** 2)
        - 1.0 * np.exp(-0.5 * ((h - 23.0) / 2.5) ** 2)
        - 1.0 * np.exp(-0.5 * ((h + 1.0) / 2.5) ** 2)
    )
    scale = 1.0 + noise * rng.standard_normal(days)
    return np.concatenate([profile * max(s, 0.5) for s in scale])


def outdoor_temperature(days: int, seed: int, mean: float, amplitude: float, day_jitter: float) -> np.ndarray:
    """Hourly outdoor temperature, coldest before dawn and warmest mid-afternoon."""
    rng = np.random.default_rng(seed)
    h = np.arange(HOURS)
    shape = amplitude * np.sin(2 * np.pi * (h - 9) / HOURS)
    offsets = day_jitter * rng.standard_normal(days)
    return np.concatenate([mean + o + shape for o in offsets])


@dataclass(frozen=True)
class Scenario:
    wind: WindTrace
    market_price: np.ndarray
    outdoor_temp: np.ndarray

    def __post_init__(self):
        n = self.wind.length
        if self.market_price.size != n or self.outdoor_temp.size != n:
            raise LengthError("wind, price and temperature series must have equal length")

    @property
    def days(self) -> int:
        return self.wind.days


SHIPPED_WIND = "wind_30d.csv"
SHIPPED_PRICE = "price_30d.csv"


def shipped_path(name: str) -> Path:
    return Path(__file__).with_name("data") / name


def load_scenario(env_cfg) -> Scenario:
    wind_path = env_cfg.wind_csv or shipped_path(SHIPPED_WIND)
    price_path = env_cfg.price_csv or shipped_path(SHIPPED_PRICE)
    wind = load_wind_csv(wind_path, env_cfg.wind_beta)
    prices = load_price_csv(price_path)
    if prices.size != wind.length:
        raise LengthError(f"price series has {prices.size} hours, wind has {wind.length}")
    temps = outdoor_temperature(
        wind.days, env_cfg.seed + 7919, env_cfg.outdoor_temp_mean,
        env_cfg.outdoor_temp_amplitude, env_cfg.outdoor_temp_day_jitter,
    )
    return Scenario(wind, prices, temps)


# seeds and levels that generated the shipped files
SCENARIO_DAYS = 30
SCENARIO_WIND_SEED = 2018
SCENARIO_WIND_MEAN = 150.0
SCENARIO_PRICE_SEED = 2019


def write_shipped_scenario(directory) -> None:
    directory = Path(directory)
    write_wind_csv(synth_wind(SCENARIO_DAYS, SCENARIO_WIND_SEED, SCENARIO_WIND_MEAN), directory / SHIPPED_WIND)
    write_price_csv(synth_market_price(SCENARIO_DAYS, SCENARIO_PRICE_SEED), directory / SHIPPED_PRICE)
