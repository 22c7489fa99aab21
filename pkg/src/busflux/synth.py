"""Scenario generator with planted ground truth.

Builds probe-frame traces in which every emitted device is either a
genuine waiting passenger (a "trip": two bounded dwells at two different
stops the same day) or a member of exactly one noise class, each class
constructed to be removed by exactly one cleaning stage:

  randomized    locally-administered MAC, otherwise a valid trip
  single_stop   one stop all day, otherwise valid dwell
  out_of_rssi   valid trip shape, every frame outside the keep band
  short_dwell   both dwells shorter than the minimum duration
  long_dwell    both dwells longer than the maximum duration

Because membership is exact, the cleaning report's per-stage counters can
be checked against the planted counts with equality rather than tolerance,
and the surviving device set must equal the planted passenger set.

Per-day RNG substreams make a day's output independent of how many days
follow it, so extending the date range appends data without disturbing the
prefix.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from typing import Union

import numpy as np

from .aggregation import HourlyCount
from .cleaning import CleaningConfig
from .errors import ConfigError, ParseError
from .features import FeatureMatrix
from .frames import DeviceId, FrameRecord, MacAddress, anonymize
from .weather import WeatherObservation

_EPOCH = datetime(1970, 1, 1)

DEFAULT_STOPS = tuple(f"stop-{i:02d}" for i in range(1, 8))

# Expected departures per hour relative to base_rate: quiet nights, a
# morning and an evening peak. Hours 21-23 stay zero so both dwells of a
# trip always finish before midnight UTC.
DEFAULT_HOUR_SHAPE = (
    0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
    0.4, 1.2, 1.8, 1.2, 0.7, 0.6,
    0.8, 0.7, 0.6, 0.8, 1.3, 1.8,
    1.4, 0.8, 0.5, 0.0, 0.0, 0.0,
)

LAST_TRIP_START_HOUR = 20


@dataclass(frozen=True, slots=True)
class DemandModel:
    """Multiplicative intensity: base x stop x hour shape x weekday x weather."""

    base_rate: float = 2.0
    stop_weights: tuple[float, ...] | None = None
    hour_shape: tuple[float, ...] = DEFAULT_HOUR_SHAPE
    weekday_weights: tuple[float, ...] = (1.0, 1.0, 1.0, 1.0, 1.0, 0.6, 0.5)
    rain_multiplier: float = 0.5
    cold_multiplier: float = 0.7
    cold_threshold_c: float = 5.0

    def __post_init__(self):
        if self.base_rate < 0:
            raise ConfigError("base_rate must be >= 0")
        if len(self.hour_shape) != 24 or any(v < 0 for v in self.hour_shape):
            raise ConfigError("hour_shape needs 24 nonnegative entries")
        if any(self.hour_shape[h] > 0 for h in range(LAST_TRIP_START_HOUR + 1, 24)):
            raise ConfigError(
                f"hour_shape must be zero after hour {LAST_TRIP_START_HOUR} "
                "so trips finish within their UTC day"
            )
        if len(self.weekday_weights) != 7 or any(v < 0 for v in self.weekday_weights):
            raise ConfigError("weekday_weights needs 7 nonnegative entries")

    def rate(self, stop_index: int, day: date, hour: int, wx: WeatherObservation) -> float:
        shape = self.hour_shape[hour]
        if shape == 0.0:
            return 0.0
        weight = 1.0 if self.stop_weights is None else self.stop_weights[stop_index]
        rate = self.base_rate * weight * shape * self.weekday_weights[day.weekday()]
        if wx.rain_1h > 0:
            rate *= self.rain_multiplier
        if wx.temp < self.cold_threshold_c:
            rate *= self.cold_multiplier
        return rate

    def to_dict(self) -> dict:
        return {
            "base_rate": self.base_rate,
            "stop_weights": list(self.stop_weights) if self.stop_weights else None,
            "hour_shape": list(self.hour_shape),
            "weekday_weights": list(self.weekday_weights),
            "rain_multiplier": self.rain_multiplier,
            "cold_multiplier": self.cold_multiplier,
            "cold_threshold_c": self.cold_threshold_c,
        }


NOISE_CLASSES = ("randomized", "single_stop", "out_of_rssi", "short_dwell", "long_dwell")


@dataclass(frozen=True, slots=True)
class NoiseMix:
    """Fractions of the total device population per noise class."""

    randomized: float = 0.0
    single_stop: float = 0.0
    out_of_rssi: float = 0.0
    short_dwell: float = 0.0
    long_dwell: float = 0.0

    def __post_init__(self):
        fractions = self.as_tuple()
        if any(not 0.0 <= f <= 1.0 for f in fractions):
            raise ConfigError("noise fractions must lie in [0, 1]")
        if sum(fractions) > 1.0 + 1e-12:
            raise ConfigError("noise fractions must sum to at most 1")

    def as_tuple(self) -> tuple[float, ...]:
        return (
            self.randomized,
            self.single_stop,
            self.out_of_rssi,
            self.short_dwell,
            self.long_dwell,
        )


def default_noise_mix() -> NoiseMix:
    return NoiseMix(**{name: 0.1 for name in NOISE_CLASSES})


@dataclass(frozen=True, slots=True)
class ScenarioConfig:
    seed: int = 11
    stops: tuple[str, ...] = DEFAULT_STOPS
    start_date: date = date(2017, 4, 5)
    days: int = 30
    demand: DemandModel = field(default_factory=DemandModel)
    noise: NoiseMix = field(default_factory=NoiseMix)
    cleaning: CleaningConfig = field(default_factory=CleaningConfig)

    def __post_init__(self):
        if self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        if self.days < 1:
            raise ConfigError("days must be >= 1")
        if len(self.stops) < 2:
            raise ConfigError("need at least 2 stops so trips can span two stops")
        if len(set(self.stops)) != len(self.stops):
            raise ConfigError("stop names must be unique")
        if self.demand.stop_weights is not None and len(self.demand.stop_weights) != len(self.stops):
            raise ConfigError("stop_weights length must match the stop list")


@dataclass(frozen=True, slots=True)
class PlantedDwell:
    stop: str
    device: DeviceId
    start: datetime
    end: datetime


@dataclass(slots=True)
class GroundTruth:
    waiting: dict[tuple[str, date], set[DeviceId]] = field(default_factory=dict)
    dwells: list[PlantedDwell] = field(default_factory=list)
    hourly: list[HourlyCount] = field(default_factory=list)
    coefficients: dict = field(default_factory=dict)
    signal_devices: int = 0
    signal_frames: int = 0
    noise_devices: dict[str, int] = field(default_factory=lambda: dict.fromkeys(NOISE_CLASSES, 0))
    noise_frames: dict[str, int] = field(default_factory=lambda: dict.fromkeys(NOISE_CLASSES, 0))

    @property
    def total_frames(self) -> int:
        return self.signal_frames + sum(self.noise_frames.values())


def _truth_hourly(dwells: list[PlantedDwell]) -> list[HourlyCount]:
    """Hourly waiting counts straight from the planted intervals.

    Computed with plain integer minute arithmetic (never through the
    aggregation module) so pipeline output can be checked against an
    independent second implementation: a dwell covers every minute index in
    [floor(start/60), floor(end/60)], an hour averages its 60 minutes, and
    hours are zero-filled over the scenario's observed span.
    """
    minute_hits: dict[tuple[str, int], int] = {}
    for d in dwells:
        first = int((d.start - _EPOCH).total_seconds()) // 60
        last = int((d.end - _EPOCH).total_seconds()) // 60
        for m in range(first, last + 1):
            key = (d.stop, m)
            minute_hits[key] = minute_hits.get(key, 0) + 1
    if not minute_hits:
        return []
    hour_sums: dict[tuple[str, int], int] = {}
    for (stop, m), n in minute_hits.items():
        key = (stop, m // 60)
        hour_sums[key] = hour_sums.get(key, 0) + n
    stops = sorted({stop for stop, _ in minute_hits})
    lo = min(m for _, m in minute_hits) // 60
    hi = max(m for _, m in minute_hits) // 60
    return [
        HourlyCount(
            stop=stop,
            hour=_EPOCH + timedelta(hours=h),
            count=hour_sums.get((stop, h), 0) / 60.0,
        )
        for h in range(lo, hi + 1)
        for stop in stops
    ]


_WEATHER_KINDS = (
    (800, "Clear", "clear sky"),
    (803, "Clouds", "broken clouds"),
    (500, "Rain", "light rain"),
    (501, "Rain", "moderate rain"),
)


def _day_weather(day: date, rng: np.random.Generator, recent_rain: list[float]) -> list[WeatherObservation]:
    """One observation per hour: a diurnal temperature arc around a per-day
    base, occasional multi-hour rain blocks, everything seeded."""
    out = []
    day_base = float(rng.uniform(2.0, 18.0))
    cloudy = float(rng.uniform(0.0, 1.0))
    rain_start, rain_len = 24, 0
    if rng.uniform() < 0.35:
        rain_start = int(rng.integers(6, 17))
        rain_len = int(rng.integers(2, 7))
    for hour in range(24):
        temp = day_base + 5.0 * float(np.sin((hour - 5.0) * np.pi / 19.0)) + float(rng.normal(0.0, 0.4))
        raining = rain_start <= hour < rain_start + rain_len
        rain_1h = round(float(rng.uniform(0.2, 3.0)), 2) if raining else 0.0
        recent_rain.append(rain_1h)
        del recent_rain[:-3]
        clouds = min(100.0, round(cloudy * 60 + (40.0 if raining else 0.0) + float(rng.uniform(0, 15)), 0))
        if raining:
            wid, main, desc = _WEATHER_KINDS[2] if rain_1h < 1.5 else _WEATHER_KINDS[3]
        elif clouds >= 50:
            wid, main, desc = _WEATHER_KINDS[1]
        else:
            wid, main, desc = _WEATHER_KINDS[0]
        spread = round(float(rng.uniform(0.5, 2.0)), 2)
        out.append(
            WeatherObservation(
                dt=int((datetime(day.year, day.month, day.day, hour) - _EPOCH).total_seconds()),
                temp=round(temp, 2),
                feels_like=round(temp - 1.5, 2),
                temp_min=round(temp - spread, 2),
                temp_max=round(temp + spread, 2),
                pressure=round(1013.0 + float(rng.normal(0.0, 4.0)), 1),
                sea_level=0.0,
                grnd_level=0.0,
                humidity=float(int(rng.integers(35, 96))),
                wind_speed=round(float(rng.uniform(0.0, 9.0)), 2),
                wind_deg=float(int(rng.integers(0, 360))),
                rain_1h=rain_1h,
                rain_3h=round(sum(recent_rain), 2),
                snow_1h=0.0,
                snow_3h=0.0,
                clouds_all=clouds,
                weather_id=wid,
                weather_main=main,
                weather_description=desc,
            )
        )
    return out


def _device_mac(index: int, randomized: bool) -> MacAddress:
    head = 0x02 if randomized else 0x00
    return MacAddress(
        bytes(
            (
                head,
                0xB8,
                (index >> 24) & 0xFF,
                (index >> 16) & 0xFF,
                (index >> 8) & 0xFF,
                index & 0xFF,
            )
        )
    )


def _dwell_frames(
    stop: str,
    device: DeviceId,
    mac: MacAddress,
    t0: int,
    t1: int,
    rssi_lo: int,
    rssi_hi: int,
    rng: np.random.Generator,
    frames: list[FrameRecord],
) -> int:
    """Frames at exactly t0 and t1 with gaps well under the segmenter's
    threshold in between, so the recovered segment is the dwell interval."""
    times = [t0]
    cur = t0
    while t1 - cur > 240:
        cur += int(rng.integers(45, 241))
        times.append(cur)
    times.append(t1)
    for t in times:
        frames.append(
            FrameRecord(
                stop=stop,
                at=_EPOCH + timedelta(seconds=t),
                device=device,
                rssi=int(rng.integers(rssi_lo, rssi_hi + 1)),
                mac=mac,
            )
        )
    return len(times)


def generate(
    cfg: ScenarioConfig,
) -> tuple[list[FrameRecord], list[WeatherObservation], GroundTruth]:
    """Emit frames, the hourly weather series, and the planted truth."""
    truth = GroundTruth(coefficients={"demand": cfg.demand.to_dict()})
    frames: list[FrameRecord] = []
    weather: list[WeatherObservation] = []

    noise_fractions = cfg.noise.as_tuple()
    signal_fraction = max(0.0, 1.0 - sum(noise_fractions))
    probs = np.array((signal_fraction,) + noise_fractions, dtype=np.float64)
    probs = probs / probs.sum()
    class_names = ("signal",) + NOISE_CLASSES

    d_min = int(cfg.cleaning.d_min.total_seconds())
    d_max = int(cfg.cleaning.d_max.total_seconds())
    keep_lo, keep_hi = cfg.cleaning.rssi_lo, cfg.cleaning.rssi_hi
    device_index = 0
    recent_rain: list[float] = []

    for day_index in range(cfg.days):
        day = cfg.start_date + timedelta(days=day_index)
        rng_w = np.random.default_rng((cfg.seed, 1, day_index))
        rng_t = np.random.default_rng((cfg.seed, 2, day_index))
        rng_c = np.random.default_rng((cfg.seed, 3, day_index))
        day_weather = _day_weather(day, rng_w, recent_rain)
        weather.extend(day_weather)
        day_start = int((datetime(day.year, day.month, day.day) - _EPOCH).total_seconds())

        for stop_index, stop in enumerate(cfg.stops):
            for hour in range(24):
                rate = cfg.demand.rate(stop_index, day, hour, day_weather[hour])
                if rate == 0.0:
                    continue
                for _ in range(int(rng_t.poisson(rate))):
                    cls = class_names[int(rng_c.choice(len(class_names), p=probs))]
                    randomized = cls == "randomized"
                    mac = _device_mac(device_index, randomized)
                    device_index += 1
                    device = anonymize(mac)

                    if cls == "short_dwell":
                        draw = lambda: int(rng_t.integers(10, 91))
                    elif cls == "long_dwell":
                        draw = lambda: int(rng_t.integers(d_max + 90, d_max + 1800))
                    else:
                        draw = lambda: int(rng_t.integers(d_min + 10, d_max - 9))
                    lo, hi = (
                        (keep_lo - 30, keep_lo - 5)
                        if cls == "out_of_rssi"
                        else (keep_lo, keep_hi)
                    )

                    t0 = day_start + hour * 3600 + int(rng_t.integers(0, 3600))
                    t1 = t0 + draw()
                    n = _dwell_frames(stop, device, mac, t0, t1, lo, hi, rng_t, frames)
                    emitted = n
                    if cls != "single_stop":
                        offset = int(rng_t.integers(1, len(cfg.stops)))
                        stop2 = cfg.stops[(stop_index + offset) % len(cfg.stops)]
                        t2 = t1 + int(rng_t.integers(1200, 2401))
                        t3 = t2 + draw()
                        emitted += _dwell_frames(
                            stop2, device, mac, t2, t3, lo, hi, rng_t, frames
                        )

                    if cls == "signal":
                        truth.signal_devices += 1
                        truth.signal_frames += emitted
                        truth.dwells.append(
                            PlantedDwell(
                                stop=stop,
                                device=device,
                                start=_EPOCH + timedelta(seconds=t0),
                                end=_EPOCH + timedelta(seconds=t1),
                            )
                        )
                        truth.dwells.append(
                            PlantedDwell(
                                stop=stop2,
                                device=device,
                                start=_EPOCH + timedelta(seconds=t2),
                                end=_EPOCH + timedelta(seconds=t3),
                            )
                        )
                        truth.waiting.setdefault((stop, day), set()).add(device)
                        truth.waiting.setdefault((stop2, day), set()).add(device)
                    else:
                        truth.noise_devices[cls] += 1
                        truth.noise_frames[cls] += emitted

    truth.hourly = _truth_hourly(truth.dwells)
    return frames, weather, truth


def default_scenario(seed: int = 11, days: int = 30) -> ScenarioConfig:
    """The standard verification scenario: all five noise classes at 10%."""
    return ScenarioConfig(
        seed=seed,
        days=days,
        demand=DemandModel(base_rate=2.6),
        noise=default_noise_mix(),
    )


def noise_free_scenario(seed: int = 11, days: int = 30) -> ScenarioConfig:
    return ScenarioConfig(seed=seed, days=days)


def nonlinear_scenario(seed: int = 11, days: int = 14) -> ScenarioConfig:
    """Demand with strong multiplicative structure (peaked hours, spread-out
    stop weights, weather response) that a purely additive model underfits."""
    demand = DemandModel(
        base_rate=3.0,
        stop_weights=(0.35, 0.6, 1.0, 1.5, 2.2, 3.0, 4.0),
        hour_shape=(
            0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
            0.3, 1.6, 2.6, 1.4, 0.5, 0.4,
            0.6, 0.5, 0.4, 0.7, 1.5, 2.6,
            1.6, 0.6, 0.3, 0.0, 0.0, 0.0,
        ),
        weekday_weights=(1.0, 1.1, 1.1, 1.0, 0.9, 0.35, 0.25),
        rain_multiplier=0.45,
        cold_multiplier=0.6,
    )
    return ScenarioConfig(seed=seed, days=days, demand=demand)


# --- linear oracle dataset -------------------------------------------------


@dataclass(frozen=True, slots=True)
class LinearScenarioConfig:
    theta: tuple[float, ...]
    n: int = 200
    bias: float = 0.0
    sigma: float = 0.0
    seed: int = 5

    def __post_init__(self):
        if self.n < len(self.theta) + 1:
            raise ConfigError("need more rows than coefficients")
        if self.sigma < 0:
            raise ConfigError("sigma must be >= 0")


def linear_scenario(cfg: LinearScenarioConfig) -> FeatureMatrix:
    """Design matrix with target exactly theta . x + bias (+ optional noise),
    bypassing the frame pipeline; the recovery oracle for the linear model."""
    rng = np.random.default_rng(cfg.seed)
    theta = np.array(cfg.theta, dtype=np.float64)
    X = rng.standard_normal((cfg.n, theta.size))
    y = X @ theta + cfg.bias
    if cfg.sigma > 0:
        y = y + cfg.sigma * rng.standard_normal(cfg.n)
    return FeatureMatrix.from_arrays(X, y)


# --- ground-truth serialization -------------------------------------------


def write_truth_json(truth: GroundTruth, dest: Union[str, os.PathLike]) -> None:
    waiting = {}
    for (stop, day), devices in sorted(truth.waiting.items()):
        waiting.setdefault(stop, {})[day.isoformat()] = sorted(d.hex for d in devices)
    payload = {
        "format_version": 1,
        "waiting": waiting,
        "dwells": [
            [d.stop, d.device.hex, d.start.isoformat(sep=" "), d.end.isoformat(sep=" ")]
            for d in truth.dwells
        ],
        "hourly": [[h.stop, h.hour.isoformat(sep=" "), h.count] for h in truth.hourly],
        "coefficients": truth.coefficients,
        "signal_devices": truth.signal_devices,
        "signal_frames": truth.signal_frames,
        "noise_devices": truth.noise_devices,
        "noise_frames": truth.noise_frames,
    }
    with open(dest, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def read_truth_json(source: Union[str, os.PathLike]) -> GroundTruth:
    with open(source, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format_version") != 1:
        raise ParseError(f"unsupported ground-truth version in {source}")
    truth = GroundTruth(coefficients=payload.get("coefficients", {}))
    for stop, by_day in payload["waiting"].items():
        for day_text, hexes in by_day.items():
            truth.waiting[(stop, date.fromisoformat(day_text))] = {
                DeviceId.from_hex(h) for h in hexes
            }
    truth.dwells = [
        PlantedDwell(
            stop=stop,
            device=DeviceId.from_hex(dev),
            start=datetime.fromisoformat(start),
            end=datetime.fromisoformat(end),
        )
        for stop, dev, start, end in payload["dwells"]
    ]
    truth.hourly = [
        HourlyCount(stop=stop, hour=datetime.fromisoformat(hour), count=float(count))
        for stop, hour, count in payload["hourly"]
    ]
    truth.signal_devices = int(payload["signal_devices"])
    truth.signal_frames = int(payload["signal_frames"])
    truth.noise_devices = {k: int(v) for k, v in payload["noise_devices"].items()}
    truth.noise_frames = {k: int(v) for k, v in payload["noise_frames"].items()}
    return truth
