"""Turn kept dwell segments into per-minute device counts and the hourly target.

A minute counts a device when its segment overlaps any part of that minute;
the hourly value is the mean of the 60 minute-counts with absent minutes
contributing zero, which keeps the target in persons units.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Iterable, Sequence, Union

from .errors import ParseError
from .cleaning import Segment
from .frames import format_timestamp

MINUTE_HEADER = "bus_stop,timestamp_utc,count"
HOURLY_HEADER = "bus_stop,hour_utc,count"

_EPOCH = datetime(1970, 1, 1)


def _epoch_seconds(at: datetime) -> int:
    return int((at - _EPOCH).total_seconds())


def _minute_start(index: int) -> datetime:
    return _EPOCH + timedelta(minutes=index)


@dataclass(frozen=True, slots=True)
class MinuteCount:
    stop: str
    minute: datetime
    count: int


@dataclass(frozen=True, slots=True)
class HourlyCount:
    stop: str
    hour: datetime
    count: float


def minute_counts(segments: Sequence[Segment]) -> list[MinuteCount]:
    """Distinct devices with an active segment per (stop, minute).

    A segment [start, end] covers minute m when start <= m+59s and
    end >= m; with second-resolution stamps that is every minute index in
    [floor(start/60), floor(end/60)]. Only minutes with count > 0 are
    emitted. Segments of one device at the same stop are separated by more
    than the gap threshold, so they can never double-count a minute.
    """
    counts: dict[tuple[str, int], int] = {}
    for s in segments:
        first = _epoch_seconds(s.start) // 60
        last = _epoch_seconds(s.end) // 60
        for m in range(first, last + 1):
            key = (s.stop, m)
            counts[key] = counts.get(key, 0) + 1
    return [
        MinuteCount(stop=stop, minute=_minute_start(m), count=n)
        for (stop, m), n in sorted(counts.items())
    ]


def truncate_hour(at: datetime) -> datetime:
    return at.replace(minute=0, second=0, microsecond=0)


def hourly_counts(
    minutes: Sequence[MinuteCount],
    *,
    start: datetime | None = None,
    end: datetime | None = None,
    stops: Iterable[str] | None = None,
) -> list[HourlyCount]:
    """Mean of the 60 minute-counts per (stop, hour), zeros included.

    Hours with no activity emit explicit 0.0 rows inside [start, end] so
    the models see quiet hours; the range defaults to the span of the
    input, and the stop set to the stops present in it.
    """
    if not minutes and (start is None or end is None or stops is None):
        return []

    stop_set = sorted(set(stops)) if stops is not None else sorted({m.stop for m in minutes})
    lo = truncate_hour(start) if start is not None else truncate_hour(min(m.minute for m in minutes))
    hi = truncate_hour(end) if end is not None else truncate_hour(max(m.minute for m in minutes))

    sums: dict[tuple[str, datetime], int] = {}
    for m in minutes:
        key = (m.stop, truncate_hour(m.minute))
        sums[key] = sums.get(key, 0) + m.count

    out: list[HourlyCount] = []
    hour = lo
    one = timedelta(hours=1)
    while hour <= hi:
        for stop in stop_set:
            out.append(HourlyCount(stop=stop, hour=hour, count=sums.get((stop, hour), 0) / 60.0))
        hour = hour + one
    return out


def write_minute_csv(minutes: Iterable[MinuteCount], dest: Union[str, os.PathLike]) -> None:
    with open(dest, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(MINUTE_HEADER + "\n")
        for m in minutes:
            fh.write(f"{m.stop},{format_timestamp(m.minute)},{m.count}\n")


def read_minute_csv(source: Union[str, os.PathLike]) -> list[MinuteCount]:
    with open(source, "r", encoding="utf-8", newline="") as fh:
        header = fh.readline().rstrip("\r\n")
        if header != MINUTE_HEADER:
            raise ParseError(f"minute CSV needs header {MINUTE_HEADER!r}, got {header!r}")
        return [
            MinuteCount(stop=row[0], minute=datetime.fromisoformat(row[1]), count=int(row[2]))
            for row in csv.reader(fh)
            if row
        ]


def write_hourly_csv(hours: Iterable[HourlyCount], dest: Union[str, os.PathLike]) -> None:
    with open(dest, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(HOURLY_HEADER + "\n")
        for h in hours:
            fh.write(f"{h.stop},{format_timestamp(h.hour)},{h.count!r}\n")


def read_hourly_csv(source: Union[str, os.PathLike]) -> list[HourlyCount]:
    with open(source, "r", encoding="utf-8", newline="") as fh:
        header = fh.readline().rstrip("\r\n")
        if header != HOURLY_HEADER:
            raise ParseError(f"hourly CSV needs header {HOURLY_HEADER!r}, got {header!r}")
        return [
            HourlyCount(stop=row[0], hour=datetime.fromisoformat(row[1]), count=float(row[2]))
            for row in csv.reader(fh)
            if row
        ]
