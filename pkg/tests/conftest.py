"""Shared builders for compact, readable test data."""

from __future__ import annotations

from datetime import date, datetime, timedelta

import pytest

from busflux.frames import FrameRecord, MacAddress, anonymize

T0 = datetime(2017, 4, 5, 8, 0, 0)

# One verdict line per verification gate, printed after the run so the
# summary survives output capturing.
verification_lines: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if verification_lines:
        terminalreporter.section("verification gates")
        for line in verification_lines:
            terminalreporter.write_line(line)


def mac(text: str) -> MacAddress:
    return MacAddress.from_text(text)


def frame(
    stop: str = "stop-01",
    at: datetime = T0,
    mac_text: str = "00:B8:00:00:00:01",
    rssi: int = -60,
) -> FrameRecord:
    m = mac(mac_text)
    return FrameRecord(stop=stop, at=at, device=anonymize(m), rssi=rssi, mac=m)


def burst(
    stop: str,
    mac_text: str,
    start: datetime,
    duration_s: int,
    step_s: int = 60,
    rssi: int = -60,
) -> list[FrameRecord]:
    """Frames every step_s seconds from start through start+duration_s
    inclusive, so the resulting segment spans exactly duration_s."""
    out = []
    t = 0
    while t < duration_s:
        out.append(frame(stop=stop, at=start + timedelta(seconds=t), mac_text=mac_text, rssi=rssi))
        t += step_s
    out.append(frame(stop=stop, at=start + timedelta(seconds=duration_s), mac_text=mac_text, rssi=rssi))
    return out


@pytest.fixture
def semester_start() -> date:
    return date(2017, 1, 9)
