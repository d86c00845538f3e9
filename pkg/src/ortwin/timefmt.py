"""Clock-time parsing and formatting.

Times are real-valued minutes since midnight of the simulated day; values
past 1440 denote post-midnight overtime and are written in extended-hour
form ("24:40"). Sub-minute values are written with one decimal ("16:02.5").
"""

from __future__ import annotations

import math

from ortwin.errors import ParseError


def parse_hhmm(text: str, *, file: str = "", row: int | None = None, column: str = "") -> float:
    raw = text.strip()
    parts = raw.split(":")
    if len(parts) != 2:
        raise ParseError(f"expected HH:MM, got {raw!r}", file=file, row=row, column=column)
    try:
        hours = int(parts[0])
        minutes = float(parts[1])
    except ValueError:
        raise ParseError(f"expected HH:MM, got {raw!r}", file=file, row=row, column=column) from None
    if hours < 0 or minutes < 0 or minutes >= 60:
        raise ParseError(f"out-of-range clock time {raw!r}", file=file, row=row, column=column)
    return hours * 60 + minutes


def format_hhmm(minutes: float) -> str:
    if not math.isfinite(minutes) or minutes < 0:
        raise ValueError(f"cannot format {minutes!r} as a clock time")
    hours = int(minutes // 60)
    rem = round(minutes - hours * 60, 1)
    if rem >= 60.0:
        hours += 1
        rem -= 60.0
    if rem == int(rem):
        return f"{hours:02d}:{int(rem):02d}"
    return f"{hours:02d}:{rem:04.1f}"
