"""Unit conventions used throughout the package.

All simulated time is kept in integer milliseconds and all resource
quantities in integers: CPU in percent-points of one core (100 == one
full core), memory and disk in MB, bandwidth in hundredths of a MB/s
(cmbs).  The bandwidth scaling keeps common rates exact: 100 Mbps is
12.5 MB/s, i.e. 1250 cmbs.  Floats only appear at the reporting
boundary (watts, kWh, hours).
"""

from __future__ import annotations

import re
from fractions import Fraction

MS_PER_S = 1000
MS_PER_HOUR = 3_600_000
CMBS_PER_MBS = 100
# watt-milliseconds per kWh: 1000 W * 3600 s * 1000 ms
WMS_PER_KWH = 3.6e9

_BW_PATTERN = re.compile(r"^\s*([0-9]+(?:\.[0-9]+)?)\s*(MBps|MB/s|Mbps|Mb/s)\s*$")


def parse_bandwidth(text: str) -> int:
    """Parse a bandwidth given with an explicit unit into cmbs.

    Accepts megabytes per second ("100MBps", "12.5MB/s") and megabits
    per second ("100Mbps", "100Mb/s").  The two differ by 8x, which is
    exactly why a bare number is rejected: "0" is the only unitless
    value allowed.
    """
    if not isinstance(text, str):
        raise ValueError(f"bandwidth must be a string with a unit, got {text!r}")
    if text.strip() == "0":
        return 0
    m = _BW_PATTERN.match(text)
    if m is None:
        raise ValueError(
            f"bandwidth {text!r} needs an explicit unit, e.g. '100MBps' or '100Mbps'"
        )
    value = Fraction(m.group(1))
    if m.group(2) in ("Mbps", "Mb/s"):
        value = value / 8  # megabits -> megabytes
    cmbs = value * CMBS_PER_MBS
    if cmbs.denominator != 1:
        raise ValueError(
            f"bandwidth {text!r} is finer than 0.01 MB/s and cannot be represented"
        )
    return int(cmbs)


def mbs_to_cmbs(mbs: float | int | str) -> int:
    """Convert a MB/s figure to cmbs, requiring exact representability."""
    value = Fraction(str(mbs)) * CMBS_PER_MBS
    if value.denominator != 1 or value < 0:
        raise ValueError(f"bandwidth {mbs!r} MB/s is not a multiple of 0.01")
    return int(value)


def cmbs_to_mbs(cmbs: int) -> float:
    return cmbs / CMBS_PER_MBS


def ms_to_hours(ms: int) -> float:
    return ms / MS_PER_HOUR


def ms_to_seconds(ms: int) -> float:
    return ms / MS_PER_S


def div_to_ms(amount_scaled: int, rate: int) -> int:
    """Integer division rounding half up, for transfer-time arithmetic."""
    if rate <= 0:
        raise ValueError("rate must be positive")
    return (2 * amount_scaled + rate) // (2 * rate)
