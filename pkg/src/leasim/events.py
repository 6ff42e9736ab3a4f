"""Simulation event records shared by the engine and migration planner."""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum


class SimEventKind(IntEnum):
    """Event kinds; the integer value is the tie-break priority at equal
    timestamps (lower fires first)."""

    LEASE_END = 0
    VICTIM_READY = 1
    LEASE_ARRIVAL = 2
    LEASE_START = 3
    RESCHEDULE_TICK = 4


@dataclass(frozen=True)
class SimEvent:
    time_ms: int
    kind: SimEventKind
    subject: int | None = None  # lease id where applicable

    def __post_init__(self):
        if self.time_ms < 0:
            raise ValueError("event time must be >= 0")

    def sort_key(self) -> tuple[int, int, int]:
        subject = -1 if self.subject is None else self.subject
        return (self.time_ms, int(self.kind), subject)
