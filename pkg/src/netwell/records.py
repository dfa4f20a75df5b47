"""Core record types produced by ingestion and consumed everywhere else.

A person is identified by an opaque non-empty string id; comparisons are
exact string equality. Timestamps are UTC epoch seconds (ints) normalized
at parse time.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from datetime import date, datetime, timedelta, timezone

HR_MIN = 20.0
HR_MAX = 250.0
MINUTES_PER_DAY = 1440
SECONDS_PER_WEEK = 7 * 86400


class CommKind(enum.Enum):
    CALL = "call"
    TEXT = "text"


class ActivityState(enum.Enum):
    SEDENTARY = "sedentary"
    LIGHTLY_ACTIVE = "lightly_active"
    FAIRLY_ACTIVE = "fairly_active"
    VERY_ACTIVE = "very_active"


class HrZone(enum.Enum):
    OUT_OF_RANGE = "out_of_range"
    FAT_BURN = "fat_burn"
    CARDIO = "cardio"
    PEAK = "peak"


class Gender(enum.Enum):
    MALE = "male"
    FEMALE = "female"


ACTIVITY_STATES = tuple(ActivityState)

# Wellness questions and their level ranges (inclusive).
WELLNESS_LEVELS = {
    "stress": (1, 4),
    "happiness": (1, 4),
    "positive_attitude": (1, 5),
    "self_health": (1, 4),
}


@dataclass(frozen=True, slots=True)
class CommEvent:
    """One call or text record; src != dst always holds."""

    timestamp: int
    src: str
    dst: str
    kind: CommKind
    duration_s: int
    answered: bool

    def pair(self) -> tuple[str, str]:
        """Unordered endpoint pair, canonically sorted."""
        return (self.src, self.dst) if self.src <= self.dst else (self.dst, self.src)


@dataclass(frozen=True, slots=True)
class MinuteRecord:
    """One minute of wearable data; timestamp is minute-aligned UTC epoch
    seconds; heart_rate is None when the device reported nothing."""

    person: str
    timestamp: int
    heart_rate: float | None
    steps: int
    activity_state: ActivityState | None
    hr_zone: HrZone | None


@dataclass(frozen=True, slots=True)
class SurveyRecord:
    """One participant's wellness survey answers; levels may be missing."""

    person: str
    gender: Gender
    stress: int | None
    happiness: int | None
    positive_attitude: int | None
    self_health: int | None

    def level(self, question: str) -> int | None:
        if question not in WELLNESS_LEVELS:
            raise ValueError(f"unknown wellness question: {question!r}")
        return getattr(self, question)


@dataclass(frozen=True, slots=True)
class WeekIndex:
    """One 7-day analysis window, [start, end)."""

    index: int
    start: date
    end: date

    def __post_init__(self):
        if self.end - self.start != timedelta(days=7):
            raise ValueError("a week window must span exactly 7 days")

    @property
    def start_ts(self) -> int:
        return _date_ts(self.start)

    @property
    def end_ts(self) -> int:
        return _date_ts(self.end)

    def contains_ts(self, ts: int) -> bool:
        return self.start_ts <= ts < self.end_ts


def _date_ts(d: date) -> int:
    return int(datetime(d.year, d.month, d.day, tzinfo=timezone.utc).timestamp())


def week_of(ts: int, weeks: list[WeekIndex]) -> WeekIndex | None:
    """Map a timestamp to the unique week containing it, or None if out of
    range. Weeks tile the range, so direct arithmetic suffices."""
    if not weeks:
        return None
    offset = ts - weeks[0].start_ts
    if offset < 0:
        return None
    i = offset // SECONDS_PER_WEEK
    if i >= len(weeks):
        return None
    return weeks[i]
