"""Parsing of raw communication, wearable, and survey files, the weekly
windowing of the study range, and wear-compliance filtering.

Parsers are pure functions over text streams. Every parser counts what it
keeps and what it drops: accepted + rejected + deduplicated always equals
the number of input rows. A file whose malformed-row fraction exceeds
MALFORMED_BUDGET raises SchemaError instead of limping on.
"""

from __future__ import annotations

import csv
import io
import logging
from collections import Counter
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone
from typing import IO, Iterable, Sequence

from .errors import SchemaError
from .records import (
    HR_MAX,
    HR_MIN,
    MINUTES_PER_DAY,
    WELLNESS_LEVELS,
    ActivityState,
    CommEvent,
    CommKind,
    Gender,
    HrZone,
    MinuteRecord,
    SurveyRecord,
    WeekIndex,
    week_of,
)

log = logging.getLogger(__name__)

# Fraction of malformed rows tolerated before the whole file is refused.
MALFORMED_BUDGET = 0.01

# Default logical-field -> column-name maps; a config may rename columns.
COMM_SCHEMA = {
    "timestamp": "timestamp",
    "src": "src",
    "dst": "dst",
    "kind": "kind",
    "duration_s": "duration_s",
    "answered": "answered",
}
WEARABLE_SCHEMA = {
    "person": "person",
    "timestamp": "timestamp",
    "heart_rate": "heart_rate",
    "steps": "steps",
    "activity_state": "activity_state",
    "hr_zone": "hr_zone",
}
SURVEY_SCHEMA = {
    "person": "person",
    "gender": "gender",
    "stress": "stress",
    "happiness": "happiness",
    "positive_attitude": "positive_attitude",
    "self_health": "self_health",
}


@dataclass
class ParseReport:
    """Bookkeeping for one parsed file."""

    total_rows: int = 0
    accepted: int = 0
    rejected: int = 0
    deduplicated: int = 0
    first_bad_line: int | None = None  # 1-based, counting the header as line 1
    reject_reasons: Counter = field(default_factory=Counter)

    def reject(self, line_no: int, reason: str) -> None:
        self.rejected += 1
        self.reject_reasons[reason] += 1
        if self.first_bad_line is None:
            self.first_bad_line = line_no

    def check_budget(self, what: str) -> None:
        if self.total_rows and self.rejected / self.total_rows > MALFORMED_BUDGET:
            raise SchemaError(
                f"{what}: {self.rejected}/{self.total_rows} malformed rows "
                f"exceeds the {MALFORMED_BUDGET:.0%} budget; "
                f"first offending line {self.first_bad_line}"
            )

    def as_dict(self) -> dict:
        return {
            "total_rows": self.total_rows,
            "accepted": self.accepted,
            "rejected": self.rejected,
            "deduplicated": self.deduplicated,
            "first_bad_line": self.first_bad_line,
            "reject_reasons": dict(sorted(self.reject_reasons.items())),
        }


class _RowError(ValueError):
    """Internal: one malformed row."""


def _open_rows(stream: IO[str] | Iterable[str], delimiter: str):
    return csv.reader(stream, delimiter=delimiter)


def _resolve_columns(header: Sequence[str], schema: dict[str, str], what: str) -> dict[str, int]:
    positions = {}
    for field_name, column in schema.items():
        try:
            positions[field_name] = header.index(column)
        except ValueError:
            raise SchemaError(f"{what}: missing column {column!r} in header {list(header)}")
    return positions


def _cell(row: Sequence[str], pos: dict[str, int], name: str) -> str:
    i = pos[name]
    if i >= len(row):
        raise _RowError(f"short row, no {name}")
    return row[i].strip()


def _parse_ts(text: str) -> int:
    """Epoch seconds or ISO-8601; naive datetimes are taken as UTC."""
    if not text:
        raise _RowError("empty timestamp")
    try:
        return int(text)
    except ValueError:
        pass
    try:
        dt = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError:
        raise _RowError(f"bad timestamp {text!r}")
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes"):
        return True
    if t in ("0", "false", "no"):
        return False
    raise _RowError(f"bad boolean {text!r}")


def parse_comm_log(
    stream: IO[str] | Iterable[str],
    schema: dict[str, str] | None = None,
    delimiter: str = ",",
) -> tuple[list[CommEvent], ParseReport]:
    """Parse a delimited communication log into events sorted by timestamp.

    Rows violating the record invariants (src == dst, negative duration,
    unknown kind, bad timestamp) are rejected and counted, never silently
    dropped.
    """
    schema = schema or COMM_SCHEMA
    report = ParseReport()
    events: list[CommEvent] = []
    rows = _open_rows(stream, delimiter)
    header = next(rows, None)
    if header is None:
        raise SchemaError("comm log: empty stream, missing header")
    pos = _resolve_columns(header, schema, "comm log")

    for line_no, row in enumerate(rows, start=2):
        if not row:
            continue
        report.total_rows += 1
        try:
            events.append(_comm_row(row, pos))
            report.accepted += 1
        except _RowError as exc:
            report.reject(line_no, str(exc))
    report.check_budget("comm log")
    events.sort(key=lambda e: (e.timestamp, e.src, e.dst, e.kind.value))
    return events, report


def _comm_row(row: Sequence[str], pos: dict[str, int]) -> CommEvent:
    ts = _parse_ts(_cell(row, pos, "timestamp"))
    src = _cell(row, pos, "src")
    dst = _cell(row, pos, "dst")
    if not src or not dst:
        raise _RowError("empty endpoint id")
    if src == dst:
        raise _RowError("self-loop (src == dst)")
    kind_text = _cell(row, pos, "kind").lower()
    try:
        kind = CommKind(kind_text)
    except ValueError:
        raise _RowError(f"unknown kind {kind_text!r}")
    duration_text = _cell(row, pos, "duration_s")
    if kind is CommKind.TEXT:
        # Texts carry no call metadata: duration must be 0/empty, answered
        # is true by definition.
        if duration_text not in ("", "0"):
            raise _RowError("text with nonzero duration")
        return CommEvent(ts, src, dst, kind, 0, True)
    try:
        duration = int(duration_text)
    except ValueError:
        raise _RowError(f"bad duration {duration_text!r}")
    if duration < 0:
        raise _RowError("negative duration")
    answered = _parse_bool(_cell(row, pos, "answered"))
    return CommEvent(ts, src, dst, kind, duration, answered)


def parse_wearable_log(
    stream: IO[str] | Iterable[str],
    schema: dict[str, str] | None = None,
    delimiter: str = ",",
) -> tuple[list[MinuteRecord], ParseReport]:
    """Parse a per-minute wearable log.

    Duplicate (person, minute) keys keep the last record seen and count one
    deduplication. Heart rate outside [20, 250] bpm is a rejection; an empty
    heart-rate field is a valid missing value.
    """
    schema = schema or WEARABLE_SCHEMA
    report = ParseReport()
    by_key: dict[tuple[str, int], MinuteRecord] = {}
    order: list[tuple[str, int]] = []
    rows = _open_rows(stream, delimiter)
    header = next(rows, None)
    if header is None:
        raise SchemaError("wearable log: empty stream, missing header")
    pos = _resolve_columns(header, schema, "wearable log")

    for line_no, row in enumerate(rows, start=2):
        if not row:
            continue
        report.total_rows += 1
        try:
            rec = _wearable_row(row, pos)
        except _RowError as exc:
            report.reject(line_no, str(exc))
            continue
        key = (rec.person, rec.timestamp)
        if key in by_key:
            report.deduplicated += 1
        else:
            order.append(key)
            report.accepted += 1
        by_key[key] = rec
    report.check_budget("wearable log")
    records = [by_key[k] for k in sorted(order)]
    return records, report


def _wearable_row(row: Sequence[str], pos: dict[str, int]) -> MinuteRecord:
    person = _cell(row, pos, "person")
    if not person:
        raise _RowError("empty person id")
    ts = _parse_ts(_cell(row, pos, "timestamp"))
    if ts % 60 != 0:
        raise _RowError("timestamp not minute-aligned")
    hr_text = _cell(row, pos, "heart_rate")
    heart_rate: float | None
    if hr_text == "":
        heart_rate = None
    else:
        try:
            heart_rate = float(hr_text)
        except ValueError:
            raise _RowError(f"bad heart rate {hr_text!r}")
        if not (HR_MIN <= heart_rate <= HR_MAX):
            raise _RowError(f"heart rate {heart_rate:g} outside [{HR_MIN:g}, {HR_MAX:g}]")
    steps_text = _cell(row, pos, "steps")
    try:
        steps = int(steps_text) if steps_text else 0
    except ValueError:
        raise _RowError(f"bad steps {steps_text!r}")
    if steps < 0:
        raise _RowError("negative steps")
    state_text = _cell(row, pos, "activity_state")
    try:
        state = ActivityState(state_text) if state_text else None
    except ValueError:
        raise _RowError(f"unknown activity state {state_text!r}")
    zone_text = _cell(row, pos, "hr_zone")
    try:
        zone = HrZone(zone_text) if zone_text else None
    except ValueError:
        raise _RowError(f"unknown hr zone {zone_text!r}")
    return MinuteRecord(person, ts, heart_rate, steps, state, zone)


def parse_survey(
    stream: IO[str] | Iterable[str],
    schema: dict[str, str] | None = None,
    delimiter: str = ",",
) -> tuple[list[SurveyRecord], ParseReport]:
    """Parse the one-row-per-participant wellness survey.

    Level answers are validated against each question's range; a row with
    any out-of-range level is rejected whole. A duplicated person id is a
    schema error because it would make label assignment ambiguous.
    """
    schema = schema or SURVEY_SCHEMA
    report = ParseReport()
    records: list[SurveyRecord] = []
    seen: dict[str, int] = {}
    rows = _open_rows(stream, delimiter)
    header = next(rows, None)
    if header is None:
        raise SchemaError("survey: empty stream, missing header")
    pos = _resolve_columns(header, schema, "survey")

    for line_no, row in enumerate(rows, start=2):
        if not row:
            continue
        report.total_rows += 1
        try:
            rec = _survey_row(row, pos)
        except _RowError as exc:
            report.reject(line_no, str(exc))
            continue
        if rec.person in seen:
            raise SchemaError(
                f"survey: duplicate person {rec.person!r} on line {line_no} "
                f"(first seen on line {seen[rec.person]})"
            )
        seen[rec.person] = line_no
        records.append(rec)
        report.accepted += 1
    report.check_budget("survey")
    return records, report


def _survey_row(row: Sequence[str], pos: dict[str, int]) -> SurveyRecord:
    person = _cell(row, pos, "person")
    if not person:
        raise _RowError("empty person id")
    gender_text = _cell(row, pos, "gender").lower()
    try:
        gender = Gender(gender_text)
    except ValueError:
        raise _RowError(f"bad gender {gender_text!r}")
    levels = {}
    for question, (lo, hi) in WELLNESS_LEVELS.items():
        text = _cell(row, pos, question)
        if text == "":
            levels[question] = None
            continue
        try:
            value = int(text)
        except ValueError:
            raise _RowError(f"bad {question} level {text!r}")
        if not (lo <= value <= hi):
            raise _RowError(f"{question} level {value} outside [{lo}, {hi}]")
        levels[question] = value
    return SurveyRecord(person, gender, **levels)


# ---------------------------------------------------------------------------
# Serialization (round-trip counterparts of the parsers; also used to write
# normalized stage artifacts and synthetic datasets)

def write_comm_log(events: Iterable[CommEvent], stream: IO[str], delimiter: str = ",") -> None:
    w = csv.writer(stream, delimiter=delimiter, lineterminator="\n")
    w.writerow(list(COMM_SCHEMA.values()))
    for e in events:
        w.writerow([e.timestamp, e.src, e.dst, e.kind.value, e.duration_s, int(e.answered)])


def write_wearable_log(records: Iterable[MinuteRecord], stream: IO[str], delimiter: str = ",") -> None:
    w = csv.writer(stream, delimiter=delimiter, lineterminator="\n")
    w.writerow(list(WEARABLE_SCHEMA.values()))
    for r in records:
        w.writerow([
            r.person,
            r.timestamp,
            "" if r.heart_rate is None else f"{r.heart_rate:g}",
            r.steps,
            "" if r.activity_state is None else r.activity_state.value,
            "" if r.hr_zone is None else r.hr_zone.value,
        ])


def write_survey(records: Iterable[SurveyRecord], stream: IO[str], delimiter: str = ",") -> None:
    w = csv.writer(stream, delimiter=delimiter, lineterminator="\n")
    w.writerow(list(SURVEY_SCHEMA.values()))
    for r in records:
        w.writerow([
            r.person,
            r.gender.value,
            *("" if r.level(q) is None else r.level(q) for q in WELLNESS_LEVELS),
        ])


def dumps_comm_log(events: Iterable[CommEvent], delimiter: str = ",") -> str:
    buf = io.StringIO()
    write_comm_log(events, buf, delimiter)
    return buf.getvalue()


def dumps_wearable_log(records: Iterable[MinuteRecord], delimiter: str = ",") -> str:
    buf = io.StringIO()
    write_wearable_log(records, buf, delimiter)
    return buf.getvalue()


def dumps_survey(records: Iterable[SurveyRecord], delimiter: str = ",") -> str:
    buf = io.StringIO()
    write_survey(records, buf, delimiter)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Weekly windowing

def make_weeks(study_start: date, study_end: date) -> list[WeekIndex]:
    """Tile [study_start, study_end) with consecutive 7-day windows.

    A trailing partial week is dropped so every window has identical
    length; a range shorter than 7 days yields no windows at all.
    """
    if study_end <= study_start:
        raise ValueError("study_end must be after study_start")
    n_days = (study_end - study_start).days
    n_weeks = n_days // 7
    if n_weeks == 0:
        log.warning(
            "study range %s..%s is shorter than one week; no windows produced",
            study_start, study_end,
        )
        return []
    dropped = n_days - 7 * n_weeks
    if dropped:
        log.info("dropping %d trailing day(s) that do not fill a week", dropped)
    return [
        WeekIndex(i, study_start + timedelta(days=7 * i), study_start + timedelta(days=7 * (i + 1)))
        for i in range(n_weeks)
    ]


# ---------------------------------------------------------------------------
# Compliance filtering

@dataclass
class ComplianceMask:
    """Per-day wear fractions and the per-week retention verdicts.

    Day compliance is the fraction of the 1440 minutes carrying a present
    heart-rate value (heart rate is the wear-detection signal). A week is
    retained iff the mean of its 7 day fractions reaches the threshold;
    days without any record contribute 0.
    """

    threshold: float
    weeks: list[WeekIndex]
    day_fraction: dict[tuple[str, date], float]
    week_fraction: dict[tuple[str, int], float]
    retained: dict[tuple[str, int], bool]

    @property
    def persons(self) -> list[str]:
        return sorted({p for p, _ in self.week_fraction})

    def is_retained(self, person: str, week_index: int) -> bool:
        return self.retained.get((person, week_index), False)

    def retained_weeks(self, person: str) -> list[int]:
        return sorted(w for (p, w), ok in self.retained.items() if p == person and ok)


def compliance_filter(
    records: Iterable[MinuteRecord],
    weeks: list[WeekIndex],
    threshold: float = 0.8,
) -> ComplianceMask:
    """Apply the daily wear-compliance rule over the weekly windows.

    The threshold comparison is inclusive: a week at exactly the threshold
    is retained.
    """
    if not (0.0 < threshold <= 1.0):
        raise ValueError("compliance threshold must be in (0, 1]")
    valid_minutes: dict[tuple[str, date], int] = {}
    persons: set[str] = set()
    for rec in records:
        wk = week_of(rec.timestamp, weeks)
        if wk is None:
            continue
        persons.add(rec.person)
        if rec.heart_rate is None:
            continue
        day = datetime.fromtimestamp(rec.timestamp, tz=timezone.utc).date()
        key = (rec.person, day)
        valid_minutes[key] = valid_minutes.get(key, 0) + 1

    day_fraction = {k: n / MINUTES_PER_DAY for k, n in valid_minutes.items()}
    week_fraction: dict[tuple[str, int], float] = {}
    retained: dict[tuple[str, int], bool] = {}
    for person in sorted(persons):
        for wk in weeks:
            minutes = sum(
                valid_minutes.get((person, wk.start + timedelta(days=d)), 0)
                for d in range(7)
            )
            # single division keeps the mean-of-days exact at the boundary
            frac = minutes / (7 * MINUTES_PER_DAY)
            week_fraction[(person, wk.index)] = frac
            retained[(person, wk.index)] = frac >= threshold
    return ComplianceMask(threshold, weeks, day_fraction, week_fraction, retained)
