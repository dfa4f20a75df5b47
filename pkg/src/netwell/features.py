"""Weekly behavioral summaries per person and the person-week feature matrix.

Behavioral features follow the wearable conventions exactly: heart rate is
summarized as mean and variance over present minutes, steps and per-state
active minutes are summed per day first and then summarized as mean and
standard deviation of the 7 daily sums. All dispersions use the population
convention (divide by n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import timedelta
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError, InternalContradictionError
from .graph.metrics import NodeMetrics
from .graph.snapshots import Scope
from .ingest import ComplianceMask
from .records import (
    ACTIVITY_STATES,
    Gender,
    MinuteRecord,
    SurveyRecord,
    WeekIndex,
    week_of,
)

# Fixed column orders; every exported artifact follows these.
BEHAVIOR_COLUMNS = (
    "hr_mean",
    "hr_var",
    "steps_daily_mean",
    "steps_daily_std",
    *(f"{s.value}_daily_{stat}" for s in ACTIVITY_STATES for stat in ("mean", "std")),
)
STRUCTURE_METRICS = ("degree", "triangles", "clustering", "betweenness", "closeness")
STRUCTURE_COLUMNS = tuple(
    f"{scope.value}_{metric}" for scope in (Scope.PARTICIPANT, Scope.WHOLE) for metric in STRUCTURE_METRICS
)
FEATURE_GROUPS = ("gender", "behavior", "structure")

# Weekly series used by the correlation analysis: the mean-statistic of each
# behavioral feature and all ten structural metrics.
BEHAVIORAL_SERIES = ("heart_rate", "steps", *(s.value for s in ACTIVITY_STATES))
STRUCTURAL_SERIES = STRUCTURE_COLUMNS

_SERIES_TO_COLUMN = {
    "heart_rate": "hr_mean",
    "steps": "steps_daily_mean",
    **{s.value: f"{s.value}_daily_mean" for s in ACTIVITY_STATES},
}


@dataclass(frozen=True)
class BehaviorFeatures:
    """One person-week of behavioral summaries."""

    hr_mean: float
    hr_var: float
    steps_daily_mean: float
    steps_daily_std: float
    state_daily_mean: dict
    state_daily_std: dict

    def as_vector(self) -> list[float]:
        vec = [self.hr_mean, self.hr_var, self.steps_daily_mean, self.steps_daily_std]
        for s in ACTIVITY_STATES:
            vec.append(self.state_daily_mean[s])
            vec.append(self.state_daily_std[s])
        return vec

    def series_value(self, name: str) -> float:
        column = _SERIES_TO_COLUMN[name]
        if column == "hr_mean":
            return self.hr_mean
        if column == "steps_daily_mean":
            return self.steps_daily_mean
        state = next(s for s in ACTIVITY_STATES if column.startswith(s.value))
        return self.state_daily_mean[state]


def _pop_mean_std(values: Sequence[float]) -> tuple[float, float]:
    n = len(values)
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / n
    return mean, math.sqrt(var)


def behavior_features(records: Sequence[MinuteRecord], week: WeekIndex) -> BehaviorFeatures:
    """Summarize one person's minute records within one retained week.

    Days without records contribute zero daily sums; a retained week with no
    present heart-rate minute contradicts the compliance guarantee and is an
    internal error, not a data error.
    """
    hr_values: list[float] = []
    day_steps = [0.0] * 7
    day_state_minutes = {s: [0.0] * 7 for s in ACTIVITY_STATES}
    for rec in records:
        if not week.contains_ts(rec.timestamp):
            continue
        day = (rec.timestamp - week.start_ts) // 86400
        if rec.heart_rate is not None:
            hr_values.append(rec.heart_rate)
        day_steps[day] += rec.steps
        if rec.activity_state is not None:
            day_state_minutes[rec.activity_state][day] += 1
    if not hr_values:
        raise InternalContradictionError(
            f"retained week {week.index} has no present heart-rate minutes"
        )
    hr_mean, hr_std = _pop_mean_std(hr_values)
    steps_mean, steps_std = _pop_mean_std(day_steps)
    state_mean = {}
    state_std = {}
    for s in ACTIVITY_STATES:
        m, sd = _pop_mean_std(day_state_minutes[s])
        state_mean[s] = m
        state_std[s] = sd
    return BehaviorFeatures(hr_mean, hr_std**2, steps_mean, steps_std, state_mean, state_std)


def weekly_behavior(
    records: Iterable[MinuteRecord],
    mask: ComplianceMask,
) -> dict[tuple[str, int], BehaviorFeatures]:
    """Behavior features for every retained (person, week)."""
    weeks = mask.weeks
    grouped: dict[tuple[str, int], list[MinuteRecord]] = {}
    for rec in records:
        wk = week_of(rec.timestamp, weeks)
        if wk is None:
            continue
        if mask.is_retained(rec.person, wk.index):
            grouped.setdefault((rec.person, wk.index), []).append(rec)
    return {
        key: behavior_features(recs, weeks[key[1]])
        for key, recs in sorted(grouped.items())
    }


@dataclass
class FeatureMatrix:
    """Person-week rows of demographic + behavioral + structural features.

    Values are raw; standardization parameters are fit on training rows
    only (see netwell.learn.classifiers.Standardizer). Column order is
    fixed: gender, then behavior, then structure, each present only when
    its group is active.
    """

    rows: list[tuple[str, int]]  # (person, week_index)
    X: np.ndarray
    y: np.ndarray
    columns: list[str]
    column_groups: list[str]
    groups: tuple[str, ...]
    target: str
    exclusions: dict[str, int]

    def subset(self, groups: Sequence[str]) -> "FeatureMatrix":
        """Restrict to the given feature groups, preserving column order."""
        bad = set(groups) - set(FEATURE_GROUPS)
        if bad:
            raise ValueError(f"unknown feature groups: {sorted(bad)}")
        keep = [i for i, g in enumerate(self.column_groups) if g in groups]
        return FeatureMatrix(
            rows=self.rows,
            X=self.X[:, keep],
            y=self.y,
            columns=[self.columns[i] for i in keep],
            column_groups=[self.column_groups[i] for i in keep],
            groups=tuple(g for g in FEATURE_GROUPS if g in groups),
            target=self.target,
            exclusions=self.exclusions,
        )

    @property
    def persons(self) -> list[str]:
        return sorted({p for p, _ in self.rows})


def assemble_matrix(
    behavior: Mapping[tuple[str, int], BehaviorFeatures],
    metrics: Mapping[tuple[int, Scope], NodeMetrics],
    surveys: Iterable[SurveyRecord],
    target: str,
    groups: Sequence[str] = FEATURE_GROUPS,
) -> FeatureMatrix:
    """Join behavior, structure, and survey label into one matrix.

    One row per retained (person, week) whose person answered the target
    question; the single survey label is replicated across the person's
    weeks. People absent from a week's metric table were isolates that week
    and contribute zero metrics. Every excluded row is counted by reason.
    """
    survey_by_person = {s.person: s for s in surveys}
    exclusions = {"no_survey": 0, "missing_label": 0}
    metric_rows: dict[tuple[int, Scope], dict[str, dict[str, float]]] = {
        key: nm.as_dict() for key, nm in metrics.items()
    }

    rows: list[tuple[str, int]] = []
    data: list[list[float]] = []
    labels: list[int] = []
    zero_metrics = {m: 0.0 for m in STRUCTURE_METRICS}
    for (person, wk), feats in sorted(behavior.items()):
        survey = survey_by_person.get(person)
        if survey is None:
            exclusions["no_survey"] += 1
            continue
        label = survey.level(target)
        if label is None:
            exclusions["missing_label"] += 1
            continue
        vec: list[float] = [0.0 if survey.gender is Gender.MALE else 1.0]
        vec.extend(feats.as_vector())
        for scope in (Scope.PARTICIPANT, Scope.WHOLE):
            table = metric_rows.get((wk, scope), {})
            row = table.get(person, zero_metrics)
            vec.extend(row[m] for m in STRUCTURE_METRICS)
        rows.append((person, wk))
        data.append(vec)
        labels.append(label)

    if not rows:
        raise DataError(
            "no rows survive the join: "
            f"behavior weeks={len(behavior)}, surveys={len(survey_by_person)}, "
            f"metric tables={len(metric_rows)}, exclusions={exclusions}"
        )

    columns = ["gender", *BEHAVIOR_COLUMNS, *STRUCTURE_COLUMNS]
    column_groups = (
        ["gender"] + ["behavior"] * len(BEHAVIOR_COLUMNS) + ["structure"] * len(STRUCTURE_COLUMNS)
    )
    full = FeatureMatrix(
        rows=rows,
        X=np.asarray(data, dtype=np.float64),
        y=np.asarray(labels, dtype=np.int64),
        columns=columns,
        column_groups=column_groups,
        groups=tuple(FEATURE_GROUPS),
        target=target,
        exclusions=exclusions,
    )
    return full.subset(groups)
