import math
from datetime import date

import numpy as np
import pytest

from netwell.errors import DataError, InternalContradictionError
from netwell.features import (
    BEHAVIOR_COLUMNS,
    STRUCTURE_COLUMNS,
    assemble_matrix,
    behavior_features,
    weekly_behavior,
)
from netwell.graph import Scope
from netwell.ingest import compliance_filter, make_weeks
from netwell.learn.classifiers import Standardizer
from netwell.records import ActivityState, Gender, MinuteRecord, SurveyRecord

WEEKS = make_weeks(date(2016, 8, 1), date(2016, 8, 29))
W0 = WEEKS[0]


def minute(person, ts, hr=70.0, steps=0, state=None):
    return MinuteRecord(person, ts, hr, steps, state, None)


def week_minutes(person, week, per_day_minutes=10, hr=70.0, steps_per_minute=0,
                 state=None, days=range(7)):
    out = []
    for d in days:
        base = week.start_ts + d * 86400
        for i in range(per_day_minutes):
            out.append(minute(person, base + 60 * i, hr, steps_per_minute, state))
    return out


class TestBehaviorFeatures:
    def test_constant_heart_rate(self):
        feats = behavior_features(week_minutes("A", W0, hr=70.0), W0)
        assert feats.hr_mean == 70.0
        assert feats.hr_var == 0.0

    def test_identical_daily_steps(self):
        records = week_minutes("A", W0, per_day_minutes=10, steps_per_minute=700)
        feats = behavior_features(records, W0)
        assert feats.steps_daily_mean == 7000.0
        assert feats.steps_daily_std == 0.0

    def test_alternating_very_active_minutes(self):
        counts = [30, 60, 30, 60, 30, 60, 30]
        records = []
        for d, c in enumerate(counts):
            base = W0.start_ts + d * 86400
            records.extend(
                minute("A", base + 60 * i, 70.0, 0, ActivityState.VERY_ACTIVE) for i in range(c)
            )
        feats = behavior_features(records, W0)
        va = ActivityState.VERY_ACTIVE
        assert feats.state_daily_mean[va] == pytest.approx(300 / 7)
        assert feats.state_daily_std[va] == pytest.approx(math.sqrt(14400 / 49), abs=1e-3)
        assert feats.state_daily_std[va] == pytest.approx(14.846, abs=1e-3)

    def test_no_heart_rate_contradiction(self):
        records = [minute("A", W0.start_ts, hr=None)]
        with pytest.raises(InternalContradictionError):
            behavior_features(records, W0)

    def test_state_minutes_bounded_by_day(self):
        records = week_minutes("A", W0, per_day_minutes=100, state=ActivityState.SEDENTARY)
        feats = behavior_features(records, W0)
        total = sum(feats.state_daily_mean.values())
        assert total <= 1440

    def test_weekly_behavior_only_retained_weeks(self):
        records = week_minutes("A", WEEKS[0], per_day_minutes=1440)
        records += week_minutes("A", WEEKS[1], per_day_minutes=10)
        mask = compliance_filter(records, WEEKS, threshold=0.8)
        feats = weekly_behavior(records, mask)
        assert ("A", 0) in feats
        assert ("A", 1) not in feats


class FakeMetrics:
    def __init__(self, table):
        self._table = table

    def as_dict(self):
        return self._table


def behavior_map(persons, weeks_idx):
    records = {}
    for p in persons:
        for w in weeks_idx:
            records[(p, w)] = behavior_features(week_minutes(p, WEEKS[w]), WEEKS[w])
    return records


def metrics_map(persons, weeks_idx, value=1.0):
    metric_names = ("degree", "triangles", "clustering", "betweenness", "closeness")
    table = {p: {m: value for m in metric_names} for p in persons}
    return {
        (w, scope): FakeMetrics(table)
        for w in weeks_idx
        for scope in (Scope.PARTICIPANT, Scope.WHOLE)
    }


def survey(person, stress=3):
    return SurveyRecord(person, Gender.FEMALE, stress, 2, 4, 3)


class TestAssembleMatrix:
    def test_label_replicated_across_weeks(self):
        behavior = behavior_map(["A"], range(4))
        matrix = assemble_matrix(behavior, metrics_map(["A"], range(4)), [survey("A", 3)], "stress")
        assert len(matrix.rows) == 4
        assert (matrix.y == 3).all()

    def test_missing_survey_counted(self):
        behavior = behavior_map(["A", "B"], [0])
        matrix = assemble_matrix(behavior, metrics_map(["A", "B"], [0]), [survey("A")], "stress")
        assert len(matrix.rows) == 1
        assert matrix.exclusions["no_survey"] == 1

    def test_missing_label_counted(self):
        behavior = behavior_map(["A", "B"], [0])
        surveys = [survey("A"), SurveyRecord("B", Gender.MALE, None, 1, 1, 1)]
        matrix = assemble_matrix(behavior, metrics_map(["A", "B"], [0]), surveys, "stress")
        assert matrix.exclusions["missing_label"] == 1

    def test_structure_only_columns(self):
        behavior = behavior_map(["A"], [0])
        matrix = assemble_matrix(
            behavior, metrics_map(["A"], [0]), [survey("A")], "stress", groups=("structure",)
        )
        assert matrix.columns == list(STRUCTURE_COLUMNS)
        assert matrix.X.shape == (1, 10)

    def test_group_composition(self):
        behavior = behavior_map(["A"], [0])
        full = assemble_matrix(behavior, metrics_map(["A"], [0]), [survey("A")], "stress")
        gb = full.subset(("gender", "behavior"))
        assert gb.columns == ["gender", *BEHAVIOR_COLUMNS]
        g = full.subset(("gender",))
        b = full.subset(("behavior",))
        assert gb.columns == g.columns + b.columns

    def test_missing_person_in_metrics_gets_zeros(self):
        behavior = behavior_map(["A"], [0])
        metrics = metrics_map([], [0])  # nobody in the tables
        matrix = assemble_matrix(behavior, metrics, [survey("A")], "stress")
        structure = matrix.X[0, -10:]
        assert (structure == 0).all()

    def test_empty_join_raises(self):
        behavior = behavior_map(["A"], [0])
        with pytest.raises(DataError, match="no rows survive"):
            assemble_matrix(behavior, metrics_map(["A"], [0]), [survey("B")], "stress")

    def test_gender_encoding(self):
        behavior = behavior_map(["A", "B"], [0])
        surveys = [survey("A"), SurveyRecord("B", Gender.MALE, 2, 2, 2, 2)]
        matrix = assemble_matrix(behavior, metrics_map(["A", "B"], [0]), surveys, "stress")
        by_person = dict(zip((p for p, _ in matrix.rows), matrix.X[:, 0]))
        assert by_person == {"A": 1.0, "B": 0.0}

    def test_row_count_matches_exclusion_ledger(self):
        persons = [f"P{i}" for i in range(6)]
        behavior = behavior_map(persons, range(3))
        surveys = [survey(p) for p in persons[:4]]
        surveys[3] = SurveyRecord(persons[3], Gender.MALE, None, 1, 1, 1)
        matrix = assemble_matrix(behavior, metrics_map(persons, range(3)), surveys, "stress")
        total = len(behavior)
        assert len(matrix.rows) + matrix.exclusions["no_survey"] + matrix.exclusions["missing_label"] == total


class TestStandardizer:
    def test_train_columns_standardized(self):
        rng = np.random.default_rng(0)
        X = rng.normal(5, 3, size=(50, 4))
        X[:, 2] = 7.0  # constant column
        s = Standardizer().fit(X)
        Z = s.transform(X)
        assert np.allclose(Z.mean(axis=0), 0.0, atol=1e-9)
        stds = Z.std(axis=0)
        assert np.allclose(stds[[0, 1, 3]], 1.0, atol=1e-9)
        assert (Z[:, 2] == 0).all()

    def test_parameters_from_training_rows_only(self):
        X_train = np.zeros((10, 1))
        X_test = np.ones((5, 1)) * 10
        s = Standardizer().fit(X_train)
        assert (s.transform(X_test) == 0).all()  # constant train column maps all to 0
