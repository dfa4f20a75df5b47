"""Stage implementations behind the CLI.

Every stage reads its predecessors' artifacts from the output directory,
verifies their config stamps, writes plain-file artifacts (delimited text
and JSON), and finishes with a manifest carrying its own stamp. Manifests
hold no wall-clock data: two runs with the same config and seed produce
byte-identical output trees. Timings go to the log only.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from bisect import bisect_left
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from datetime import date
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import ingest as ingest_mod
from . import report as report_mod
from . import stats as stats_mod
from .config import RunConfig
from .errors import ConfigError, DataError, InputError, StaleArtifactError
from .features import (
    BEHAVIOR_COLUMNS,
    BEHAVIORAL_SERIES,
    STRUCTURAL_SERIES,
    STRUCTURE_METRICS,
    FeatureMatrix,
    assemble_matrix,
    weekly_behavior,
)
from .graph import Scope, build_edge_set, build_snapshot, compute_metrics
from .learn import Hyperparams, run_experiment
from .learn.ensemble import DEFAULT_BUDGET
from .records import WeekIndex, week_of
from .synth import SynthConfig, generate

log = logging.getLogger(__name__)

MANIFEST = "{stage}_manifest.json"


def parallel_map(fn: Callable, items: Sequence, threads: int) -> list:
    """Map preserving input order; threads > 1 fans out over a pool."""
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# Manifests

def _write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_manifest(out: Path, stage: str, cfg: RunConfig, outputs: Iterable[str]) -> None:
    _write_json(out / stage / MANIFEST.format(stage=stage), {
        "stage": stage,
        "config_hash": cfg.stage_hash(stage),
        "outputs": sorted(outputs),
    })


def require_stage(out: Path, stage: str, cfg: RunConfig) -> None:
    path = out / stage / MANIFEST.format(stage=stage)
    if not path.exists():
        raise InputError(
            f"stage '{stage}' has not produced artifacts in {out}; run `netwell {stage}` first"
        )
    manifest = json.loads(path.read_text())
    expected = cfg.stage_hash(stage)
    if manifest.get("config_hash") != expected:
        raise StaleArtifactError(
            f"artifacts of stage '{stage}' were built under a different configuration "
            f"(stamp {manifest.get('config_hash')}, expected {expected}); re-run `netwell {stage}`"
        )


# ---------------------------------------------------------------------------
# Small readers/writers shared by stages

def _fmt(x: float) -> str:
    return f"{float(x):.12g}"


def _weeks_payload(weeks: list[WeekIndex]) -> list[dict]:
    return [{"index": w.index, "start": w.start.isoformat(), "end": w.end.isoformat()} for w in weeks]


def _weeks_from_payload(payload: list[dict]) -> list[WeekIndex]:
    return [
        WeekIndex(d["index"], date.fromisoformat(d["start"]), date.fromisoformat(d["end"]))
        for d in payload
    ]


def _metric_table_path(out: Path, week_index: int, scope: Scope) -> Path:
    return out / "graph" / f"metrics_w{week_index:02d}_{scope.value}.csv"


METRIC_TABLE_COLUMNS = ("person", *STRUCTURE_METRICS, "closeness_component")


def _read_metric_table(path: Path) -> dict[str, dict[str, float]]:
    out: dict[str, dict[str, float]] = {}
    with path.open() as fh:
        rows = csv.reader(fh)
        header = next(rows)
        for row in rows:
            rec = dict(zip(header, row))
            out[rec["person"]] = {m: float(rec[m]) for m in STRUCTURE_METRICS}
    return out


# ---------------------------------------------------------------------------
# Stages

def stage_synth(cfg: RunConfig, out: Path, threads: int = 1) -> None:
    if cfg.synth is None:
        raise ConfigError("config has no 'synth' section")
    raw = dict(cfg.synth)
    raw.setdefault("seed", cfg.seed)
    raw.setdefault("study_start", cfg.study_start.isoformat())
    if isinstance(raw.get("study_start"), str):
        raw["study_start"] = date.fromisoformat(raw["study_start"])
    synth_cfg = SynthConfig(**raw)
    dataset = generate(synth_cfg, out / "synth")
    write_manifest(out, "synth", cfg, [p.name for p in (
        dataset.comm_path, dataset.wearable_path, dataset.survey_path, dataset.ground_truth_path)])


def stage_ingest(cfg: RunConfig, out: Path, threads: int = 1) -> None:
    weeks = ingest_mod.make_weeks(cfg.study_start, cfg.study_end)
    if not weeks:
        raise DataError("study range yields no full weeks")

    def open_input(kind: str):
        path = cfg.input_path(kind, out)
        if not path.exists():
            raise InputError(f"input file not found: {path}")
        return path

    maps = cfg.column_maps
    with open_input("comm").open() as fh:
        events, comm_report = ingest_mod.parse_comm_log(fh, maps.get("comm"), cfg.delimiter)
    with open_input("wearable").open() as fh:
        minutes, wear_report = ingest_mod.parse_wearable_log(fh, maps.get("wearable"), cfg.delimiter)
    with open_input("survey").open() as fh:
        surveys, survey_report = ingest_mod.parse_survey(fh, maps.get("survey"), cfg.delimiter)

    in_range = lambda ts: week_of(ts, weeks) is not None
    events_kept = [e for e in events if in_range(e.timestamp)]
    minutes_kept = [m for m in minutes if in_range(m.timestamp)]
    mask = ingest_mod.compliance_filter(minutes_kept, weeks, cfg.compliance_threshold)

    stage_dir = out / "ingest"
    stage_dir.mkdir(parents=True, exist_ok=True)
    with (stage_dir / "events.csv").open("w") as fh:
        ingest_mod.write_comm_log(events_kept, fh)
    with (stage_dir / "minutes.csv").open("w") as fh:
        ingest_mod.write_wearable_log(minutes_kept, fh)
    with (stage_dir / "survey.csv").open("w") as fh:
        ingest_mod.write_survey(surveys, fh)
    _write_json(stage_dir / "weeks.json", _weeks_payload(weeks))
    _write_json(stage_dir / "compliance.json", {
        "threshold": cfg.compliance_threshold,
        "retained": {p: mask.retained_weeks(p) for p in mask.persons},
        "week_fraction": {
            p: {str(w.index): round(mask.week_fraction[(p, w.index)], 6) for w in weeks}
            for p in mask.persons
        },
    })
    _write_json(stage_dir / "parse_reports.json", {
        "comm": {**comm_report.as_dict(), "out_of_range": len(events) - len(events_kept)},
        "wearable": {**wear_report.as_dict(), "out_of_range": len(minutes) - len(minutes_kept)},
        "survey": survey_report.as_dict(),
    })
    write_manifest(out, "ingest", cfg, [
        "events.csv", "minutes.csv", "survey.csv", "weeks.json",
        "compliance.json", "parse_reports.json",
    ])


def _load_ingest(out: Path):
    stage_dir = out / "ingest"
    with (stage_dir / "events.csv").open() as fh:
        events, _ = ingest_mod.parse_comm_log(fh)
    with (stage_dir / "survey.csv").open() as fh:
        surveys, _ = ingest_mod.parse_survey(fh)
    weeks = _weeks_from_payload(json.loads((stage_dir / "weeks.json").read_text()))
    compliance = json.loads((stage_dir / "compliance.json").read_text())
    return events, surveys, weeks, compliance


def stage_graph(cfg: RunConfig, out: Path, threads: int = 1) -> None:
    require_stage(out, "ingest", cfg)
    events, surveys, weeks, _ = _load_ingest(out)
    roster = {s.person for s in surveys}
    edge_set = build_edge_set(events, cfg.min_edge_frequency)

    stage_dir = out / "graph"
    stage_dir.mkdir(parents=True, exist_ok=True)
    with (stage_dir / "edge_set.csv").open("w") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["a", "b", "contact_count", "retained"])
        for pair in sorted(edge_set.contact_count):
            w.writerow([pair[0], pair[1], edge_set.contact_count[pair],
                        int(pair in edge_set.edges)])

    jobs = [(week, scope) for week in weeks for scope in (Scope.PARTICIPANT, Scope.WHOLE)]

    # events are timestamp-sorted; hand each snapshot only its week's slice
    timestamps = [e.timestamp for e in events]
    slices = {
        week.index: events[bisect_left(timestamps, week.start_ts):
                           bisect_left(timestamps, week.end_ts)]
        for week in weeks
    }

    def compute(job):
        week, scope = job
        snapshot = build_snapshot(edge_set, slices[week.index], week, scope, roster, weeks)
        return compute_metrics(snapshot)

    started = time.perf_counter()
    tables = parallel_map(compute, jobs, threads)
    log.info("graph metrics over %d snapshots in %.1fs (threads=%d)",
             len(jobs), time.perf_counter() - started, threads)

    outputs = ["edge_set.csv"]
    for (week, scope), nm in zip(jobs, tables):
        path = _metric_table_path(out, week.index, scope)
        persons = sorted(set(nm.nodes) | roster)
        table = nm.as_dict()
        zero = {m: 0.0 for m in STRUCTURE_METRICS}
        with path.open("w") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(METRIC_TABLE_COLUMNS)
            for person in persons:
                row = table.get(person)
                if row is None:
                    w.writerow([person, *(_fmt(zero[m]) for m in STRUCTURE_METRICS), _fmt(0.0)])
                else:
                    i = nm.nodes.index(person)
                    w.writerow([
                        person,
                        *(_fmt(row[m]) for m in STRUCTURE_METRICS),
                        _fmt(nm.closeness_component[i]),
                    ])
        outputs.append(path.name)
    write_manifest(out, "graph", cfg, outputs)


def _load_metrics(out: Path, weeks: list[WeekIndex]):
    """metric value per (scope, metric) -> person -> np.array over weeks.

    Missing persons were isolates; their rows are zero-filled already at
    write time, so absent keys simply mean "not on the roster"."""
    per_scope: dict[Scope, list[dict[str, dict[str, float]]]] = {}
    for scope in (Scope.PARTICIPANT, Scope.WHOLE):
        per_scope[scope] = [
            _read_metric_table(_metric_table_path(out, w.index, scope)) for w in weeks
        ]
    return per_scope


def stage_features(cfg: RunConfig, out: Path, threads: int = 1) -> None:
    require_stage(out, "ingest", cfg)
    require_stage(out, "graph", cfg)
    stage_dir = out / "features"
    stage_dir.mkdir(parents=True, exist_ok=True)
    with (out / "ingest" / "minutes.csv").open() as fh:
        minutes, _ = ingest_mod.parse_wearable_log(fh)
    with (out / "ingest" / "survey.csv").open() as fh:
        surveys, _ = ingest_mod.parse_survey(fh)
    weeks = _weeks_from_payload(json.loads((out / "ingest" / "weeks.json").read_text()))
    compliance = json.loads((out / "ingest" / "compliance.json").read_text())
    mask = _mask_from_payload(compliance, weeks)

    behavior = weekly_behavior(minutes, mask)
    with (stage_dir / "behavior.csv").open("w") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["person", "week", *BEHAVIOR_COLUMNS])
        for (person, wk), feats in behavior.items():
            w.writerow([person, wk, *(_fmt(v) for v in feats.as_vector())])

    per_scope = _load_metrics(out, weeks)
    metrics_map = {}
    for scope, tables in per_scope.items():
        for wk, table in enumerate(tables):
            metrics_map[(wk, scope)] = table
    matrix = assemble_matrix(behavior, _tables_as_node_metrics(metrics_map), surveys, cfg.target)

    matrix_path = stage_dir / f"matrix_{cfg.target}.csv"
    with matrix_path.open("w") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["person", "week", *matrix.columns, "label"])
        for i, (person, wk) in enumerate(matrix.rows):
            w.writerow([person, wk, *(_fmt(v) for v in matrix.X[i]), int(matrix.y[i])])
    _write_json(stage_dir / "exclusions.json", matrix.exclusions)
    write_manifest(out, "features", cfg, ["behavior.csv", matrix_path.name, "exclusions.json"])


class _PlainMetrics:
    """Adapter giving dict-shaped metric tables the NodeMetrics.as_dict face."""

    def __init__(self, table: dict[str, dict[str, float]]):
        self._table = table

    def as_dict(self):
        return self._table


def _tables_as_node_metrics(metrics_map):
    return {key: _PlainMetrics(table) for key, table in metrics_map.items()}


def _mask_from_payload(payload: dict, weeks: list[WeekIndex]) -> ingest_mod.ComplianceMask:
    retained = {}
    week_fraction = {}
    for person, retained_weeks in payload["retained"].items():
        kept = set(retained_weeks)
        for w in weeks:
            retained[(person, w.index)] = w.index in kept
            week_fraction[(person, w.index)] = payload["week_fraction"][person][str(w.index)]
    return ingest_mod.ComplianceMask(
        threshold=payload["threshold"],
        weeks=weeks,
        day_fraction={},
        week_fraction=week_fraction,
        retained=retained,
    )


def _read_behavior(path: Path) -> dict[tuple[str, int], dict[str, float]]:
    out = {}
    with path.open() as fh:
        rows = csv.reader(fh)
        header = next(rows)
        for row in rows:
            rec = dict(zip(header, row))
            key = (rec["person"], int(rec["week"]))
            out[key] = {c: float(rec[c]) for c in BEHAVIOR_COLUMNS}
    return out


def stage_analyze(cfg: RunConfig, out: Path, threads: int = 1) -> None:
    for dep in ("ingest", "graph", "features"):
        require_stage(out, dep, cfg)
    stage_dir = out / "analyze"
    (stage_dir / "boxplot").mkdir(parents=True, exist_ok=True)

    _, surveys, weeks, compliance = _load_ingest(out)
    n_weeks = len(weeks)
    roster = sorted(s.person for s in surveys)
    behavior = _read_behavior(out / "features" / "behavior.csv")
    per_scope = _load_metrics(out, weeks)

    behavioral_series = {
        p: {name: np.full(n_weeks, np.nan) for name in BEHAVIORAL_SERIES} for p in roster
    }
    series_column = {
        "heart_rate": "hr_mean",
        "steps": "steps_daily_mean",
        **{name: f"{name}_daily_mean" for name in BEHAVIORAL_SERIES[2:]},
    }
    for (person, wk), values in behavior.items():
        if person not in behavioral_series:
            continue
        for name in BEHAVIORAL_SERIES:
            behavioral_series[person][name][wk] = values[series_column[name]]

    structural_series = {
        p: {name: np.zeros(n_weeks) for name in STRUCTURAL_SERIES} for p in roster
    }
    for scope in (Scope.PARTICIPANT, Scope.WHOLE):
        for wk, table in enumerate(per_scope[scope]):
            for person in roster:
                row = table.get(person)
                if row is None:
                    continue
                for metric in STRUCTURE_METRICS:
                    structural_series[person][f"{scope.value}_{metric}"][wk] = row[metric]

    census = stats_mod.person_census(
        structural_series, behavioral_series, cfg.correlation_threshold
    )

    # population series over the week's retained cohort, for both sides
    retained_per_week: dict[int, set[str]] = {w.index: set() for w in weeks}
    for person, kept in compliance["retained"].items():
        for wk in kept:
            retained_per_week[wk].add(person)

    def cohort_population(series_by_person: dict, name: str) -> np.ndarray:
        values = np.full(n_weeks, np.nan)
        for wk in range(n_weeks):
            cohort = [
                series_by_person[p][name][wk]
                for p in retained_per_week[wk]
                if p in series_by_person and not np.isnan(series_by_person[p][name][wk])
            ]
            if cohort:
                agg = np.mean if cfg.population_aggregator == "mean" else np.median
                values[wk] = agg(cohort)
        return values

    pop_structural = {name: cohort_population(structural_series, name) for name in STRUCTURAL_SERIES}
    pop_behavioral = {name: cohort_population(behavioral_series, name) for name in BEHAVIORAL_SERIES}
    table = stats_mod.population_table(pop_structural, pop_behavioral)

    # pooled high/low median-split tests + heart-rate ANOVA per question
    tests: dict = {"median_split": [], "anova": {}}
    pooled: dict[str, list[float]] = {name: [] for name in (*STRUCTURAL_SERIES, *BEHAVIORAL_SERIES)}
    for person in roster:
        for wk in range(n_weeks):
            if np.isnan(behavioral_series[person]["heart_rate"][wk]):
                continue
            for name in STRUCTURAL_SERIES:
                pooled[name].append(structural_series[person][name][wk])
            for name in BEHAVIORAL_SERIES:
                pooled[name].append(behavioral_series[person][name][wk])
    family = len(STRUCTURAL_SERIES) * len(BEHAVIORAL_SERIES)
    n_significant = 0
    for s_name in STRUCTURAL_SERIES:
        for b_name in BEHAVIORAL_SERIES:
            result = stats_mod.split_and_test(
                pooled[b_name], pooled[s_name], alpha=cfg.alpha, family=family
            )
            entry = {"structural": s_name, "behavioral": b_name}
            if result is None:
                entry["undefined"] = True
            else:
                entry.update(statistic=round(result.statistic, 10), p_value=result.p_value,
                             significant_after_correction=result.significant_after_correction,
                             family_size=result.family_size)
                n_significant += result.significant_after_correction
            tests["median_split"].append(entry)
    tests["median_split_significant"] = n_significant

    label_by_person = {s.person: s for s in surveys}
    hr_rows = {p: [v for v in behavioral_series[p]["heart_rate"] if not np.isnan(v)] for p in roster}
    for question in ("stress", "happiness", "positive_attitude", "self_health"):
        groups: dict[int, list[float]] = {}
        for person in roster:
            level = label_by_person[person].level(question)
            if level is None:
                continue
            groups.setdefault(level, []).extend(hr_rows[person])
        usable = [g for _, g in sorted(groups.items()) if len(g) >= 2]
        if len(usable) >= 2:
            result = stats_mod.one_way_anova(usable, alpha=cfg.alpha, family=4)
            tests["anova"][question] = {
                "statistic": round(result.statistic, 10),
                "p_value": result.p_value,
                "significant_after_correction": result.significant_after_correction,
                "family_size": result.family_size,
                "n_groups": len(usable),
            }
        else:
            tests["anova"][question] = {"undefined": True}

    outputs = report_mod.write_analysis_tables(
        stage_dir, table, census, tests, {**pop_structural, **pop_behavioral}
    )

    # box-plot-ready per-week quartile series for every feature
    box_outputs = []
    for name in (*BEHAVIORAL_SERIES, *STRUCTURAL_SERIES):
        source = behavioral_series if name in BEHAVIORAL_SERIES else structural_series
        rows = []
        for wk in range(n_weeks):
            cohort = [
                source[p][name][wk] for p in retained_per_week[wk]
                if p in source and not np.isnan(source[p][name][wk])
            ]
            rows.append(report_mod.boxplot_row(wk, cohort))
        path = stage_dir / "boxplot" / f"{name}.csv"
        report_mod.write_boxplot_series(path, rows)
        box_outputs.append(f"boxplot/{name}.csv")

    write_manifest(out, "analyze", cfg, outputs + box_outputs)


def stage_train(cfg: RunConfig, out: Path, threads: int = 1) -> None:
    require_stage(out, "features", cfg)
    matrix = _read_matrix(out / "features" / f"matrix_{cfg.target}.csv", cfg.target)
    grids = _parse_grids(cfg.classifiers.get("grids"))
    started = time.perf_counter()
    report = run_experiment(
        matrix,
        seed=int(cfg.split.get("seed", cfg.seed)),
        split_mode=cfg.split["mode"],
        train_fraction=float(cfg.split["train_fraction"]),
        grids=grids,
        base=tuple(cfg.classifiers.get("base", ("svm", "knn", "rf"))),
        folds=int(cfg.classifiers.get("folds", 5)),
        weight_step=float(cfg.ensemble.get("step", 0.1)),
        weight_mode=cfg.ensemble.get("mode", "auto"),
        weight_budget=int(cfg.ensemble.get("budget", DEFAULT_BUDGET)),
    )
    log.info("experiment for target=%s in %.1fs", cfg.target, time.perf_counter() - started)
    payload = {
        "target": report.target,
        "base": list(report.base),
        "split": report.split,
        "ablations": {
            name: {
                "groups": list(res.groups),
                "macro_f1": res.eval.macro_f1,
                "per_class_f1": {str(k): v for k, v in sorted(res.eval.per_class.items())},
                "unevaluated_classes": res.eval.unevaluated_classes,
                "hyperparams": {k: asdict(v) for k, v in res.hyperparams.items()},
                "cv_macro_f1": res.cv_scores,
                "ensemble": res.weights.as_dict(),
            }
            for name, res in report.ablations.items()
        },
    }
    stage_dir = out / "train"
    stage_dir.mkdir(parents=True, exist_ok=True)
    _write_json(stage_dir / "run_manifest.json", payload)
    write_manifest(out, "train", cfg, ["run_manifest.json"])


def _read_matrix(path: Path, target: str) -> FeatureMatrix:
    if not path.exists():
        raise InputError(f"feature matrix not found: {path}")
    with path.open() as fh:
        rows = csv.reader(fh)
        header = next(rows)
        columns = header[2:-1]
        keys = []
        data = []
        labels = []
        for row in rows:
            keys.append((row[0], int(row[1])))
            data.append([float(v) for v in row[2:-1]])
            labels.append(int(row[-1]))
    groups = []
    for c in columns:
        if c == "gender":
            groups.append("gender")
        elif c in BEHAVIOR_COLUMNS:
            groups.append("behavior")
        else:
            groups.append("structure")
    return FeatureMatrix(
        rows=keys,
        X=np.asarray(data, dtype=np.float64),
        y=np.asarray(labels, dtype=np.int64),
        columns=list(columns),
        column_groups=groups,
        groups=("gender", "behavior", "structure"),
        target=target,
        exclusions={},
    )


def _parse_grids(raw) -> dict[str, tuple[Hyperparams, ...]] | None:
    if raw is None:
        return None
    grids = {}
    for kind, points in raw.items():
        grids[kind] = tuple(Hyperparams(**point) for point in points)
    return grids


def stage_report(cfg: RunConfig, out: Path, threads: int = 1) -> None:
    for dep in ("analyze", "train"):
        require_stage(out, dep, cfg)
    prediction = json.loads((out / "train" / "run_manifest.json").read_text())
    outputs = report_mod.emit_tables(out / "analyze", prediction, out / "report")
    write_manifest(out, "report", cfg, [p.name for p in outputs])


STAGE_FUNCS = {
    "synth": stage_synth,
    "ingest": stage_ingest,
    "graph": stage_graph,
    "features": stage_features,
    "analyze": stage_analyze,
    "train": stage_train,
    "report": stage_report,
}


def run_stage(stage: str, cfg: RunConfig, out: Path, threads: int = 1) -> None:
    started = time.perf_counter()
    STAGE_FUNCS[stage](cfg, out, threads)
    log.info("stage %s done in %.1fs", stage, time.perf_counter() - started)


def run_all(cfg: RunConfig, out: Path, threads: int = 1) -> None:
    stages = ["ingest", "graph", "features", "analyze", "train", "report"]
    if cfg.synth is not None:
        stages.insert(0, "synth")
    for stage in stages:
        run_stage(stage, cfg, out, threads)
