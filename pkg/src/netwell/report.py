"""Paper-shaped output artifacts: correlation tables, censuses, the test
ledger, box-plot-ready quartile series, and the prediction table with its
relative-improvement row."""

from __future__ import annotations

import csv
import json
import math
import shutil
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InputError
from .records import WELLNESS_LEVELS
from .stats import CorrelationCensus, CorrelationTable


def improvement_percent(baseline: float, combined: float) -> int | None:
    """Relative improvement in whole percents, rounded half to even;
    None (rendered "n/a") when the baseline is zero."""
    if baseline == 0:
        return None
    return round((combined - baseline) / baseline * 100)


def _cell(value) -> str:
    if value is None:
        return "n/a"
    if isinstance(value, float):
        if math.isnan(value):
            return "n/a"
        return f"{value:.12g}"
    return str(value)


# ---------------------------------------------------------------------------
# Box-plot series

def boxplot_row(week: int, values: Sequence[float]) -> dict:
    """Five-number summary plus mean for one week's cohort."""
    if len(values) == 0:
        return {"week": week, "min": None, "q1": None, "median": None,
                "mean": None, "q3": None, "max": None}
    arr = np.asarray(values, dtype=np.float64)
    return {
        "week": week,
        "min": float(arr.min()),
        "q1": float(np.quantile(arr, 0.25)),
        "median": float(np.quantile(arr, 0.5)),
        "mean": float(arr.mean()),
        "q3": float(np.quantile(arr, 0.75)),
        "max": float(arr.max()),
    }


BOXPLOT_COLUMNS = ("week", "min", "q1", "median", "mean", "q3", "max")


def write_boxplot_series(path: Path, rows: Sequence[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BOXPLOT_COLUMNS)
        for row in rows:
            w.writerow([_cell(row[c]) for c in BOXPLOT_COLUMNS])


# ---------------------------------------------------------------------------
# Analysis tables (written by the analyze stage into its own directory)

def write_analysis_tables(
    dest: Path,
    table: CorrelationTable,
    census: CorrelationCensus,
    tests: dict,
    population_series: dict[str, np.ndarray],
) -> list[str]:
    """Write the population correlation table, the two censuses, the test
    ledger, and the raw population series. Returns artifact names."""
    dest.mkdir(parents=True, exist_ok=True)
    outputs = []

    with (dest / "population_table.csv").open("w") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["structural", *table.behavioral_names])
        for i, sn in enumerate(table.structural_names):
            w.writerow([sn, *(_cell(float(v)) for v in table.values[i])])
    outputs.append("population_table.csv")

    with (dest / "population_counts.json").open("w") as fh:
        json.dump({
            "n_defined": table.n_defined,
            "abs_ge_0.5": table.count_ge_05,
            "abs_ge_0.7": table.count_ge_07,
            "n_pairs": len(table.structural_names) * len(table.behavioral_names),
        }, fh, indent=2, sort_keys=True)
        fh.write("\n")
    outputs.append("population_counts.json")

    b_names = list(table.behavioral_names)
    with (dest / "census_pairs.csv").open("w") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["structural", *b_names])
        for sn in table.structural_names:
            w.writerow([sn, *(census.pair_counts[(sn, bn)] for bn in b_names)])
    outputs.append("census_pairs.csv")

    with (dest / "census_summary.csv").open("w") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["behavioral", "participant", "whole", "either",
                    "n_persons", "uncorrelatable", "threshold"])
        for bn in b_names:
            row = census.by_behavior[bn]
            w.writerow([bn, row["participant"], row["whole"], row["either"],
                        census.n_persons, census.uncorrelatable, _cell(census.threshold)])
    outputs.append("census_summary.csv")

    with (dest / "tests.json").open("w") as fh:
        json.dump(tests, fh, indent=2, sort_keys=True)
        fh.write("\n")
    outputs.append("tests.json")

    with (dest / "population_series.csv").open("w") as fh:
        w = csv.writer(fh, lineterminator="\n")
        names = list(population_series)
        w.writerow(["week", *names])
        n_weeks = len(next(iter(population_series.values())))
        for wk in range(n_weeks):
            w.writerow([wk, *(_cell(float(population_series[n][wk])) for n in names)])
    outputs.append("population_series.csv")
    return outputs


# ---------------------------------------------------------------------------
# Prediction table (the ablation rows + improvement row)

ABLATION_LABELS = {
    "gender_behavior": "gender + health behavior data",
    "structure": "social network structures",
    "combined": "gender + health behavior data + social network",
}


def prediction_table(prediction: dict) -> list[list[str]]:
    """Rows of the per-target prediction table: one row per ablation with
    overall and per-level F1, then the relative improvement of the
    combined ablation over the gender+behavior baseline."""
    target = prediction["target"]
    lo, hi = WELLNESS_LEVELS[target]
    levels = list(range(lo, hi + 1))
    header = ["features", "f1", *(f"level{v}" for v in levels)]
    rows = [header]
    by_name = prediction["ablations"]
    for name in ("gender_behavior", "structure", "combined"):
        res = by_name[name]
        per_class = {int(k): v for k, v in res["per_class_f1"].items()}
        rows.append([
            ABLATION_LABELS[name],
            _cell(round(res["macro_f1"], 4)),
            *(_cell(round(per_class[v], 4)) if v in per_class else "n/a" for v in levels),
        ])
    base = by_name["gender_behavior"]
    comb = by_name["combined"]
    base_per = {int(k): v for k, v in base["per_class_f1"].items()}
    comb_per = {int(k): v for k, v in comb["per_class_f1"].items()}
    improvement = ["improvement", _fmt_improvement(base["macro_f1"], comb["macro_f1"])]
    for v in levels:
        if v in base_per and v in comb_per:
            improvement.append(_fmt_improvement(base_per[v], comb_per[v]))
        else:
            improvement.append("n/a")
    rows.append(improvement)
    return rows


def _fmt_improvement(baseline: float, combined: float) -> str:
    pct = improvement_percent(baseline, combined)
    return "n/a" if pct is None else f"{pct}%"


def emit_tables(analyze_dir: Path, prediction: dict, dest: Path) -> list[Path]:
    """Assemble the final report directory from the analysis artifacts and
    the training results. Deterministic: identical inputs give identical
    bytes."""
    analyze_dir = Path(analyze_dir)
    dest = Path(dest)
    if not analyze_dir.exists():
        raise InputError("missing upstream artifact: stage 'analyze' has not run")
    if not prediction:
        raise InputError("missing upstream artifact: stage 'train' has not run")
    dest.mkdir(parents=True, exist_ok=True)
    outputs: list[Path] = []

    copies = [
        "population_table.csv", "population_counts.json", "census_pairs.csv",
        "census_summary.csv", "tests.json", "population_series.csv",
    ]
    for name in copies:
        src = analyze_dir / name
        if not src.exists():
            raise InputError(f"missing upstream artifact: {name} (stage 'analyze')")
        target_path = dest / name
        shutil.copyfile(src, target_path)
        outputs.append(target_path)

    box_src = analyze_dir / "boxplot"
    if box_src.exists():
        for src in sorted(box_src.glob("*.csv")):
            target_path = dest / f"boxplot_{src.name}"
            shutil.copyfile(src, target_path)
            outputs.append(target_path)

    table_path = dest / f"prediction_{prediction['target']}.csv"
    with table_path.open("w") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in prediction_table(prediction):
            w.writerow(row)
    outputs.append(table_path)

    manifest_path = dest / "manifest.json"
    manifest_path.write_text(json.dumps(
        {"files": sorted(p.name for p in outputs)}, indent=2, sort_keys=True
    ) + "\n")
    outputs.append(manifest_path)
    return outputs
