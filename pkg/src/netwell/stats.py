"""Structure-behavior correlation analysis and significance tests.

The correlation measure is the zero-lag normalized cross-correlation with
mean subtraction, which on the overlapping weeks equals the Pearson
coefficient. Undefined values (short overlap, zero variance) are NaN and
are excluded from every census, never coerced to zero.

Distribution tails come from the regularized incomplete beta function; the
statistics themselves (Welch t, Welch-Satterthwaite df, one-way F) are
computed here from first principles so they can be cross-checked against
an independent reference implementation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.special import betainc

MIN_OVERLAP = 3


# ---------------------------------------------------------------------------
# Weekly series

@dataclass(frozen=True)
class WeeklySeries:
    """A per-week value sequence; missing weeks are NaN."""

    owner: str
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))

    @property
    def defined(self) -> np.ndarray:
        return ~np.isnan(self.values)


def population_series(
    per_person: Mapping[str, np.ndarray], n_weeks: int, aggregator: str = "mean"
) -> np.ndarray:
    """Per-week aggregate over the persons with data that week."""
    if aggregator not in ("mean", "median"):
        raise ValueError(f"unknown aggregator {aggregator!r}")
    stacked = np.full((len(per_person), n_weeks), np.nan)
    for i, person in enumerate(sorted(per_person)):
        stacked[i, :] = per_person[person]
    with np.errstate(all="ignore"):
        if aggregator == "mean":
            return np.nanmean(stacked, axis=0) if len(per_person) else np.full(n_weeks, np.nan)
        return np.nanmedian(stacked, axis=0) if len(per_person) else np.full(n_weeks, np.nan)


# ---------------------------------------------------------------------------
# Normalized cross-correlation

def ncc(x: np.ndarray, y: np.ndarray, lag: int = 0, min_overlap: int = MIN_OVERLAP) -> float:
    """Zero-lag (by default) normalized cross-correlation of two weekly
    series, NaN-aware.

    x[t] is paired with y[t + lag]; both series are mean-subtracted over
    the overlap and scaled by their norms, i.e. the Pearson coefficient of
    the overlapping pairs. Returns NaN when fewer than ``min_overlap``
    pairs exist or either side is constant.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if lag > 0:
        x, y = x[:-lag or None], y[lag:]
    elif lag < 0:
        x, y = x[-lag:], y[:lag]
    k = min(len(x), len(y))
    x, y = x[:k], y[:k]
    both = ~np.isnan(x) & ~np.isnan(y)
    if both.sum() < min_overlap:
        return float("nan")
    xv = x[both] - x[both].mean()
    yv = y[both] - y[both].mean()
    nx = math.sqrt(float(xv @ xv))
    ny = math.sqrt(float(yv @ yv))
    if nx == 0.0 or ny == 0.0:
        return float("nan")
    return float(xv @ yv) / (nx * ny)


def _pearson_rows(A: np.ndarray, B: np.ndarray, min_overlap: int = MIN_OVERLAP) -> np.ndarray:
    """ncc of every row of A against every row of B; NaN where undefined.

    When all rows of A share one missing pattern and all rows of B share
    another (the pipeline case: structural series cover every week,
    behavioral series cover the retained weeks), the whole block is one
    centered matrix product. Otherwise each pair falls back to ncc with
    its own pairwise overlap.
    """
    nanA = np.isnan(A)
    nanB = np.isnan(B)
    uniform = (nanA == nanA[0]).all() and (nanB == nanB[0]).all()
    if not uniform:
        out = np.full((A.shape[0], B.shape[0]), np.nan)
        for i in range(A.shape[0]):
            for j in range(B.shape[0]):
                out[i, j] = ncc(A[i], B[j], min_overlap=min_overlap)
        return out
    mask = ~nanA[0] & ~nanB[0]
    out = np.full((A.shape[0], B.shape[0]), np.nan)
    if mask.sum() < min_overlap:
        return out
    Am = A[:, mask]
    Bm = B[:, mask]
    Ac = Am - Am.mean(axis=1, keepdims=True)
    Bc = Bm - Bm.mean(axis=1, keepdims=True)
    na = np.sqrt((Ac * Ac).sum(axis=1))
    nb = np.sqrt((Bc * Bc).sum(axis=1))
    good = np.outer(na > 0, nb > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = (Ac @ Bc.T) / np.outer(na, nb)
    out[good] = r[good]
    return out


# ---------------------------------------------------------------------------
# Population-level correlation table

@dataclass(frozen=True)
class CorrelationTable:
    """Structural-by-behavioral correlation matrix of population series."""

    structural_names: tuple[str, ...]
    behavioral_names: tuple[str, ...]
    values: np.ndarray  # (n_struct, n_behav), NaN undefined
    count_ge_05: int
    count_ge_07: int
    n_defined: int

    def entry(self, structural: str, behavioral: str) -> float:
        i = self.structural_names.index(structural)
        j = self.behavioral_names.index(behavioral)
        return float(self.values[i, j])


def population_table(
    structural: Mapping[str, np.ndarray],
    behavioral: Mapping[str, np.ndarray],
) -> CorrelationTable:
    """Correlate every (structural, behavioral) pair of population series.

    Also counts how many defined entries reach |r| >= 0.5 and >= 0.7.
    """
    s_names = tuple(structural)
    b_names = tuple(behavioral)
    values = np.full((len(s_names), len(b_names)), np.nan)
    for i, sn in enumerate(s_names):
        for j, bn in enumerate(b_names):
            values[i, j] = ncc(structural[sn], behavioral[bn])
    defined = ~np.isnan(values)
    absval = np.abs(values[defined])
    return CorrelationTable(
        structural_names=s_names,
        behavioral_names=b_names,
        values=values,
        count_ge_05=int((absval >= 0.5).sum()),
        count_ge_07=int((absval >= 0.7).sum()),
        n_defined=int(defined.sum()),
    )


# ---------------------------------------------------------------------------
# Per-person census

@dataclass(frozen=True)
class CorrelationCensus:
    """How many people show medium-to-strong structure-behavior coupling."""

    threshold: float
    n_persons: int
    pair_counts: dict  # (structural, behavioral) -> count of persons
    by_behavior: dict  # behavioral -> {"participant": n, "whole": n, "either": n}
    uncorrelatable: int


def person_census(
    structural: Mapping[str, Mapping[str, np.ndarray]],
    behavioral: Mapping[str, Mapping[str, np.ndarray]],
    threshold: float = 0.5,
) -> CorrelationCensus:
    """Count persons with |r| >= threshold per pair and per behavioral
    feature aggregated over each network scope.

    ``structural[person][name]`` and ``behavioral[person][name]`` are
    aligned weekly series. Persons whose every pair is undefined land in
    the uncorrelatable bucket. Scope is read from the structural name
    prefix ("participant_..." / "whole_...").
    """
    persons = sorted(set(structural) & set(behavioral))
    s_names = _consistent_names(structural, persons)
    b_names = _consistent_names(behavioral, persons)
    pair_counts = {(sn, bn): 0 for sn in s_names for bn in b_names}
    by_behavior = {bn: {"participant": 0, "whole": 0, "either": 0} for bn in b_names}
    uncorrelatable = 0

    for person in persons:
        A = np.vstack([structural[person][sn] for sn in s_names])
        B = np.vstack([behavioral[person][bn] for bn in b_names])
        r = _pearson_rows(A, B)
        flagged = np.abs(r) >= threshold  # NaN compares False
        if np.isnan(r).all():
            uncorrelatable += 1
            continue
        for i, sn in enumerate(s_names):
            for j, bn in enumerate(b_names):
                if flagged[i, j]:
                    pair_counts[(sn, bn)] += 1
        for j, bn in enumerate(b_names):
            part = any(
                flagged[i, j] for i, sn in enumerate(s_names) if sn.startswith("participant_")
            )
            whole = any(
                flagged[i, j] for i, sn in enumerate(s_names) if sn.startswith("whole_")
            )
            by_behavior[bn]["participant"] += part
            by_behavior[bn]["whole"] += whole
            by_behavior[bn]["either"] += part or whole
    return CorrelationCensus(
        threshold=threshold,
        n_persons=len(persons),
        pair_counts=pair_counts,
        by_behavior=by_behavior,
        uncorrelatable=uncorrelatable,
    )


def _consistent_names(series: Mapping[str, Mapping[str, np.ndarray]], persons) -> tuple[str, ...]:
    names: tuple[str, ...] | None = None
    for p in persons:
        current = tuple(series[p])
        if names is None:
            names = current
        elif names != current:
            raise ValueError(f"person {p!r} has inconsistent series names")
    return names or ()


# ---------------------------------------------------------------------------
# Hypothesis tests

@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    significant_after_correction: bool
    family_size: int
    df: float = float("nan")
    degenerate: bool = False


def _t_sf_two_sided(t: float, df: float) -> float:
    """Two-sided tail probability of Student's t via the incomplete beta."""
    if math.isinf(t):
        return 0.0
    x = df / (df + t * t)
    return float(betainc(df / 2.0, 0.5, x))


def _f_sf(f: float, d1: float, d2: float) -> float:
    """Upper tail of the F distribution via the incomplete beta."""
    if math.isinf(f):
        return 0.0
    x = d2 / (d2 + d1 * f)
    return float(betainc(d2 / 2.0, d1 / 2.0, x))


def _bonferroni(p: float, alpha: float, family: int) -> bool:
    return p <= alpha / family


def welch_t_test(
    a: Sequence[float],
    b: Sequence[float],
    alpha: float = 0.05,
    family: int = 1,
) -> TestResult:
    """Welch's unequal-variance t test with Welch-Satterthwaite df.

    Degenerate inputs (both samples constant) yield p = 1 for equal means
    and p = 0 for different means, flagged as degenerate.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na, nb = len(a), len(b)
    if na < 2 or nb < 2:
        raise ValueError("each sample needs at least 2 observations")
    ma, mb = a.mean(), b.mean()
    va = a.var(ddof=1)
    vb = b.var(ddof=1)
    if va == 0.0 and vb == 0.0:
        if ma == mb:
            return TestResult(0.0, 1.0, _bonferroni(1.0, alpha, family), family, float("nan"), True)
        t = math.inf if ma > mb else -math.inf
        return TestResult(t, 0.0, _bonferroni(0.0, alpha, family), family, float("nan"), True)
    sea = va / na
    seb = vb / nb
    t = float((ma - mb) / math.sqrt(sea + seb))
    df = (sea + seb) ** 2 / (sea**2 / (na - 1) + seb**2 / (nb - 1))
    p = _t_sf_two_sided(t, df)
    return TestResult(t, p, _bonferroni(p, alpha, family), family, float(df))


def one_way_anova(
    groups: Sequence[Sequence[float]],
    alpha: float = 0.05,
    family: int = 1,
) -> TestResult:
    """One-way ANOVA F test (between-group MS over within-group MS)."""
    if len(groups) < 2:
        raise ValueError("need at least 2 groups")
    arrays = [np.asarray(g, dtype=np.float64) for g in groups]
    if any(len(g) < 2 for g in arrays):
        raise ValueError("each group needs at least 2 observations")
    all_values = np.concatenate(arrays)
    grand = all_values.mean()
    k = len(arrays)
    n_total = len(all_values)
    ss_between = sum(len(g) * (g.mean() - grand) ** 2 for g in arrays)
    ss_within = sum(float(((g - g.mean()) ** 2).sum()) for g in arrays)
    df_between = k - 1
    df_within = n_total - k
    if ss_within == 0.0:
        if ss_between == 0.0:
            return TestResult(0.0, 1.0, _bonferroni(1.0, alpha, family), family, float("nan"), True)
        return TestResult(math.inf, 0.0, _bonferroni(0.0, alpha, family), family, float("nan"), True)
    f = float((ss_between / df_between) / (ss_within / df_within))
    p = _f_sf(f, df_between, df_within)
    return TestResult(f, p, _bonferroni(p, alpha, family), family, float(df_within))


def split_and_test(
    behavioral: Sequence[float],
    structural: Sequence[float],
    alpha: float = 0.05,
    family: int = 60,
) -> TestResult | None:
    """Split paired observations at the structural median and Welch-test
    the behavioral values of the high half against the low half.

    The split is rank-based (strictly above the median vs at-or-below), so
    it is invariant under monotone transforms of the structural values.
    Returns None when either half has fewer than 2 observations.
    """
    behavioral = np.asarray(behavioral, dtype=np.float64)
    structural = np.asarray(structural, dtype=np.float64)
    if behavioral.shape != structural.shape:
        raise ValueError("behavioral and structural samples must be paired")
    med = np.median(structural)
    high = behavioral[structural > med]
    low = behavioral[structural <= med]
    if len(high) < 2 or len(low) < 2:
        return None
    return welch_t_test(high, low, alpha=alpha, family=family)
