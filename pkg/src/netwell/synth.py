"""Synthetic communication logs, wearable streams, and surveys with
planted structure-behavior couplings and label signals.

The latent model, per participant p and week w:

    season g_w          ~ N(0,1), shared by everyone
    social trait m_p    ~ N(0,1), stable over the study
    social deviation    d_pw = a*g_w + sqrt(1-a^2)*noise   (unit variance)
    sociability         z_pw = trait_weight*m_p + d_pw
    behavior deviation  x_pw = rho_eff*d_pw + sqrt(1-rho_eff^2)*noise  (coupled persons)
                        x_pw = noise                               (uncoupled)
    behavior level      v_pw = behavior_trait_weight*b_p + x_pw

Contact volume follows z (so weekly degree tracks the social deviation);
daily steps, heart rate, and very-active minutes follow v. rho_eff is
inflated from the requested coupling so that the *realized* correlation
between the planted social deviation and the noisy weekly steps series
lands on coupling_rho; a request beyond what the noise allows is refused
with the achievable bound. Labels come from rank-quantile bins of the
trait named by label_signal, then label noise replaces a fraction with
uniform levels.

Every draw comes from one seeded generator consumed in a fixed order, so
a repeated seed reproduces the files byte for byte.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .ingest import make_weeks, write_comm_log, write_survey
from .records import (
    MINUTES_PER_DAY,
    WELLNESS_LEVELS,
    CommEvent,
    CommKind,
    Gender,
    SurveyRecord,
)

LABEL_SIGNALS = ("none", "structural", "behavioral", "mixed")

# activity state -> emitted hr zone (zones are parsed downstream but unused)
_STATE_ZONE = {
    "sedentary": "out_of_range",
    "lightly_active": "fat_burn",
    "fairly_active": "cardio",
    "very_active": "peak",
}


@dataclass(frozen=True)
class SynthConfig:
    n_participants: int = 100
    n_outsiders: int = 60
    n_weeks: int = 22
    coupling_rho: float = 0.0
    coupled_fraction: float = 0.0
    label_signal: str = "none"
    label_noise: float = 0.0
    seed: int = 0
    study_start: date = date(2016, 8, 1)
    # realization knobs
    minutes_per_day: int = 48
    partners_participant: int = 10
    partners_outsider: int = 10
    select_base: float = 6.0
    select_gain: float = 3.0
    events_per_contact: int = 3
    spam_rate: float = 0.25  # chance of a one-off stranger contact per person-week
    # latent-model constants
    season_weight: float = 0.6
    trait_weight: float = 1.2
    behavior_trait_weight: float = 1.2
    steps_base: float = 7000.0
    steps_gain: float = 1500.0
    steps_day_noise: float = 400.0
    hr_base: float = 72.0
    hr_person_spread: float = 5.0
    hr_gain: float = 3.0
    hr_minute_noise: float = 6.0
    active_base: float = 0.10
    active_gain: float = 0.06

    def __post_init__(self):
        if self.n_participants < 2 or self.n_weeks < 3:
            raise ConfigError("need at least 2 participants and 3 weeks")
        if not (-1.0 <= self.coupling_rho <= 1.0):
            raise ConfigError("coupling_rho must be in [-1, 1]")
        if not (0.0 <= self.coupled_fraction <= 1.0):
            raise ConfigError("coupled_fraction must be in [0, 1]")
        if not (0.0 <= self.label_noise <= 1.0):
            raise ConfigError("label_noise must be in [0, 1]")
        if self.label_signal not in LABEL_SIGNALS:
            raise ConfigError(f"label_signal must be one of {LABEL_SIGNALS}")
        if MINUTES_PER_DAY % self.minutes_per_day != 0:
            raise ConfigError("minutes_per_day must divide 1440")

    @property
    def rho_achievable(self) -> float:
        """Largest |coupling| the steps noise permits: attenuation of the
        weekly steps mean (7 daily draws plus per-minute Poisson scatter)."""
        weekly_var = (self.steps_day_noise**2 + self.steps_base) / 7.0
        return self.steps_gain / math.sqrt(self.steps_gain**2 + weekly_var)

    @property
    def rho_effective(self) -> float:
        ach = self.rho_achievable
        if abs(self.coupling_rho) > ach:
            raise ConfigError(
                f"coupling_rho={self.coupling_rho} is not achievable under the "
                f"configured noise; the bound is {ach:.4f}"
            )
        return self.coupling_rho / ach

    def participant_ids(self) -> list[str]:
        return [f"p{i:04d}" for i in range(self.n_participants)]

    def outsider_ids(self) -> list[str]:
        return [f"o{i:04d}" for i in range(self.n_outsiders)]

    def to_jsonable(self) -> dict:
        d = asdict(self)
        d["study_start"] = self.study_start.isoformat()
        return d


@dataclass
class Latents:
    """All per-person/per-week latent draws, in participant index order."""

    season: np.ndarray            # (W,)
    trait_social: np.ndarray      # (P,)
    trait_behavior: np.ndarray    # (P,)
    social_dev: np.ndarray        # (P, W)
    behavior_dev: np.ndarray      # (P, W)
    sociability: np.ndarray       # (P, W)
    behavior_level: np.ndarray    # (P, W)
    coupled: np.ndarray           # (P,) bool
    hr_person: np.ndarray         # (P,)
    rho_effective: float


def _draw_latents(config: SynthConfig, rng: np.random.Generator) -> Latents:
    P, W = config.n_participants, config.n_weeks
    rho = config.rho_effective
    a = config.season_weight
    season = rng.standard_normal(W)
    trait_social = rng.standard_normal(P)
    trait_behavior = rng.standard_normal(P)
    social_dev = a * season[None, :] + math.sqrt(1 - a * a) * rng.standard_normal((P, W))
    n_coupled = round(config.coupled_fraction * P)
    coupled = np.zeros(P, dtype=bool)
    coupled[rng.permutation(P)[:n_coupled]] = True
    noise = rng.standard_normal((P, W))
    behavior_dev = np.where(
        coupled[:, None],
        rho * social_dev + math.sqrt(max(0.0, 1 - rho * rho)) * noise,
        noise,
    )
    sociability = config.trait_weight * trait_social[:, None] + social_dev
    behavior_level = config.behavior_trait_weight * trait_behavior[:, None] + behavior_dev
    hr_person = config.hr_base + config.hr_person_spread * rng.standard_normal(P)
    return Latents(
        season, trait_social, trait_behavior, social_dev, behavior_dev,
        sociability, behavior_level, coupled, hr_person, rho,
    )


def _partner_pools(config: SynthConfig, rng: np.random.Generator) -> list[list[str]]:
    """Each participant's fixed contact pool: other participants plus a
    private slice of outsiders, so the two network scopes truly differ."""
    participants = config.participant_ids()
    outsiders = config.outsider_ids()
    pools = []
    for i in range(config.n_participants):
        others = np.array([p for j, p in enumerate(participants) if j != i])
        k_part = min(config.partners_participant, len(others))
        chosen = sorted(rng.choice(others, size=k_part, replace=False).tolist())
        if outsiders:
            k_out = min(config.partners_outsider, len(outsiders))
            chosen += sorted(rng.choice(np.array(outsiders), size=k_out, replace=False).tolist())
        pools.append(chosen)
    return pools


def _weekly_selections(
    config: SynthConfig,
    latents: Latents,
    pools: list[list[str]],
    rng: np.random.Generator,
) -> list[list[list[str]]]:
    """selections[p][w]: partners contacted by participant p in week w."""
    P, W = config.n_participants, config.n_weeks
    k_raw = np.rint(config.select_base + config.select_gain * latents.sociability)
    out = []
    for p in range(P):
        pool = np.array(pools[p])
        weeks = []
        for w in range(W):
            k = int(np.clip(k_raw[p, w], 0, len(pool)))
            if k == 0:
                weeks.append([])
            else:
                weeks.append(sorted(rng.choice(pool, size=k, replace=False).tolist()))
        out.append(weeks)
    return out


def _weekly_degrees(
    config: SynthConfig, selections: list[list[list[str]]]
) -> tuple[np.ndarray, np.ndarray]:
    """Realized union degrees per participant-week, whole and participant
    scope. Every selection burst carries >= min-frequency events, so the
    union of selections is exactly the retained weekly edge set."""
    participants = config.participant_ids()
    index = {p: i for i, p in enumerate(participants)}
    P, W = config.n_participants, config.n_weeks
    whole = np.zeros((P, W))
    part = np.zeros((P, W))
    for w in range(W):
        partners: list[set[str]] = [set() for _ in range(P)]
        for p in range(P):
            for q in selections[p][w]:
                partners[p].add(q)
                qi = index.get(q)
                if qi is not None:
                    partners[qi].add(participants[p])
        for p in range(P):
            whole[p, w] = len(partners[p])
            part[p, w] = sum(1 for q in partners[p] if q in index)
    return whole, part


@dataclass
class SeriesBundle:
    """Weekly series drawn from the same latent model as the files, but
    without materializing raw minutes; used for large-scale statistical
    checks."""

    structural: dict  # person -> {"whole_degree": arr, "participant_degree": arr}
    behavioral: dict  # person -> {"steps": arr, "heart_rate": arr, "very_active": arr}
    coupled: dict     # person -> bool
    latents: Latents


def generate_series(config: SynthConfig) -> SeriesBundle:
    """Weekly structural and behavioral series for every participant."""
    rng = np.random.default_rng(config.seed)
    latents = _draw_latents(config, rng)
    pools = _partner_pools(config, rng)
    selections = _weekly_selections(config, latents, pools, rng)
    whole_deg, part_deg = _weekly_degrees(config, selections)

    P, W = config.n_participants, config.n_weeks
    daily = (
        config.steps_base
        + config.steps_gain * latents.behavior_level[:, :, None]
        + config.steps_day_noise * rng.standard_normal((P, W, 7))
    )
    steps = np.maximum(daily, 0.0).mean(axis=2)
    hr = (
        latents.hr_person[:, None]
        + config.hr_gain * latents.behavior_level
        + config.hr_minute_noise / math.sqrt(7 * config.minutes_per_day)
        * rng.standard_normal((P, W))
    )
    va_frac = np.clip(
        config.active_base + config.active_gain * latents.behavior_level, 0.01, 0.6
    )
    very_active = np.rint(va_frac * config.minutes_per_day)

    ids = config.participant_ids()
    structural = {
        pid: {"whole_degree": whole_deg[i], "participant_degree": part_deg[i]}
        for i, pid in enumerate(ids)
    }
    behavioral = {
        pid: {"steps": steps[i], "heart_rate": hr[i], "very_active": very_active[i]}
        for i, pid in enumerate(ids)
    }
    coupled = {pid: bool(latents.coupled[i]) for i, pid in enumerate(ids)}
    return SeriesBundle(structural, behavioral, coupled, latents)


# ---------------------------------------------------------------------------
# File materialization

@dataclass
class SynthDataset:
    comm_path: Path
    wearable_path: Path
    survey_path: Path
    ground_truth_path: Path
    ground_truth: dict = field(repr=False, default_factory=dict)


def generate(config: SynthConfig, out_dir: str | Path) -> SynthDataset:
    """Materialize the three ingest-format files plus ground_truth.json."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(config.seed)
    latents = _draw_latents(config, rng)
    pools = _partner_pools(config, rng)
    selections = _weekly_selections(config, latents, pools, rng)
    weeks = make_weeks(config.study_start, config.study_start + timedelta(days=7 * config.n_weeks))
    participants = config.participant_ids()

    events = _make_events(config, selections, weeks, rng)
    comm_path = out_dir / "comm.csv"
    with comm_path.open("w") as fh:
        write_comm_log(events, fh)

    wearable_path = out_dir / "wearable.csv"
    _write_wearable(config, latents, weeks, rng, wearable_path)

    surveys, clean_labels = _make_surveys(config, latents, rng)
    survey_path = out_dir / "survey.csv"
    with survey_path.open("w") as fh:
        write_survey(surveys, fh)

    truth = {
        "config": config.to_jsonable(),
        "rho_effective": latents.rho_effective,
        "rho_achievable": config.rho_achievable,
        "recommended_compliance_threshold": config.minutes_per_day / MINUTES_PER_DAY,
        "coupled_persons": [p for i, p in enumerate(participants) if latents.coupled[i]],
        "label_mechanism": {
            q: {"signal": config.label_signal, "noise": config.label_noise,
                "levels": WELLNESS_LEVELS[q][1]}
            for q in WELLNESS_LEVELS
        },
        "clean_labels": clean_labels,
        "social_deviation": {
            p: [round(float(x), 4) for x in latents.social_dev[i]]
            for i, p in enumerate(participants)
        },
    }
    ground_truth_path = out_dir / "ground_truth.json"
    ground_truth_path.write_text(json.dumps(truth, indent=2, sort_keys=True))
    return SynthDataset(comm_path, wearable_path, survey_path, ground_truth_path, truth)


def _make_events(config, selections, weeks, rng) -> list[CommEvent]:
    participants = config.participant_ids()
    events: list[CommEvent] = []
    spam_counter = 0
    for p_idx, person in enumerate(participants):
        for w, week in enumerate(weeks):
            for partner in selections[p_idx][w]:
                for _ in range(config.events_per_contact):
                    ts = week.start_ts + int(rng.integers(0, 7 * 86400))
                    if rng.random() < 0.45:
                        duration = max(5, int(rng.gamma(2.0, 60.0)))
                        answered = bool(rng.random() < 0.9)
                        events.append(CommEvent(ts, person, partner, CommKind.CALL,
                                                duration, answered))
                    else:
                        events.append(CommEvent(ts, person, partner, CommKind.TEXT, 0, True))
            if rng.random() < config.spam_rate:
                # one-off contact with a never-reused id: always below the
                # frequency filter, keeps the person "active" in the week
                ts = week.start_ts + int(rng.integers(0, 7 * 86400))
                events.append(CommEvent(ts, person, f"s{spam_counter:06d}", CommKind.TEXT, 0, True))
                spam_counter += 1
    events.sort(key=lambda e: (e.timestamp, e.src, e.dst, e.kind.value))
    return events


def _write_wearable(config, latents, weeks, rng, path: Path) -> None:
    mpd = config.minutes_per_day
    spacing = MINUTES_PER_DAY // mpd
    slot_offsets = np.arange(mpd) * spacing * 60  # seconds into the day
    fixed_fracs = {"fairly_active": 0.10, "lightly_active": 0.20}
    with path.open("w") as fh:
        fh.write("person,timestamp,heart_rate,steps,activity_state,hr_zone\n")
        for p_idx, person in enumerate(config.participant_ids()):
            hr_p = latents.hr_person[p_idx]
            for w, week in enumerate(weeks):
                v = latents.behavior_level[p_idx, w]
                hr_target = hr_p + config.hr_gain * v
                va_frac = float(np.clip(config.active_base + config.active_gain * v, 0.01, 0.6))
                n_va = int(round(va_frac * mpd))
                n_fa = int(round(fixed_fracs["fairly_active"] * mpd))
                n_la = int(round(fixed_fracs["lightly_active"] * mpd))
                n_sed = mpd - n_va - n_fa - n_la
                states = (["very_active"] * n_va + ["fairly_active"] * n_fa
                          + ["lightly_active"] * n_la + ["sedentary"] * n_sed)
                for day in range(7):
                    day_start = week.start_ts + day * 86400
                    daily_target = max(
                        0.0,
                        config.steps_base + config.steps_gain * v
                        + config.steps_day_noise * rng.standard_normal(),
                    )
                    steps = rng.poisson(daily_target / mpd, size=mpd)
                    hr = np.clip(
                        np.rint(hr_target + config.hr_minute_noise * rng.standard_normal(mpd)),
                        40, 190,
                    ).astype(int)
                    order = rng.permutation(mpd)
                    for slot in range(mpd):
                        state = states[order[slot]]
                        fh.write(
                            f"{person},{day_start + int(slot_offsets[slot])},{hr[slot]},"
                            f"{steps[slot]},{state},{_STATE_ZONE[state]}\n"
                        )


def _quantile_labels(signal: np.ndarray, levels: int) -> np.ndarray:
    """Rank-based equal-count binning into 1..levels."""
    order = np.argsort(np.argsort(signal, kind="stable"), kind="stable")
    return 1 + (order * levels) // len(signal)


def _make_surveys(config, latents, rng) -> tuple[list[SurveyRecord], dict]:
    P = config.n_participants
    participants = config.participant_ids()
    genders = rng.random(P) < 0.5
    if config.label_signal == "structural":
        signal = latents.trait_social
    elif config.label_signal == "behavioral":
        signal = latents.trait_behavior
    elif config.label_signal == "mixed":
        signal = (latents.trait_social + latents.trait_behavior) / math.sqrt(2.0)
    else:
        signal = None

    clean: dict[str, dict[str, int]] = {}
    noisy: dict[str, np.ndarray] = {}
    for question, (lo, hi) in WELLNESS_LEVELS.items():
        levels = hi - lo + 1
        if signal is None:
            labels = rng.integers(lo, hi + 1, size=P)
        else:
            labels = _quantile_labels(signal, levels) + (lo - 1)
        clean[question] = {participants[i]: int(labels[i]) for i in range(P)}
        flip = rng.random(P) < config.label_noise
        noisy_labels = labels.copy()
        noisy_labels[flip] = rng.integers(lo, hi + 1, size=int(flip.sum()))
        noisy[question] = noisy_labels

    records = [
        SurveyRecord(
            person=participants[i],
            gender=Gender.FEMALE if genders[i] else Gender.MALE,
            stress=int(noisy["stress"][i]),
            happiness=int(noisy["happiness"][i]),
            positive_attitude=int(noisy["positive_attitude"][i]),
            self_health=int(noisy["self_health"][i]),
        )
        for i in range(P)
    ]
    return records, clean
