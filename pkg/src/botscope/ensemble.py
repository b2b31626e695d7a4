"""Ensemble of specialized classifiers: per-bot-class forests, score reports,
display rescaling, and posterior calibration of raw scores.

Each bot class gets two forests trained against the pooled humans: one over
the full registry and one restricted to language-independent coordinates (the
"universal" variant). The overall score is the maximum of the per-class
sub-scores, which preserves the characteristic bimodal score shape; per-class
sub-scores are always reported so other aggregations can be computed
downstream.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, replace
from datetime import datetime
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import forest as forest_mod
from .corpus import BOT, HUMAN, AccountPayload, LabeledDataset
from .features import FeatureRegistry, default_registry, extract_full
from .forest import ForestModel, ForestParams
from .jsonutil import content_version, format_utc, parse_utc

MIN_CLASS_EXAMPLES = 10
DEFAULT_PRIOR = 0.15
CAP_GRID_STEP = 0.01


@dataclass(frozen=True, eq=False)
class EscModel:
    specialized: dict[str, ForestModel]
    universal_specialized: dict[str, ForestModel]
    class_list: tuple[str, ...]
    registry: FeatureRegistry

    def __post_init__(self):
        for name in self.class_list:
            if name not in self.specialized or name not in self.universal_specialized:
                raise ValueError(f"esc model: missing forests for class {name!r}")
        indep = set(self.registry.language_independent_indices())
        for name, model in self.universal_specialized.items():
            allowed = model.params.feature_indices
            if allowed is None or not set(allowed) <= indep:
                raise ValueError(
                    f"esc model: universal forest {name!r} references "
                    "language-dependent coordinates")

    @property
    def registry_version(self) -> str:
        return self.registry.version

    @property
    def version(self) -> str:
        return content_version(esc_to_dict(self))


@dataclass(frozen=True)
class ScoreReport:
    """Raw, display, and per-class scores for one account at one probe time."""

    user_id: str
    probe_time: datetime
    raw_overall: float
    raw_universal: float
    sub_scores: dict[str, dict[str, float]]  # {"english": {...}, "universal": {...}}
    low_data: bool = False
    cap_english: float | None = None
    cap_universal: float | None = None
    model_version: str = ""

    def __post_init__(self):
        english = self.sub_scores.get("english", {})
        if english and not math.isclose(
                self.raw_overall, max(english.values()), rel_tol=0.0, abs_tol=0.0):
            raise ValueError("score report: raw_overall must equal the max english sub-score")
        for family in self.sub_scores.values():
            for value in family.values():
                if not 0.0 <= value <= 1.0:
                    raise ValueError("score report: sub-scores must lie in [0, 1]")
        if not 0.0 <= self.raw_overall <= 1.0 or not 0.0 <= self.raw_universal <= 1.0:
            raise ValueError("score report: raw scores must lie in [0, 1]")

    @property
    def display_overall(self) -> float:
        return 5.0 * self.raw_overall

    @property
    def display_universal(self) -> float:
        return 5.0 * self.raw_universal


def report_to_dict(report: ScoreReport) -> dict:
    classes = sorted(report.sub_scores.get("english", {}))
    return {
        "user_id": report.user_id,
        "probe_time": format_utc(report.probe_time),
        "raw_scores": {
            "english": {"overall": report.raw_overall,
                        **{c: report.sub_scores["english"][c] for c in classes}},
            "universal": {"overall": report.raw_universal,
                          **{c: report.sub_scores["universal"][c] for c in classes}},
        },
        "display_scores": {
            "english": {"overall": report.display_overall,
                        **{c: 5.0 * report.sub_scores["english"][c] for c in classes}},
            "universal": {"overall": report.display_universal,
                          **{c: 5.0 * report.sub_scores["universal"][c] for c in classes}},
        },
        "cap": {"english": report.cap_english, "universal": report.cap_universal},
        "low_data": report.low_data,
        "model_version": report.model_version,
    }


def report_from_dict(data: Mapping) -> ScoreReport:
    raw = data["raw_scores"]
    classes = [k for k in raw["english"] if k != "overall"]
    return ScoreReport(
        user_id=data["user_id"],
        probe_time=parse_utc(data["probe_time"], "report.probe_time"),
        raw_overall=float(raw["english"]["overall"]),
        raw_universal=float(raw["universal"]["overall"]),
        sub_scores={
            "english": {c: float(raw["english"][c]) for c in classes},
            "universal": {c: float(raw["universal"][c]) for c in classes},
        },
        low_data=bool(data.get("low_data", False)),
        cap_english=data.get("cap", {}).get("english"),
        cap_universal=data.get("cap", {}).get("universal"),
        model_version=data.get("model_version", ""),
    )


# ---------------------------------------------------------------------------
# Training and scoring
# ---------------------------------------------------------------------------

def _collect_by_class(datasets: Sequence[LabeledDataset]):
    humans: list[AccountPayload] = []
    bots: dict[str, list[AccountPayload]] = {}
    for dataset in datasets:
        for record in dataset.records:
            if record.label == HUMAN:
                humans.append(record.payload)
            else:
                cls = record.bot_class or dataset.bot_class or "other"
                bots.setdefault(cls, []).append(record.payload)
    return humans, bots


def train_esc(datasets: Sequence[LabeledDataset],
              registry: FeatureRegistry | None = None,
              params: ForestParams = ForestParams(),
              seed: int = 0) -> EscModel:
    """Train one (english, universal) forest pair per bot class vs pooled humans."""
    registry = registry or default_registry()
    humans, bots = _collect_by_class(datasets)
    if not bots:
        raise ValueError("train_esc: no bot records in the given datasets")
    if len(humans) < 2:
        raise ValueError("train_esc: need at least 2 human records")
    for cls, payloads in sorted(bots.items()):
        if len(payloads) < MIN_CLASS_EXAMPLES:
            raise ValueError(
                f"train_esc: bot class {cls!r} has {len(payloads)} examples, "
                f"need at least {MIN_CLASS_EXAMPLES}")

    human_vecs = [extract_full(p, registry) for p in humans]
    class_list = tuple(sorted(bots))
    indep = registry.language_independent_indices()
    universal_params = replace(params, feature_indices=indep)

    specialized: dict[str, ForestModel] = {}
    universal: dict[str, ForestModel] = {}
    for c_idx, cls in enumerate(class_list):
        bot_vecs = [extract_full(p, registry) for p in bots[cls]]
        data = [(v, BOT) for v in bot_vecs] + [(v, HUMAN) for v in human_vecs]
        specialized[cls] = forest_mod.train(
            data, params, seed=_derived_seed(seed, c_idx, 0))
        universal[cls] = forest_mod.train(
            data, universal_params, seed=_derived_seed(seed, c_idx, 1))
    return EscModel(
        specialized=specialized, universal_specialized=universal,
        class_list=class_list, registry=registry)


def _derived_seed(seed: int, class_idx: int, variant: int) -> int:
    return int(np.random.SeedSequence([int(seed), class_idx, variant]).generate_state(1)[0])


def score_account(model: EscModel, payload: AccountPayload) -> ScoreReport:
    """Score one payload; pure function of (model, payload bytes).

    Accounts with no timeline and no mentions are scored on imputed features
    and flagged low_data.
    """
    vector = extract_full(payload, model.registry)
    english = {cls: forest_mod.score(model.specialized[cls], vector)
               for cls in model.class_list}
    universal = {cls: forest_mod.score(model.universal_specialized[cls], vector)
                 for cls in model.class_list}
    return ScoreReport(
        user_id=payload.user.user_id,
        probe_time=payload.probe_time,
        raw_overall=max(english.values()),
        raw_universal=max(universal.values()),
        sub_scores={"english": english, "universal": universal},
        low_data=not payload.timeline and not payload.mentions,
        model_version=model.version,
    )


# ---------------------------------------------------------------------------
# CAP calibration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CalibrationTable:
    """Empirical survival functions on a fixed score grid plus a bot prior."""

    thresholds: tuple[float, ...]
    bot_survival: tuple[float, ...]
    human_survival: tuple[float, ...]
    prior: float
    model_version: str = ""

    def __post_init__(self):
        if not 0.0 < self.prior < 1.0:
            raise ValueError("calibration: prior must lie strictly inside (0, 1)")
        if not (len(self.thresholds) == len(self.bot_survival) == len(self.human_survival)):
            raise ValueError("calibration: grid and survival lengths differ")
        for series in (self.bot_survival, self.human_survival):
            if series[0] != 1.0:
                raise ValueError("calibration: survival at threshold 0 must be 1")
            for a, b in zip(series, series[1:]):
                if b > a:
                    raise ValueError("calibration: survival functions must be non-increasing")
            for v in series:
                if not 0.0 <= v <= 1.0:
                    raise ValueError("calibration: survival values must lie in [0, 1]")

    @property
    def version(self) -> str:
        return content_version(calibration_to_dict(self))


def calibrate(model: EscModel | None,
              labeled_scores: Sequence[tuple[float, str]],
              prior: float = DEFAULT_PRIOR) -> CalibrationTable:
    """Build the posterior lookup table from labeled raw scores.

    Survival functions are computed empirically on the grid {0.00, 0.01, ...,
    1.00}; monotonicity is machine-checked by the table constructor.
    """
    bot_scores = sorted(s for s, label in labeled_scores if label == BOT)
    human_scores = sorted(s for s, label in labeled_scores if label == HUMAN)
    if not bot_scores or not human_scores:
        raise ValueError("calibrate: need scores for both labels")
    for s, _ in labeled_scores:
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"calibrate: score {s} outside [0, 1]")

    grid = tuple(i * CAP_GRID_STEP for i in range(int(round(1.0 / CAP_GRID_STEP)) + 1))

    def survival(sorted_scores: list[float]) -> tuple[float, ...]:
        n = len(sorted_scores)
        return tuple(
            (n - bisect.bisect_left(sorted_scores, t)) / n for t in grid)

    return CalibrationTable(
        thresholds=grid,
        bot_survival=survival(bot_scores),
        human_survival=survival(human_scores),
        prior=float(prior),
        model_version=model.version if model is not None else "",
    )


def cap_lookup(table: CalibrationTable, raw_score: float) -> float:
    """Posterior P(bot | score >= s) at the largest grid threshold <= raw_score."""
    if not 0.0 <= raw_score <= 1.0:
        raise ValueError(f"cap_lookup: raw score {raw_score} outside [0, 1]")
    i = bisect.bisect_right(table.thresholds, raw_score) - 1
    while i >= 0:
        num = table.prior * table.bot_survival[i]
        den = num + (1.0 - table.prior) * table.human_survival[i]
        if den > 0.0:
            return num / den
        i -= 1  # nothing scores at or above this threshold: fall back
    return table.prior


def apply_calibration(report: ScoreReport,
                      english: CalibrationTable,
                      universal: CalibrationTable) -> ScoreReport:
    return replace(
        report,
        cap_english=cap_lookup(english, report.raw_overall),
        cap_universal=cap_lookup(universal, report.raw_universal))


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

ESC_FORMAT = "botscope-esc/1"
CALIBRATION_FORMAT = "botscope-calibration/1"


def esc_to_dict(model: EscModel) -> dict:
    return {
        "format": ESC_FORMAT,
        "registry": model.registry.to_doc(),
        "class_list": list(model.class_list),
        "specialized": {c: forest_mod.forest_to_dict(model.specialized[c])
                        for c in model.class_list},
        "universal_specialized": {
            c: forest_mod.forest_to_dict(model.universal_specialized[c])
            for c in model.class_list},
    }


def esc_from_dict(data: Mapping) -> EscModel:
    if data.get("format") != ESC_FORMAT:
        raise ValueError(f"esc document: unsupported format {data.get('format')!r}")
    from .features import FeatureSpec

    doc = data["registry"]
    registry = FeatureRegistry(
        version=doc["version"],
        specs=tuple(
            FeatureSpec(
                name=f["name"], feature_class=f["class"],
                language_dependent=f["language_dependent"],
                lite_eligible=f["lite_eligible"], definition=f["definition"])
            for f in doc["features"]))
    return EscModel(
        specialized={c: forest_mod.forest_from_dict(d)
                     for c, d in data["specialized"].items()},
        universal_specialized={c: forest_mod.forest_from_dict(d)
                               for c, d in data["universal_specialized"].items()},
        class_list=tuple(data["class_list"]),
        registry=registry)


def save_esc(model: EscModel, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(esc_to_dict(model), fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_esc(path: str | Path) -> EscModel:
    with open(path, encoding="utf-8") as fh:
        return esc_from_dict(json.load(fh))


def calibration_to_dict(table: CalibrationTable) -> dict:
    return {
        "format": CALIBRATION_FORMAT,
        "thresholds": list(table.thresholds),
        "bot_survival": list(table.bot_survival),
        "human_survival": list(table.human_survival),
        "prior": table.prior,
        "model_version": table.model_version,
    }


def calibration_from_dict(data: Mapping) -> CalibrationTable:
    if data.get("format") != CALIBRATION_FORMAT:
        raise ValueError(
            f"calibration document: unsupported format {data.get('format')!r}")
    return CalibrationTable(
        thresholds=tuple(data["thresholds"]),
        bot_survival=tuple(data["bot_survival"]),
        human_survival=tuple(data["human_survival"]),
        prior=data["prior"],
        model_version=data.get("model_version", ""))


def save_calibration_bundle(tables: Mapping[str, CalibrationTable], path: str | Path) -> None:
    """Persist the english/universal table pair as one artifact."""
    body = {name: calibration_to_dict(t) for name, t in sorted(tables.items())}
    body["version"] = content_version(body)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(body, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_calibration_bundle(path: str | Path) -> tuple[dict[str, CalibrationTable], str]:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    version = data.pop("version", "")
    return {name: calibration_from_dict(d) for name, d in data.items()}, version
