"""Metadata-only fast scoring and the exhaustive training-set selection search.

A lite model is a forest over the user_profile subset of the registry, so it
can score a bare user object (including the historical snapshot embedded in an
archived tweet) without fetching a timeline. Training data is chosen by
evaluating every non-empty subset of the candidate datasets on three metrics:
5-fold cross-validation accuracy, holdout AUC, and rank consistency with a
reference ensemble model.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Sequence

import numpy as np

from . import forest as forest_mod
from ._stats import midranks
from .corpus import BOT, LabeledDataset, UserObject
from .ensemble import EscModel, score_account
from .features import FeatureRegistry, default_registry, extract_lite
from .forest import ForestModel, ForestParams
from .jsonutil import content_version

MAX_CANDIDATES = 12  # exhaustive 2^n subset search only


@dataclass(frozen=True)
class SelectionMetrics:
    cv_accuracy: float
    holdout_auc: float
    consistency: float  # Spearman rank correlation with the reference model

    def __post_init__(self):
        for name in ("cv_accuracy", "holdout_auc", "consistency"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"selection metrics: {name} must be finite")
        if not 0.0 <= self.cv_accuracy <= 1.0 or not 0.0 <= self.holdout_auc <= 1.0:
            raise ValueError("selection metrics: accuracy and AUC must lie in [0, 1]")
        if not -1.0 <= self.consistency <= 1.0:
            raise ValueError("selection metrics: consistency must lie in [-1, 1]")


@dataclass(frozen=True)
class SubsetEvaluation:
    bitmask: int
    dataset_names: tuple[str, ...]
    metrics: SelectionMetrics
    weighted_score: float


@dataclass(frozen=True, eq=False)
class LiteModel:
    forest: ForestModel
    selected_datasets: tuple[str, ...]
    selection_report: tuple[SubsetEvaluation, ...]

    @property
    def version(self) -> str:
        return content_version(lite_to_dict(self))


def spearman(a: Sequence[float], b: Sequence[float]) -> float:
    """Spearman rank correlation (midranks for ties); 0 when either side is constant."""
    if len(a) != len(b) or len(a) < 2:
        raise ValueError("spearman: need two equal-length samples of size >= 2")
    ra = midranks(a)
    rb = midranks(b)
    sa = ra.std()
    sb = rb.std()
    if sa == 0.0 or sb == 0.0:
        return 0.0
    return float(((ra - ra.mean()) * (rb - rb.mean())).mean() / (sa * sb))


def _lite_training_data(datasets: Sequence[LabeledDataset],
                        registry: FeatureRegistry):
    data = []
    for dataset in datasets:
        for record in dataset.records:
            vec = extract_lite(record.payload.user, record.payload.probe_time, registry)
            data.append((vec, record.label))
    return data


def _cv_accuracy(data, params: ForestParams, k: int, seed: int) -> float:
    report = forest_mod.cross_validate(data, params, k=k, seed=seed)
    c = report.confusion
    total = c["tn"] + c["fp"] + c["fn"] + c["tp"]
    return (c["tn"] + c["tp"]) / total


def select_training_sets(candidates: Sequence[LabeledDataset],
                         holdout: LabeledDataset,
                         reference: EscModel,
                         weights: tuple[float, float, float] = (1.0, 1.0, 1.0),
                         registry: FeatureRegistry | None = None,
                         params: ForestParams = ForestParams(),
                         cv_folds: int = 5,
                         seed: int = 0) -> LiteModel:
    """Exhaustively score every non-empty candidate subset and keep the winner.

    The winner maximizes the weighted metric sum; ties break toward fewer
    datasets, then lexicographic names. The full per-subset table is retained
    on the model for re-ranking.
    """
    if not 1 <= len(candidates) <= MAX_CANDIDATES:
        raise ValueError(
            f"select_training_sets: need 1..{MAX_CANDIDATES} candidates "
            f"(exhaustive search only), got {len(candidates)}")
    holdout_ids = holdout.user_ids()
    for dataset in candidates:
        shared = dataset.user_ids() & holdout_ids
        if shared:
            raise ValueError(
                f"select_training_sets: candidate {dataset.name} shares "
                f"{len(shared)} user_ids with the holdout")
    registry = registry or default_registry()

    holdout_data = _lite_training_data([holdout], registry)
    holdout_vecs = [vec for vec, _ in holdout_data]
    holdout_labels = [label for _, label in holdout_data]
    reference_scores = [
        score_account(reference, record.payload).raw_overall
        for record in holdout.records]

    names = [d.name for d in candidates]
    evaluations: list[SubsetEvaluation] = []
    trained: dict[int, ForestModel] = {}
    for bitmask in range(1, 2 ** len(candidates)):
        subset = [candidates[i] for i in range(len(candidates)) if bitmask >> i & 1]
        subset_names = tuple(d.name for d in subset)
        data = _lite_training_data(subset, registry)
        subset_seed = int(np.random.SeedSequence([int(seed), bitmask]).generate_state(1)[0])
        cv_acc = _cv_accuracy(data, params, k=cv_folds, seed=subset_seed)
        model = forest_mod.train(data, params, seed=subset_seed)
        trained[bitmask] = model
        lite_scores = forest_mod.score_many(model, holdout_vecs)
        pos = [s for s, label in zip(lite_scores, holdout_labels) if label == BOT]
        neg = [s for s, label in zip(lite_scores, holdout_labels) if label != BOT]
        metrics = SelectionMetrics(
            cv_accuracy=cv_acc,
            holdout_auc=forest_mod.auc(pos, neg),
            consistency=spearman(lite_scores, reference_scores),
        )
        weighted = (weights[0] * metrics.cv_accuracy
                    + weights[1] * metrics.holdout_auc
                    + weights[2] * metrics.consistency)
        evaluations.append(SubsetEvaluation(
            bitmask=bitmask, dataset_names=subset_names,
            metrics=metrics, weighted_score=weighted))

    best_score = max(e.weighted_score for e in evaluations)
    contenders = [e for e in evaluations if e.weighted_score == best_score]
    contenders.sort(key=lambda e: (len(e.dataset_names), e.dataset_names))
    winner = contenders[0]

    return LiteModel(
        forest=trained[winner.bitmask],
        selected_datasets=winner.dataset_names,
        selection_report=tuple(evaluations))


def score_lite(model: LiteModel, user: UserObject, probe_time: datetime) -> float:
    """Score a bare user object at a probe time; never reads timelines or text."""
    vec = extract_lite(user, probe_time)
    return forest_mod.score(model.forest, vec)


def selection_report_csv(model: LiteModel) -> str:
    """The per-subset metric table as CSV for inspection and re-ranking."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow([
        "bitmask", "datasets", "cv_accuracy", "holdout_auc", "consistency",
        "weighted_score", "selected"])
    for row in model.selection_report:
        writer.writerow([
            row.bitmask, ";".join(row.dataset_names),
            repr(row.metrics.cv_accuracy), repr(row.metrics.holdout_auc),
            repr(row.metrics.consistency), repr(row.weighted_score),
            int(row.dataset_names == model.selected_datasets)])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

LITE_FORMAT = "botscope-lite/1"


def lite_to_dict(model: LiteModel) -> dict:
    return {
        "format": LITE_FORMAT,
        "forest": forest_mod.forest_to_dict(model.forest),
        "selected_datasets": list(model.selected_datasets),
        "selection_report": [
            {
                "bitmask": e.bitmask,
                "datasets": list(e.dataset_names),
                "cv_accuracy": e.metrics.cv_accuracy,
                "holdout_auc": e.metrics.holdout_auc,
                "consistency": e.metrics.consistency,
                "weighted_score": e.weighted_score,
            }
            for e in model.selection_report
        ],
    }


def lite_from_dict(data: dict) -> LiteModel:
    if data.get("format") != LITE_FORMAT:
        raise ValueError(f"lite document: unsupported format {data.get('format')!r}")
    return LiteModel(
        forest=forest_mod.forest_from_dict(data["forest"]),
        selected_datasets=tuple(data["selected_datasets"]),
        selection_report=tuple(
            SubsetEvaluation(
                bitmask=e["bitmask"],
                dataset_names=tuple(e["datasets"]),
                metrics=SelectionMetrics(
                    cv_accuracy=e["cv_accuracy"],
                    holdout_auc=e["holdout_auc"],
                    consistency=e["consistency"]),
                weighted_score=e["weighted_score"])
            for e in data["selection_report"]))


def save_lite(model: LiteModel, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(lite_to_dict(model), fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_lite(path: str | Path) -> LiteModel:
    with open(path, encoding="utf-8") as fh:
        return lite_from_dict(json.load(fh))
