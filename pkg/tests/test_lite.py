from datetime import datetime, timedelta, timezone

import pytest

from botscope import corpus, forest, lite
from botscope.corpus import CorpusSpec, LabeledDataset, LabeledRecord, synthesize_corpus
from botscope.lite import (
    load_lite, save_lite, score_lite, select_training_sets, selection_report_csv,
    spearman,
)

UTC = timezone.utc
FAST = forest.ForestParams(n_trees=15, max_depth=8)


@pytest.fixture(scope="module")
def holdout():
    return synthesize_corpus(CorpusSpec(humans=25, spammers=25, name="holdout"), seed=31)


@pytest.fixture(scope="module")
def candidates():
    return [
        synthesize_corpus(CorpusSpec(humans=20, spammers=20, name="cand_a"), seed=32),
        synthesize_corpus(CorpusSpec(humans=20, spammers=20, name="cand_b"), seed=33),
    ]


@pytest.fixture(scope="module")
def reference(candidates, registry):
    from botscope.ensemble import train_esc

    return train_esc(candidates, registry, FAST, seed=30)


def invert_labels(dataset, name):
    flipped = tuple(
        LabeledRecord(
            payload=r.payload,
            label="human" if r.label == "bot" else "bot",
            bot_class=None if r.label == "bot" else "spammer")
        for r in dataset.records)
    return LabeledDataset(name=name, records=flipped)


class TestSpearman:
    def test_perfect_monotone(self):
        assert spearman([1, 2, 3, 4], [10, 20, 30, 40]) == pytest.approx(1.0)

    def test_reversed(self):
        assert spearman([1, 2, 3, 4], [4, 3, 2, 1]) == pytest.approx(-1.0)

    def test_constant_side_is_zero(self):
        assert spearman([1, 2, 3], [5, 5, 5]) == 0.0


class TestSelection:
    def test_single_candidate_selected(self, candidates, holdout, reference):
        model = select_training_sets(
            candidates[:1], holdout, reference, params=FAST, seed=1)
        assert model.selected_datasets == ("cand_a",)
        assert len(model.selection_report) == 1

    def test_exhaustive_subset_table(self, candidates, holdout, reference):
        model = select_training_sets(candidates, holdout, reference, params=FAST, seed=1)
        assert len(model.selection_report) == 3  # 2^2 - 1
        masks = {e.bitmask for e in model.selection_report}
        assert masks == {1, 2, 3}

    def test_deterministic(self, candidates, holdout, reference):
        m1 = select_training_sets(candidates, holdout, reference, params=FAST, seed=6)
        m2 = select_training_sets(candidates, holdout, reference, params=FAST, seed=6)
        assert m1.selected_datasets == m2.selected_datasets
        assert lite.lite_to_dict(m1) == lite.lite_to_dict(m2)

    def test_weight_rescaling_keeps_winner(self, candidates, holdout, reference):
        m1 = select_training_sets(
            candidates, holdout, reference, weights=(1, 1, 1), params=FAST, seed=6)
        m2 = select_training_sets(
            candidates, holdout, reference, weights=(3, 3, 3), params=FAST, seed=6)
        assert m1.selected_datasets == m2.selected_datasets

    def test_overlap_with_holdout_rejected(self, candidates, reference):
        with pytest.raises(ValueError, match="shares"):
            select_training_sets(
                candidates, candidates[0], reference, params=FAST, seed=1)

    def test_candidate_count_cap(self, holdout, reference):
        base = datetime(2021, 1, 1, tzinfo=UTC)
        tiny = []
        for i in range(13):
            records = []
            for j, label in enumerate(["bot", "bot", "human", "human"]):
                user = corpus.UserObject(
                    user_id=f"c{i}:{j}", screen_name=f"s{i}{j}", display_name="",
                    created_at=base)
                payload = corpus.AccountPayload(
                    user=user, timeline=(), mentions=(),
                    probe_time=base + timedelta(days=30))
                records.append(LabeledRecord(
                    payload=payload, label=label,
                    bot_class="spammer" if label == "bot" else None))
            tiny.append(LabeledDataset(name=f"tiny{i}", records=tuple(records)))
        with pytest.raises(ValueError, match="exhaustive"):
            select_training_sets(tiny, holdout, reference, params=FAST, seed=1)

    def test_poisoned_candidate_loses(self, candidates, holdout, reference):
        poisoned = invert_labels(
            synthesize_corpus(CorpusSpec(humans=20, spammers=20, name="raw_p"), seed=34),
            "poisoned")
        model = select_training_sets(
            [*candidates, poisoned], holdout, reference, params=FAST, seed=2)
        assert "poisoned" not in model.selected_datasets
        by_mask = {e.dataset_names: e.metrics.holdout_auc for e in model.selection_report}
        with_poison = [v for k, v in by_mask.items() if "poisoned" in k]
        without = [v for k, v in by_mask.items() if "poisoned" not in k]
        assert max(with_poison) < min(without)

    def test_report_csv_shape(self, candidates, holdout, reference):
        model = select_training_sets(candidates, holdout, reference, params=FAST, seed=1)
        text = selection_report_csv(model)
        lines = text.strip().splitlines()
        assert lines[0].startswith("bitmask,")
        assert len(lines) == 1 + len(model.selection_report)
        assert sum(1 for line in lines[1:] if line.endswith(",1")) == 1


class TestScoreLite:
    def test_reads_only_metadata(self, candidates, holdout, reference):
        model = select_training_sets(candidates, holdout, reference, params=FAST, seed=3)
        user = corpus.UserObject(
            user_id="bare", screen_name="bare99", display_name="",
            created_at=datetime(2020, 1, 1, tzinfo=UTC),
            followers_count=2, friends_count=900, statuses_count=4)
        value = score_lite(model, user, datetime(2020, 3, 1, tzinfo=UTC))
        assert 0.0 <= value <= 1.0

    def test_probe_time_changes_score_inputs(self, candidates, holdout, reference):
        from botscope.features import extract_lite

        model = select_training_sets(candidates, holdout, reference, params=FAST, seed=3)
        user = holdout.records[0].payload.user
        t1 = user.created_at + timedelta(days=10)
        t2 = user.created_at + timedelta(days=2000)
        assert extract_lite(user, t1) != extract_lite(user, t2)
        for t in (t1, t2):
            assert 0.0 <= score_lite(model, user, t) <= 1.0

    def test_historical_snapshot_from_embedded_author(
            self, candidates, holdout, reference):
        model = select_training_sets(candidates, holdout, reference, params=FAST, seed=3)
        record = next(r for r in holdout.records if r.payload.timeline)
        tweet = record.payload.timeline[0]
        value = score_lite(model, tweet.author, tweet.created_at)
        assert 0.0 <= value <= 1.0

    def test_invalid_probe_rejected(self, candidates, holdout, reference):
        model = select_training_sets(candidates, holdout, reference, params=FAST, seed=3)
        user = holdout.records[0].payload.user
        with pytest.raises(ValueError):
            score_lite(model, user, user.created_at - timedelta(days=1))


class TestSerialization:
    def test_round_trip(self, candidates, holdout, reference, tmp_path):
        model = select_training_sets(candidates, holdout, reference, params=FAST, seed=4)
        path = tmp_path / "lite.json"
        save_lite(model, path)
        loaded = load_lite(path)
        assert lite.lite_to_dict(loaded) == lite.lite_to_dict(model)
        user = holdout.records[0].payload.user
        probe = user.created_at + timedelta(days=100)
        assert score_lite(loaded, user, probe) == score_lite(model, user, probe)
