import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from botscope import forest
from botscope.features import FeatureVector
from botscope.forest import (
    EvalReport, ForestModel, ForestParams, Tree, auc, cross_validate,
    forest_from_dict, forest_to_dict, load_forest, save_forest, score, train,
)


def vec(values, version="v1"):
    return FeatureVector(values=tuple(float(v) for v in values), registry_version=version)


def two_clusters(n_per_side=20, gap=5.0, seed=0):
    rng = np.random.Generator(np.random.PCG64(seed))
    data = []
    for _ in range(n_per_side):
        data.append((vec(rng.normal(0.0, 1.0, size=3)), "human"))
    for _ in range(n_per_side):
        data.append((vec(rng.normal(gap, 1.0, size=3)), "bot"))
    return data


def leaf_tree(bot_votes, human_votes):
    """Single-node tree that always casts the same vote."""
    return Tree(
        feature=np.array([-1], dtype=np.int32),
        threshold=np.array([0.0]),
        left=np.array([-1], dtype=np.int32),
        right=np.array([-1], dtype=np.int32),
        votes_human=np.array([human_votes], dtype=np.int64),
        votes_bot=np.array([bot_votes], dtype=np.int64),
    )


def leaf_model(votes, version="v1"):
    """Hand-built forest from (bot, human) leaf vote pairs."""
    return ForestModel(
        trees=tuple(leaf_tree(b, h) for b, h in votes),
        params=ForestParams(n_trees=len(votes)),
        registry_version=version, training_seed=0)


class TestTrain:
    def test_separable_clusters_training_auc_one(self):
        data = two_clusters()
        model = train(data, ForestParams(n_trees=20), seed=1)
        pos = [score(model, x) for x, y in data if y == "bot"]
        neg = [score(model, x) for x, y in data if y == "human"]
        assert auc(pos, neg) == 1.0

    def test_deterministic_given_seed(self):
        data = two_clusters(gap=1.5)
        m1 = train(data, ForestParams(n_trees=15), seed=7)
        m2 = train(data, ForestParams(n_trees=15), seed=7)
        assert forest_to_dict(m1) == forest_to_dict(m2)
        probe = vec([0.7, 0.7, 0.7])
        assert score(m1, probe) == score(m2, probe)

    def test_single_class_rejected(self):
        data = [(vec([i]), "bot") for i in range(10)]
        with pytest.raises(ValueError, match="each label"):
            train(data, seed=0)

    def test_registry_mismatch_rejected(self):
        data = [(vec([0.0]), "human"), (vec([1.0]), "human"),
                (vec([2.0], version="other"), "bot"), (vec([3.0]), "bot")]
        with pytest.raises(ValueError, match="registry mismatch"):
            train(data, seed=0)

    def test_leaf_votes_nonnegative_and_splits_in_range(self):
        data = two_clusters(gap=1.0)
        model = train(data, ForestParams(n_trees=10), seed=3)
        for tree in model.trees:
            assert (tree.votes_bot >= 0).all() and (tree.votes_human >= 0).all()
            split_features = tree.feature[tree.feature >= 0]
            assert ((split_features >= 0) & (split_features < 3)).all()


class TestScore:
    def test_all_trees_bot_scores_one(self):
        model = leaf_model([(5, 0)] * 8)
        assert score(model, vec([0.0])) == 1.0

    def test_half_trees_bot_scores_half(self):
        model = leaf_model([(5, 0), (0, 5)] * 4)
        assert score(model, vec([0.0])) == 0.5

    def test_hand_built_three_tree_vote(self):
        model = leaf_model([(3, 1), (2, 0), (1, 4)])  # bot, bot, human
        assert score(model, vec([0.0])) == pytest.approx(2.0 / 3.0)

    def test_adding_bot_tree_never_decreases_score(self):
        base = leaf_model([(1, 3), (4, 1), (0, 2)])
        grown = ForestModel(
            trees=(*base.trees, leaf_tree(7, 0)),
            params=ForestParams(n_trees=4),
            registry_version="v1", training_seed=0)
        x = vec([0.0])
        assert score(grown, x) >= score(base, x)

    def test_registry_mismatch_rejected(self):
        model = leaf_model([(1, 0)])
        with pytest.raises(ValueError, match="registry mismatch"):
            score(model, vec([0.0], version="nope"))

    def test_score_in_unit_interval(self, small_corpus, registry):
        from botscope.features import extract_full

        data = [(extract_full(r.payload, registry), r.label)
                for r in small_corpus.records]
        model = train(data, ForestParams(n_trees=10), seed=5)
        for x, _ in data:
            assert 0.0 <= score(model, x) <= 1.0


class TestAuc:
    def test_perfect_separation(self):
        assert auc([0.9, 0.8], [0.2, 0.1]) == 1.0

    def test_all_ties_half(self):
        assert auc([0.5, 0.5], [0.5, 0.5, 0.5]) == 0.5

    def test_hand_enumerated_case(self):
        # pairs: (.9>.8), (.9>.1), (.4<.8), (.4>.1) -> 3/4
        assert auc([0.9, 0.4], [0.8, 0.1]) == 0.75

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            auc([], [0.1])

    @given(st.lists(st.floats(0, 1, width=32), min_size=1, max_size=10),
           st.lists(st.floats(0, 1, width=32), min_size=1, max_size=10))
    def test_matches_pairwise_enumeration(self, pos, neg):
        expected = 0.0
        for p, n in itertools.product(pos, neg):
            expected += 1.0 if p > n else (0.5 if p == n else 0.0)
        expected /= len(pos) * len(neg)
        assert auc(pos, neg) == pytest.approx(expected, abs=1e-12)

    @given(st.lists(st.integers(0, 10_000), min_size=1, max_size=10, unique=True),
           st.lists(st.integers(10_001, 20_000), min_size=1, max_size=10, unique=True))
    def test_swap_identity_tie_free(self, a, b):
        assert auc(a, b) + auc(b, a) == pytest.approx(1.0, abs=1e-12)


class TestCrossValidate:
    def test_five_folds_reported(self, small_corpus, registry):
        from botscope.features import extract_full

        data = [(extract_full(r.payload, registry), r.label)
                for r in small_corpus.records]
        report = cross_validate(data, ForestParams(n_trees=10), k=5, seed=2)
        assert isinstance(report, EvalReport)
        assert report.n_folds == 5
        assert len(report.per_fold_auc) == 5

    def test_separable_data_auc_one(self):
        report = cross_validate(two_clusters(), ForestParams(n_trees=20), k=5, seed=2)
        assert report.auc == 1.0

    def test_shuffled_labels_near_chance(self):
        rng = np.random.Generator(np.random.PCG64(3))
        data = [(vec(rng.normal(0, 1, size=4)), "bot" if rng.random() < 0.5 else "human")
                for _ in range(160)]
        if sum(1 for _, y in data if y == "bot") < 2:
            data[0] = (data[0][0], "bot")
        report = cross_validate(data, ForestParams(n_trees=20), k=5, seed=3)
        assert 0.4 <= report.auc <= 0.6

    def test_fold_without_both_labels_named(self):
        data = [(vec([float(i)]), "bot" if i < 3 else "human") for i in range(40)]
        with pytest.raises(ValueError, match="fold"):
            cross_validate(data, ForestParams(n_trees=5), k=5, seed=1)

    def test_confusion_counts_sum(self):
        data = two_clusters()
        report = cross_validate(data, ForestParams(n_trees=10), k=4, seed=9)
        assert sum(report.confusion.values()) == len(data)


class TestSerialization:
    def test_round_trip_exact(self, tmp_path):
        data = two_clusters(gap=1.2)
        model = train(data, ForestParams(n_trees=12), seed=4)
        path = tmp_path / "forest.json"
        save_forest(model, path)
        loaded = load_forest(path)
        assert forest_to_dict(loaded) == forest_to_dict(model)
        save_forest(loaded, tmp_path / "again.json")
        assert path.read_bytes() == (tmp_path / "again.json").read_bytes()
        probe = vec([0.3, 0.4, 0.5])
        assert score(loaded, probe) == score(model, probe)

    def test_unknown_format_rejected(self):
        with pytest.raises(ValueError, match="format"):
            forest_from_dict({"format": "something-else"})
