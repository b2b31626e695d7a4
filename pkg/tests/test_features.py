import math
from dataclasses import replace
from datetime import datetime, timezone

import pytest

from botscope import corpus, features
from botscope.corpus import AccountPayload, UserObject, synthesize_corpus
from botscope.features import (
    FEATURE_CLASSES, FeatureVector, default_registry, extract_full, extract_lite,
)

UTC = timezone.utc

# Every registry value for the shipped 3-tweet micro payload, worked out by
# hand from the prose definitions. Intervals are 7200s and 3600s; texts are
# "good day today" (x2) and "eat bad spam spam"; mentions are u_x, u_x, u_z;
# one retweet of u_y and one reply to u_x.
MICRO_EXPECTED = {
    "screen_name_length": 4.0,
    "digits_in_screen_name": 1.0,
    "display_name_length": 3.0,
    "description_length": 11.0,
    "account_age_days": 30.0,
    "followers_count": 100.0,
    "friends_count": 49.0,
    "statuses_count": 300.0,
    "listed_count": 5.0,
    "favourites_count": 10.0,
    "follower_friend_ratio": 2.0,
    "tweets_per_day": 300.0 / 31.0,
    "followers_per_day": 100.0 / 31.0,
    "verified": 0.0,
    "default_profile": 1.0,
    "default_profile_image": 0.0,
    "profile_use_background_image": 1.0,
    "unique_mentioned_users": 2.0,
    "unique_retweeted_users": 1.0,
    "mention_target_entropy": math.log2(3.0) - 2.0 / 3.0,
    "retweet_fraction": 1.0 / 3.0,
    "reply_fraction": 1.0 / 3.0,
    "self_reply_fraction": 0.0,
    "distinct_interlocutor_ratio": 3.0 / 5.0,
    "mean_interval_seconds": 5400.0,
    "std_interval_seconds": 1800.0,
    "min_interval_seconds": 3600.0,
    "interval_burstiness": -0.5,
    "tweet_hour_entropy": math.log2(3.0),
    "timeline_too_short": 0.0,
    "mean_words_per_tweet": 10.0 / 3.0,
    "mean_chars_per_tweet": 15.0,
    "hashtags_per_tweet": 1.0 / 3.0,
    "urls_per_tweet": 1.0 / 3.0,
    "mentions_per_tweet": 1.0,
    "duplicate_text_fraction": 1.0 - 2.0 / 3.0,
    "nouns_per_tweet": 2.0,
    "verbs_per_tweet": 1.0 / 3.0,
    "adjectives_per_tweet": 1.0,
    "valence_mean": (0.8 - 0.6 + 0.8) / 3.0,
    "valence_std": math.sqrt(98.0 / 225.0),
}


class TestRegistry:
    def test_covers_all_six_classes(self, registry):
        present = {spec.feature_class for spec in registry.specs}
        assert present == set(FEATURE_CLASSES)

    def test_language_dependence_rule(self, registry):
        for spec in registry.specs:
            assert spec.language_dependent == (
                spec.feature_class in ("content_language", "sentiment"))

    def test_lite_subset_metadata_only(self, registry):
        lite = registry.lite_view()
        assert len(lite) > 0
        assert all(s.feature_class == "user_profile" for s in lite.specs)
        assert lite.version == f"{registry.version}/lite"

    def test_names_unique_and_documented(self, registry):
        names = registry.names()
        assert len(names) == len(set(names))
        assert all(spec.definition for spec in registry.specs)

    def test_registry_doc_export(self, registry, tmp_path):
        features.export_registry(tmp_path / "registry.json", registry)
        import json

        doc = json.loads((tmp_path / "registry.json").read_text())
        assert doc["version"] == registry.version
        assert len(doc["features"]) == len(registry)


class TestMicroPayload:
    def test_every_definition_hand_checks(self, micro_payload, registry):
        vec = extract_full(micro_payload, registry)
        named = dict(zip(registry.names(), vec.values))
        assert set(named) == set(MICRO_EXPECTED)
        for name, expected in MICRO_EXPECTED.items():
            assert named[name] == pytest.approx(expected, rel=1e-12, abs=1e-12), name


class TestExtractFull:
    def test_screen_name_character_counts(self):
        user = UserObject(
            user_id="u", screen_name="yang3kc", display_name="",
            created_at=datetime(2020, 1, 1, tzinfo=UTC))
        payload = AccountPayload(
            user=user, timeline=(), mentions=(),
            probe_time=datetime(2021, 1, 1, tzinfo=UTC))
        reg = default_registry()
        named = dict(zip(reg.names(), extract_full(payload, reg).values))
        assert named["screen_name_length"] == 7.0
        assert named["digits_in_screen_name"] == 1.0

    def test_empty_timeline_imputation(self):
        user = UserObject(
            user_id="u", screen_name="abc", display_name="",
            created_at=datetime(2020, 1, 1, tzinfo=UTC))
        payload = AccountPayload(
            user=user, timeline=(), mentions=(),
            probe_time=datetime(2021, 1, 1, tzinfo=UTC))
        reg = default_registry()
        vec = extract_full(payload, reg)
        named = dict(zip(reg.names(), vec.values))
        assert named["timeline_too_short"] == 1.0
        assert named["mean_interval_seconds"] == 0.0
        assert named["tweet_hour_entropy"] == 0.0
        assert all(math.isfinite(v) for v in vec.values)

    def test_deterministic(self, small_corpus, registry):
        payload = small_corpus.records[0].payload
        assert extract_full(payload, registry) == extract_full(payload, registry)

    def test_language_independent_coords_survive_text_scramble(
            self, small_corpus, registry):
        indep = set(registry.language_independent_indices())
        for record in small_corpus.records[:20]:
            payload = record.payload
            scrambled = replace(payload, timeline=tuple(
                replace(t, text=t.text[::-1] + " zz") for t in payload.timeline))
            before = extract_full(payload, registry).values
            after = extract_full(scrambled, registry).values
            for i in indep:
                assert before[i] == after[i]

    def test_unknown_feature_rejected(self, micro_payload, registry):
        from botscope.features import FeatureRegistry, FeatureSpec

        bogus = FeatureRegistry(version="x", specs=(
            FeatureSpec(name="not_a_feature", feature_class="user_profile",
                        language_dependent=False, lite_eligible=True,
                        definition="bogus"),))
        with pytest.raises(ValueError, match="no extractor"):
            extract_full(micro_payload, bogus)


class TestExtractLite:
    def test_tweets_per_day_formula(self):
        user = UserObject(
            user_id="u", screen_name="abc", display_name="",
            created_at=datetime(2021, 1, 1, tzinfo=UTC), statuses_count=300)
        probe = datetime(2021, 1, 31, tzinfo=UTC)
        reg = default_registry()
        vec = extract_lite(user, probe, reg)
        named = dict(zip(reg.lite_view().names(), vec.values))
        assert named["tweets_per_day"] == pytest.approx(300.0 / 31.0, rel=1e-12)

    def test_brand_new_account_zero_rate(self):
        created = datetime(2021, 1, 1, tzinfo=UTC)
        user = UserObject(
            user_id="u", screen_name="abc", display_name="", created_at=created)
        vec = extract_lite(user, created)
        named = dict(zip(default_registry().lite_view().names(), vec.values))
        assert named["tweets_per_day"] == 0.0
        assert named["account_age_days"] == 0.0

    def test_probe_before_creation_rejected(self):
        user = UserObject(
            user_id="u", screen_name="abc", display_name="",
            created_at=datetime(2021, 1, 1, tzinfo=UTC))
        with pytest.raises(ValueError, match="negative"):
            extract_lite(user, datetime(2020, 1, 1, tzinfo=UTC))

    def test_matches_full_extraction_projection(self, registry):
        # equality oracle over 100 synthetic users
        ds = synthesize_corpus(
            corpus.CorpusSpec(humans=50, spammers=50, name="proj"), seed=13)
        lite_idx = registry.lite_indices()
        for record in ds.records:
            payload = record.payload
            full = extract_full(payload, registry)
            lite = extract_lite(payload.user, payload.probe_time, registry)
            assert lite.values == tuple(full.values[i] for i in lite_idx)
            assert lite.registry_version == f"{registry.version}/lite"


class TestFeatureVector:
    def test_rejects_non_finite(self):
        with pytest.raises(ValueError, match="finite"):
            FeatureVector(values=(1.0, float("nan")), registry_version="v1")
