"""Deterministic feature extraction over account payloads.

The registry maps ~40 named features onto six classes (user_profile, friends,
network, temporal, content_language, sentiment). Features in the last two
classes are language-dependent; user_profile features are computable from the
bare user object plus a probe time and form the metadata-only ("lite") subset.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from datetime import datetime
from functools import lru_cache
from importlib import resources
from typing import Callable, Sequence

from .corpus import AccountPayload, TweetRecord, UserObject

REGISTRY_VERSION = "v1"

FEATURE_CLASSES = (
    "user_profile", "friends", "network", "temporal", "content_language", "sentiment")
LANGUAGE_DEPENDENT_CLASSES = ("content_language", "sentiment")

_STRIP_CHARS = ".,!?;:()[]{}\"'`~#@$%&*"


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    feature_class: str
    language_dependent: bool
    lite_eligible: bool
    definition: str

    def __post_init__(self):
        if self.feature_class not in FEATURE_CLASSES:
            raise ValueError(f"feature {self.name}: unknown class {self.feature_class!r}")
        if self.language_dependent != (self.feature_class in LANGUAGE_DEPENDENT_CLASSES):
            raise ValueError(
                f"feature {self.name}: language_dependent must hold exactly for classes "
                f"{LANGUAGE_DEPENDENT_CLASSES}")
        if self.lite_eligible and self.feature_class != "user_profile":
            raise ValueError(f"feature {self.name}: lite_eligible requires user_profile class")


@dataclass(frozen=True)
class FeatureRegistry:
    version: str
    specs: tuple[FeatureSpec, ...]

    def __post_init__(self):
        names = [s.name for s in self.specs]
        if len(names) != len(set(names)):
            raise ValueError("registry: feature names must be unique")

    def __len__(self) -> int:
        return len(self.specs)

    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.specs)

    def index_of(self, name: str) -> int:
        for i, s in enumerate(self.specs):
            if s.name == name:
                return i
        raise KeyError(name)

    def language_independent_indices(self) -> tuple[int, ...]:
        return tuple(i for i, s in enumerate(self.specs) if not s.language_dependent)

    def lite_indices(self) -> tuple[int, ...]:
        return tuple(i for i, s in enumerate(self.specs) if s.lite_eligible)

    def lite_view(self) -> "FeatureRegistry":
        """Projection onto the metadata-only subset, with a derived version tag."""
        return FeatureRegistry(
            version=f"{self.version}/lite",
            specs=tuple(self.specs[i] for i in self.lite_indices()),
        )

    def to_doc(self) -> dict:
        """Machine-readable registry document (docs, UI tooltips)."""
        return {
            "version": self.version,
            "features": [
                {
                    "name": s.name,
                    "class": s.feature_class,
                    "language_dependent": s.language_dependent,
                    "lite_eligible": s.lite_eligible,
                    "definition": s.definition,
                }
                for s in self.specs
            ],
        }


@dataclass(frozen=True)
class FeatureVector:
    values: tuple[float, ...]
    registry_version: str

    def __post_init__(self):
        for v in self.values:
            if not math.isfinite(v):
                raise ValueError("feature vector: all values must be finite")


def load_pos_lexicon() -> dict[str, str]:
    return _load_data_json("pos_lexicon.json")


def load_valence_lexicon() -> dict[str, float]:
    return _load_data_json("valence_lexicon.json")


def load_micro_payload() -> AccountPayload:
    """The 3-tweet fixture used to hand-check every registry definition."""
    from .corpus import payload_from_dict

    return payload_from_dict(_load_data_json("micro_payload.json"))


@lru_cache(maxsize=None)
def _load_data_json(name: str):
    text = resources.files("botscope.data").joinpath(name).read_text(encoding="utf-8")
    return json.loads(text)


def tokenize(text: str) -> list[str]:
    """Lowercase whitespace tokens with punctuation stripped from both ends."""
    out = []
    for raw in text.lower().split():
        word = raw.strip(_STRIP_CHARS)
        if word:
            out.append(word)
    return out


def _entropy_bits(counts: Sequence[int]) -> float:
    total = sum(counts)
    if total == 0:
        return 0.0
    h = 0.0
    for c in counts:
        if c:
            p = c / total
            h -= p * math.log2(p)
    return h


def _age_days(user: UserObject, probe_time: datetime) -> float:
    seconds = (probe_time - user.created_at).total_seconds()
    if seconds < 0:
        raise ValueError(
            f"user {user.user_id}: probe_time precedes account creation (age would be negative)")
    return seconds / 86400.0


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def _pstd(values: Sequence[float]) -> float:
    if len(values) < 2:
        return 0.0
    m = _mean(values)
    return math.sqrt(sum((v - m) ** 2 for v in values) / len(values))


# ---------------------------------------------------------------------------
# Per-payload derived context shared by several extractors
# ---------------------------------------------------------------------------

class _TimelineStats:
    def __init__(self, timeline: Sequence[TweetRecord]):
        self.n = len(timeline)
        times = sorted(t.created_at for t in timeline)
        self.intervals = [
            (times[i + 1] - times[i]).total_seconds() for i in range(len(times) - 1)]
        self.hours = [t.created_at.hour for t in timeline]

        self.mention_targets: list[str] = []
        self.retweet_targets: list[str] = []
        self.reply_targets: list[str] = []
        self.n_retweets = 0
        self.n_replies = 0
        self.n_self_replies = 0
        for t in timeline:
            self.mention_targets.extend(t.entities.mentions)
            if t.is_retweet:
                self.n_retweets += 1
                if t.retweeted_user_id:
                    self.retweet_targets.append(t.retweeted_user_id)
            if t.is_reply:
                self.n_replies += 1
                if t.replied_user_id:
                    self.reply_targets.append(t.replied_user_id)
                    if t.replied_user_id == t.author.user_id:
                        self.n_self_replies += 1

        self.token_lists = [tokenize(t.text) for t in timeline]
        self.texts = [t.text.strip().lower() for t in timeline]

    def interaction_targets(self) -> list[str]:
        return self.mention_targets + self.retweet_targets + self.reply_targets


def _interval_values(stats: _TimelineStats) -> tuple[float, float, float, float]:
    """(mean, std, min, burstiness) with the short-timeline imputation applied."""
    iv = stats.intervals
    if not iv:
        return 0.0, 0.0, 0.0, 0.0
    mean = _mean(iv)
    std = _pstd(iv)
    lo = min(iv)
    denom = std + mean
    burst = (std - mean) / denom if denom > 0 else 0.0
    return mean, std, lo, burst


def _valence_per_tweet(stats: _TimelineStats) -> list[float]:
    lex = load_valence_lexicon()
    out = []
    for tokens in stats.token_lists:
        hits = [lex[w] for w in tokens if w in lex]
        out.append(_mean(hits))
    return out


def _pos_rate(stats: _TimelineStats, tag: str) -> float:
    lex = load_pos_lexicon()
    if stats.n == 0:
        return 0.0
    counts = [sum(1 for w in tokens if lex.get(w) == tag) for tokens in stats.token_lists]
    return _mean(counts)


# ---------------------------------------------------------------------------
# Registry definition
# ---------------------------------------------------------------------------

_UserFn = Callable[[UserObject, float], float]
_PayloadFn = Callable[[AccountPayload, _TimelineStats], float]


def _count_distinct(values: Sequence[str]) -> float:
    return float(len(set(values)))


_USER_FEATURES: list[tuple[str, str, _UserFn]] = [
    ("screen_name_length", "number of characters in the screen name",
     lambda u, age: float(len(u.screen_name))),
    ("digits_in_screen_name", "number of decimal digit characters in the screen name",
     lambda u, age: float(sum(ch.isdigit() for ch in u.screen_name))),
    ("display_name_length", "number of characters in the display name",
     lambda u, age: float(len(u.display_name))),
    ("description_length", "number of characters in the profile description",
     lambda u, age: float(len(u.description))),
    ("account_age_days", "days from account creation to probe time (fractional)",
     lambda u, age: age),
    ("followers_count", "declared follower count",
     lambda u, age: float(u.followers_count)),
    ("friends_count", "declared friend (following) count",
     lambda u, age: float(u.friends_count)),
    ("statuses_count", "declared lifetime tweet count",
     lambda u, age: float(u.statuses_count)),
    ("listed_count", "number of public lists containing the account",
     lambda u, age: float(u.listed_count)),
    ("favourites_count", "declared likes given count",
     lambda u, age: float(u.favourites_count)),
    ("follower_friend_ratio", "followers_count / (friends_count + 1)",
     lambda u, age: u.followers_count / (u.friends_count + 1)),
    ("tweets_per_day", "statuses_count / (account_age_days + 1)",
     lambda u, age: u.statuses_count / (age + 1.0)),
    ("followers_per_day", "followers_count / (account_age_days + 1)",
     lambda u, age: u.followers_count / (age + 1.0)),
    ("verified", "1 if the account is verified else 0",
     lambda u, age: float(u.verified)),
    ("default_profile", "1 if the profile theme is unchanged else 0",
     lambda u, age: float(u.default_profile)),
    ("default_profile_image", "1 if the avatar is the default egg else 0",
     lambda u, age: float(u.default_profile_image)),
    ("profile_use_background_image", "1 if a background image is set else 0",
     lambda u, age: float(u.profile_use_background_image)),
]

_PAYLOAD_FEATURES: list[tuple[str, str, str, _PayloadFn]] = [
    # friends: contact structure approximated from timeline interactions
    ("unique_mentioned_users", "friends",
     "distinct user ids mentioned across the timeline",
     lambda p, s: _count_distinct(s.mention_targets)),
    ("unique_retweeted_users", "friends",
     "distinct user ids retweeted across the timeline",
     lambda p, s: _count_distinct(s.retweet_targets)),
    ("mention_target_entropy", "friends",
     "Shannon entropy (bits) of the mention-target frequency distribution; 0 if no mentions",
     lambda p, s: _entropy_bits(
         [s.mention_targets.count(x) for x in sorted(set(s.mention_targets))])),
    # network
    ("retweet_fraction", "network",
     "retweets / timeline length; 0 for an empty timeline",
     lambda p, s: s.n_retweets / s.n if s.n else 0.0),
    ("reply_fraction", "network",
     "replies / timeline length; 0 for an empty timeline",
     lambda p, s: s.n_replies / s.n if s.n else 0.0),
    ("self_reply_fraction", "network",
     "replies to the account itself / timeline length; 0 for an empty timeline",
     lambda p, s: s.n_self_replies / s.n if s.n else 0.0),
    ("distinct_interlocutor_ratio", "network",
     "distinct interaction targets (mentions, retweets, replies) over total interaction "
     "occurrences; 0 if no interactions",
     lambda p, s: (len(set(s.interaction_targets())) / len(s.interaction_targets())
                   if s.interaction_targets() else 0.0)),
    # temporal
    ("mean_interval_seconds", "temporal",
     "mean of consecutive inter-tweet gaps in seconds; 0 when under 2 tweets",
     lambda p, s: _interval_values(s)[0]),
    ("std_interval_seconds", "temporal",
     "population standard deviation of inter-tweet gaps; 0 when under 2 tweets",
     lambda p, s: _interval_values(s)[1]),
    ("min_interval_seconds", "temporal",
     "minimum inter-tweet gap in seconds; 0 when under 2 tweets",
     lambda p, s: _interval_values(s)[2]),
    ("interval_burstiness", "temporal",
     "(std - mean) / (std + mean) over inter-tweet gaps; 0 when undefined",
     lambda p, s: _interval_values(s)[3]),
    ("tweet_hour_entropy", "temporal",
     "Shannon entropy (bits) of the tweet UTC-hour histogram over 24 bins; 0 if empty",
     lambda p, s: _entropy_bits([s.hours.count(h) for h in range(24)])),
    ("timeline_too_short", "temporal",
     "1 when the timeline has fewer than 2 tweets (interval features imputed to 0)",
     lambda p, s: 1.0 if s.n < 2 else 0.0),
    # content_language
    ("mean_words_per_tweet", "content_language",
     "mean whitespace token count per tweet; 0 for an empty timeline",
     lambda p, s: _mean([len(t) for t in s.token_lists])),
    ("mean_chars_per_tweet", "content_language",
     "mean character count of tweet text; 0 for an empty timeline",
     lambda p, s: _mean([float(len(t.text)) for t in p.timeline])),
    ("hashtags_per_tweet", "content_language",
     "mean hashtag entity count per tweet",
     lambda p, s: _mean([float(len(t.entities.hashtags)) for t in p.timeline])),
    ("urls_per_tweet", "content_language",
     "mean url entity count per tweet",
     lambda p, s: _mean([float(len(t.entities.urls)) for t in p.timeline])),
    ("mentions_per_tweet", "content_language",
     "mean mention entity count per tweet",
     lambda p, s: _mean([float(len(t.entities.mentions)) for t in p.timeline])),
    ("duplicate_text_fraction", "content_language",
     "1 - distinct lowercased texts / tweet count; 0 for an empty timeline",
     lambda p, s: 1.0 - len(set(s.texts)) / s.n if s.n else 0.0),
    ("nouns_per_tweet", "content_language",
     "mean count per tweet of tokens tagged noun in the shipped lexicon",
     lambda p, s: _pos_rate(s, "noun")),
    ("verbs_per_tweet", "content_language",
     "mean count per tweet of tokens tagged verb in the shipped lexicon",
     lambda p, s: _pos_rate(s, "verb")),
    ("adjectives_per_tweet", "content_language",
     "mean count per tweet of tokens tagged adjective in the shipped lexicon",
     lambda p, s: _pos_rate(s, "adj")),
    # sentiment
    ("valence_mean", "sentiment",
     "mean over tweets of the mean lexicon valence of tweet tokens (0 when no hits)",
     lambda p, s: _mean(_valence_per_tweet(s))),
    ("valence_std", "sentiment",
     "population standard deviation over tweets of per-tweet lexicon valence",
     lambda p, s: _pstd(_valence_per_tweet(s))),
]


@lru_cache(maxsize=1)
def default_registry() -> FeatureRegistry:
    """The versioned desk-scale registry covering all six feature classes."""
    specs: list[FeatureSpec] = []
    for name, definition, _fn in _USER_FEATURES:
        specs.append(FeatureSpec(
            name=name, feature_class="user_profile", language_dependent=False,
            lite_eligible=True, definition=definition))
    for name, cls, definition, _fn in _PAYLOAD_FEATURES:
        specs.append(FeatureSpec(
            name=name, feature_class=cls,
            language_dependent=cls in LANGUAGE_DEPENDENT_CLASSES,
            lite_eligible=False, definition=definition))
    return FeatureRegistry(version=REGISTRY_VERSION, specs=tuple(specs))


_USER_FN = {name: fn for name, _d, fn in _USER_FEATURES}
_PAYLOAD_FN = {name: fn for name, _c, _d, fn in _PAYLOAD_FEATURES}


def extract_full(payload: AccountPayload, registry: FeatureRegistry | None = None) -> FeatureVector:
    """Compute every registry feature for a full account payload.

    Pure and total on valid payloads: short timelines fall back to the
    documented imputations instead of NaN.
    """
    registry = registry or default_registry()
    age = _age_days(payload.user, payload.probe_time)
    stats = _TimelineStats(payload.timeline)
    values: list[float] = []
    for spec in registry.specs:
        if spec.name in _USER_FN:
            values.append(float(_USER_FN[spec.name](payload.user, age)))
        elif spec.name in _PAYLOAD_FN:
            values.append(float(_PAYLOAD_FN[spec.name](payload, stats)))
        else:
            raise ValueError(
                f"registry {registry.version}: no extractor for feature {spec.name!r}")
    return FeatureVector(values=tuple(values), registry_version=registry.version)


def extract_lite(user: UserObject, probe_time: datetime,
                 registry: FeatureRegistry | None = None) -> FeatureVector:
    """Compute the metadata-only feature subset from a bare user object.

    Values match the corresponding extract_full coordinates for the same user
    and probe time; no timeline or text is read.
    """
    registry = registry or default_registry()
    lite = registry if registry.version.endswith("/lite") else registry.lite_view()
    age = _age_days(user, probe_time)
    values: list[float] = []
    for spec in lite.specs:
        if spec.name not in _USER_FN:
            raise ValueError(
                f"registry {lite.version}: feature {spec.name!r} is not metadata-only")
        values.append(float(_USER_FN[spec.name](user, age)))
    return FeatureVector(values=tuple(values), registry_version=lite.version)


def export_registry(path, registry: FeatureRegistry | None = None) -> None:
    """Write the registry document as JSON for docs and UI tooltips."""
    registry = registry or default_registry()
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(registry.to_doc(), fh, indent=2, sort_keys=True)
        fh.write("\n")
