"""Account/tweet data model, labeled-dataset I/O, and synthetic corpus generation.

Datasets live on disk as one JSON-lines file of account payloads plus a CSV
label file (``user_id,label[,bot_class]``). All records are validated at load
time; loaded datasets are immutable and safe to share across threads.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .jsonutil import format_utc, parse_utc

logger = logging.getLogger(__name__)

HUMAN = "human"
BOT = "bot"
LABELS = (HUMAN, BOT)
BOT_CLASSES = ("fake_follower", "spammer", "self_declared", "astroturf", "financial", "other")
TIMELINE_CAP = 200


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UserObject:
    """Account metadata as embedded in tweet payloads."""

    user_id: str
    screen_name: str
    display_name: str
    created_at: datetime
    followers_count: int = 0
    friends_count: int = 0
    statuses_count: int = 0
    listed_count: int = 0
    favourites_count: int = 0
    verified: bool = False
    default_profile: bool = False
    default_profile_image: bool = False
    profile_use_background_image: bool = True
    description: str = ""
    declared_language: str | None = None

    def __post_init__(self):
        if not self.user_id:
            raise ValueError("user.user_id: must be non-empty")
        if self.created_at.tzinfo is None:
            raise ValueError(f"user {self.user_id}: created_at must be timezone-aware UTC")
        for name in ("followers_count", "friends_count", "statuses_count",
                     "listed_count", "favourites_count"):
            if getattr(self, name) < 0:
                raise ValueError(f"user {self.user_id}: {name} must be >= 0")


@dataclass(frozen=True)
class TweetEntities:
    hashtags: tuple[str, ...] = ()
    mentions: tuple[str, ...] = ()
    urls: tuple[str, ...] = ()
    cashtags: tuple[str, ...] = ()

    def __post_init__(self):
        for tag in self.cashtags:
            if not tag or tag != tag.upper() or tag.startswith("$"):
                raise ValueError(f"cashtag {tag!r}: stored uppercase without the '$' sign")


@dataclass(frozen=True)
class TweetRecord:
    """A single tweet with its embedded author user object."""

    tweet_id: str
    author: UserObject
    created_at: datetime
    text: str
    lang: str | None = None
    entities: TweetEntities = field(default_factory=TweetEntities)
    is_retweet: bool = False
    is_reply: bool = False
    retweeted_user_id: str | None = None
    replied_user_id: str | None = None

    def __post_init__(self):
        if not self.tweet_id:
            raise ValueError("tweet.tweet_id: must be non-empty")
        if self.created_at.tzinfo is None:
            raise ValueError(f"tweet {self.tweet_id}: created_at must be timezone-aware UTC")
        if self.created_at < self.author.created_at:
            raise ValueError(
                f"tweet {self.tweet_id}: created_at precedes author account creation")
        if self.is_retweet and not self.retweeted_user_id:
            raise ValueError(f"tweet {self.tweet_id}: retweet without retweeted_user_id")


@dataclass(frozen=True)
class AccountPayload:
    """The unit of scoring: a user, their recent timeline, and mention tweets."""

    user: UserObject
    timeline: tuple[TweetRecord, ...]
    mentions: tuple[TweetRecord, ...]
    probe_time: datetime

    def __post_init__(self):
        if len(self.timeline) > TIMELINE_CAP:
            raise ValueError(
                f"payload {self.user.user_id}: timeline holds {len(self.timeline)} tweets, "
                f"cap is {TIMELINE_CAP}")
        if self.probe_time.tzinfo is None:
            raise ValueError(f"payload {self.user.user_id}: probe_time must be timezone-aware")
        for tweet in self.timeline:
            if tweet.author.user_id != self.user.user_id:
                raise ValueError(
                    f"payload {self.user.user_id}: timeline tweet {tweet.tweet_id} "
                    f"authored by {tweet.author.user_id}")
        for tweet in self.mentions:
            if self.user.user_id not in tweet.entities.mentions:
                raise ValueError(
                    f"payload {self.user.user_id}: mention tweet {tweet.tweet_id} "
                    f"does not mention the user")
        for tweet in (*self.timeline, *self.mentions):
            if tweet.created_at > self.probe_time:
                raise ValueError(
                    f"payload {self.user.user_id}: tweet {tweet.tweet_id} postdates probe_time")
        if self.user.created_at > self.probe_time:
            raise ValueError(f"payload {self.user.user_id}: probe_time precedes account creation")


@dataclass(frozen=True)
class LabeledRecord:
    payload: AccountPayload
    label: str
    bot_class: str | None = None

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"label {self.label!r}: must be one of {LABELS}")
        if self.bot_class is not None:
            if self.label != BOT:
                raise ValueError("bot_class is only valid on bot records")
            if self.bot_class not in BOT_CLASSES:
                raise ValueError(f"bot_class {self.bot_class!r}: must be one of {BOT_CLASSES}")


@dataclass(frozen=True)
class LabeledDataset:
    """A named set of labeled account payloads (Bot-Repository-style)."""

    name: str
    records: tuple[LabeledRecord, ...]
    bot_class: str | None = None

    def __post_init__(self):
        seen: set[str] = set()
        for record in self.records:
            uid = record.payload.user.user_id
            if uid in seen:
                raise ValueError(f"dataset {self.name}: duplicate user_id {uid}")
            seen.add(uid)

    @property
    def n_bots(self) -> int:
        return sum(1 for r in self.records if r.label == BOT)

    @property
    def n_humans(self) -> int:
        return sum(1 for r in self.records if r.label == HUMAN)

    def user_ids(self) -> frozenset[str]:
        return frozenset(r.payload.user.user_id for r in self.records)

    def bot_classes(self) -> dict[str, int]:
        """Bot record counts keyed by class; unclassed bot records fall under 'other'."""
        counts: dict[str, int] = {}
        for record in self.records:
            if record.label != BOT:
                continue
            cls = record.bot_class or self.bot_class or "other"
            counts[cls] = counts.get(cls, 0) + 1
        return counts


# ---------------------------------------------------------------------------
# Dict round-trip (the JSON-lines shape, also the service wire shape)
# ---------------------------------------------------------------------------

def user_to_dict(user: UserObject) -> dict:
    return {
        "user_id": user.user_id,
        "screen_name": user.screen_name,
        "display_name": user.display_name,
        "created_at": format_utc(user.created_at),
        "followers_count": user.followers_count,
        "friends_count": user.friends_count,
        "statuses_count": user.statuses_count,
        "listed_count": user.listed_count,
        "favourites_count": user.favourites_count,
        "verified": user.verified,
        "default_profile": user.default_profile,
        "default_profile_image": user.default_profile_image,
        "profile_use_background_image": user.profile_use_background_image,
        "description": user.description,
        "declared_language": user.declared_language,
    }


def _need(data: Mapping, key: str, where: str):
    if key not in data:
        raise ValueError(f"{where}.{key}: missing required field")
    return data[key]


def _to_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"{where}: expected an integer, got {value!r}")
    return value


def user_from_dict(data: Mapping, where: str = "user") -> UserObject:
    if not isinstance(data, Mapping):
        raise ValueError(f"{where}: expected an object")
    lang = data.get("declared_language")
    return UserObject(
        user_id=str(_need(data, "user_id", where)),
        screen_name=str(_need(data, "screen_name", where)),
        display_name=str(data.get("display_name", "")),
        created_at=parse_utc(_need(data, "created_at", where), f"{where}.created_at"),
        followers_count=_to_int(_need(data, "followers_count", where), f"{where}.followers_count"),
        friends_count=_to_int(_need(data, "friends_count", where), f"{where}.friends_count"),
        statuses_count=_to_int(_need(data, "statuses_count", where), f"{where}.statuses_count"),
        listed_count=_to_int(data.get("listed_count", 0), f"{where}.listed_count"),
        favourites_count=_to_int(data.get("favourites_count", 0), f"{where}.favourites_count"),
        verified=bool(data.get("verified", False)),
        default_profile=bool(data.get("default_profile", False)),
        default_profile_image=bool(data.get("default_profile_image", False)),
        profile_use_background_image=bool(data.get("profile_use_background_image", True)),
        description=str(data.get("description", "")),
        declared_language=None if lang is None else str(lang),
    )


def tweet_to_dict(tweet: TweetRecord) -> dict:
    return {
        "tweet_id": tweet.tweet_id,
        "author": user_to_dict(tweet.author),
        "created_at": format_utc(tweet.created_at),
        "text": tweet.text,
        "lang": tweet.lang,
        "entities": {
            "hashtags": list(tweet.entities.hashtags),
            "mentions": list(tweet.entities.mentions),
            "urls": list(tweet.entities.urls),
            "cashtags": list(tweet.entities.cashtags),
        },
        "is_retweet": tweet.is_retweet,
        "is_reply": tweet.is_reply,
        "retweeted_user_id": tweet.retweeted_user_id,
        "replied_user_id": tweet.replied_user_id,
    }


def tweet_from_dict(data: Mapping, where: str = "tweet") -> TweetRecord:
    if not isinstance(data, Mapping):
        raise ValueError(f"{where}: expected an object")
    raw_entities = data.get("entities", {})
    if not isinstance(raw_entities, Mapping):
        raise ValueError(f"{where}.entities: expected an object")
    entities = TweetEntities(
        hashtags=tuple(str(h) for h in raw_entities.get("hashtags", ())),
        mentions=tuple(str(m) for m in raw_entities.get("mentions", ())),
        urls=tuple(str(u) for u in raw_entities.get("urls", ())),
        cashtags=tuple(str(c) for c in raw_entities.get("cashtags", ())),
    )
    lang = data.get("lang")
    return TweetRecord(
        tweet_id=str(_need(data, "tweet_id", where)),
        author=user_from_dict(_need(data, "author", where), f"{where}.author"),
        created_at=parse_utc(_need(data, "created_at", where), f"{where}.created_at"),
        text=str(data.get("text", "")),
        lang=None if lang is None else str(lang),
        entities=entities,
        is_retweet=bool(data.get("is_retweet", False)),
        is_reply=bool(data.get("is_reply", False)),
        retweeted_user_id=data.get("retweeted_user_id"),
        replied_user_id=data.get("replied_user_id"),
    )


def payload_to_dict(payload: AccountPayload) -> dict:
    return {
        "user": user_to_dict(payload.user),
        "timeline": [tweet_to_dict(t) for t in payload.timeline],
        "mentions": [tweet_to_dict(t) for t in payload.mentions],
        "probe_time": format_utc(payload.probe_time),
    }


def payload_from_dict(data: Mapping, where: str = "payload") -> AccountPayload:
    if not isinstance(data, Mapping):
        raise ValueError(f"{where}: expected an object")
    timeline = data.get("timeline", ())
    mentions = data.get("mentions", ())
    if not isinstance(timeline, Sequence) or isinstance(timeline, (str, bytes)):
        raise ValueError(f"{where}.timeline: expected a list")
    if not isinstance(mentions, Sequence) or isinstance(mentions, (str, bytes)):
        raise ValueError(f"{where}.mentions: expected a list")
    return AccountPayload(
        user=user_from_dict(_need(data, "user", where), f"{where}.user"),
        timeline=tuple(
            tweet_from_dict(t, f"{where}.timeline[{i}]") for i, t in enumerate(timeline)),
        mentions=tuple(
            tweet_from_dict(t, f"{where}.mentions[{i}]") for i, t in enumerate(mentions)),
        probe_time=parse_utc(_need(data, "probe_time", where), f"{where}.probe_time"),
    )


# ---------------------------------------------------------------------------
# Dataset I/O
# ---------------------------------------------------------------------------

def _records_path(path: Path, name: str) -> Path:
    return path / f"{name}.jsonl"


def _labels_path(path: Path, name: str) -> Path:
    return path / f"{name}.labels.csv"


def save_dataset(dataset: LabeledDataset, path: str | Path) -> None:
    """Write ``<name>.jsonl`` and ``<name>.labels.csv`` under ``path``."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    with open(_records_path(path, dataset.name), "w", encoding="utf-8") as fh:
        for record in dataset.records:
            fh.write(json.dumps(payload_to_dict(record.payload), sort_keys=True))
            fh.write("\n")
    with open(_labels_path(path, dataset.name), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_id", "label", "bot_class"])
        for record in dataset.records:
            writer.writerow([
                record.payload.user.user_id, record.label, record.bot_class or ""])


def load_dataset(path: str | Path, name: str) -> LabeledDataset:
    """Load a labeled dataset from ``path``; every payload must carry a label."""
    path = Path(path)
    records_file = _records_path(path, name)
    labels_file = _labels_path(path, name)
    if not records_file.exists():
        raise FileNotFoundError(f"dataset {name}: missing records file {records_file}")
    if not labels_file.exists():
        raise FileNotFoundError(f"dataset {name}: missing label file {labels_file}")

    labels: dict[str, tuple[str, str | None]] = {}
    with open(labels_file, encoding="utf-8", newline="") as fh:
        for row_no, row in enumerate(csv.reader(fh), start=1):
            if not row or (row_no == 1 and row[0] == "user_id"):
                continue
            if len(row) < 2:
                raise ValueError(f"{labels_file.name} line {row_no}: expected user_id,label")
            uid, label = row[0], row[1]
            bot_class = row[2] if len(row) > 2 and row[2] else None
            if label not in LABELS:
                raise ValueError(
                    f"{labels_file.name} line {row_no}: label {label!r} not in {LABELS}")
            labels[uid] = (label, bot_class)

    records: list[LabeledRecord] = []
    with open(records_file, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                payload = payload_from_dict(json.loads(line))
            except (ValueError, json.JSONDecodeError) as exc:
                raise ValueError(f"{records_file.name} line {line_no}: {exc}") from None
            uid = payload.user.user_id
            if uid not in labels:
                raise ValueError(f"dataset {name}: no label for user_id {uid}")
            label, bot_class = labels[uid]
            records.append(LabeledRecord(payload=payload, label=label, bot_class=bot_class))

    dataset = LabeledDataset(name=name, records=tuple(records))
    logger.info("dataset %s: %d bots, %d humans", name, dataset.n_bots, dataset.n_humans)
    return dataset


def group_tweets_by_query(tweets: Sequence[TweetRecord], cashtag: str) -> list[TweetRecord]:
    """Tweets whose cashtag entities contain ``cashtag``, preserving input order."""
    if cashtag != cashtag.upper() or cashtag.startswith("$"):
        raise ValueError(f"cashtag {cashtag!r}: pass the uppercase symbol without '$'")
    return [t for t in tweets if cashtag in t.entities.cashtags]


# ---------------------------------------------------------------------------
# Synthetic corpus generation
# ---------------------------------------------------------------------------

ARCHETYPES = ("human", "spammer", "fake_follower", "self_declared", "astroturf", "cyborg")
DEFAULT_CONFIG_NAME = "archetypes_v1.json"

# Cyborg accounts: one tight template of human-looking behavior, labels split
# half human / half bot (annotator disagreement over script-assisted accounts).
# Bot-labeled cyborgs cycle through these classes.
_CYBORG_CLASSES = ("spammer", "fake_follower", "self_declared", "astroturf")


@dataclass(frozen=True)
class CorpusSpec:
    """Per-archetype account counts for synthesize_corpus."""

    humans: int = 0
    spammers: int = 0
    fake_followers: int = 0
    self_declared: int = 0
    astroturf: int = 0
    cyborgs: int = 0
    name: str = "synthetic"
    config_name: str = DEFAULT_CONFIG_NAME

    def counts(self) -> dict[str, int]:
        return {
            "human": self.humans,
            "spammer": self.spammers,
            "fake_follower": self.fake_followers,
            "self_declared": self.self_declared,
            "astroturf": self.astroturf,
            "cyborg": self.cyborgs,
        }


def load_archetype_config(config_name: str = DEFAULT_CONFIG_NAME) -> dict:
    """Read the versioned archetype parameter fixture shipped with the package."""
    text = resources.files("botscope.data").joinpath(config_name).read_text(encoding="utf-8")
    return json.loads(text)


def _log_uniform_int(rng: np.random.Generator, lo: int, hi: int) -> int:
    if hi <= lo:
        return lo
    value = math.exp(rng.uniform(math.log(lo + 1.0), math.log(hi + 1.0))) - 1.0
    return max(lo, min(hi, int(round(value))))


_ALPHABET = "abcdefghijklmnopqrstuvwxyz"
_DIURNAL_HOURS = np.array(
    [0.2, 0.1, 0.05, 0.05, 0.05, 0.1, 0.3, 0.8, 1.2, 1.4, 1.3, 1.2,
     1.3, 1.2, 1.1, 1.0, 1.1, 1.3, 1.6, 1.8, 1.7, 1.3, 0.8, 0.4])


def _pick_words(rng: np.random.Generator, vocab: list[str], n: int) -> list[str]:
    idx = rng.integers(0, len(vocab), size=n)
    return [vocab[i] for i in idx]


def _make_screen_name(rng: np.random.Generator, n_letters: int, n_digits: int) -> str:
    letters = "".join(_ALPHABET[i] for i in rng.integers(0, 26, size=max(1, n_letters)))
    digits = "".join(str(int(d)) for d in rng.integers(0, 10, size=n_digits))
    return letters + digits


def _content_vocab() -> list[str]:
    from . import features  # deferred: features ships the lexicons

    pos = features.load_pos_lexicon()
    val = features.load_valence_lexicon()
    fillers = ["the", "a", "to", "of", "and", "in", "on", "for", "with", "at",
               "this", "that", "is", "it", "my", "your", "our", "so", "just", "now"]
    vocab = sorted(set(pos) | set(val) | set(fillers))
    return vocab


_LATENT_RANGES = (
    "age_days", "followers", "friends", "timeline_len", "statuses_per_day",
    "name_digits", "description_words", "favourites", "gap_hours", "target_pool",
    "incoming_mentions")
_LATENT_SCALARS = (
    "gap_sigma", "templates", "duplicate_prob", "hashtag_rate", "url_rate",
    "mention_rate", "retweet_frac", "reply_frac", "self_reply_frac",
    "verified_prob", "default_profile_prob", "default_image_prob", "background_prob")


def _draw_latents(rng: np.random.Generator, p: Mapping) -> dict[str, float]:
    """One concrete numeric draw from an archetype's parameter ranges."""
    lat: dict[str, float] = {}
    for key in _LATENT_RANGES:
        lo, hi = p[key]
        if key in ("followers", "friends", "favourites"):
            lat[key] = float(_log_uniform_int(rng, int(lo), int(hi)))
        else:
            lat[key] = float(rng.uniform(lo, hi))
    for key in _LATENT_SCALARS:
        lat[key] = float(p[key])
    return lat


def _gen_account(rng: np.random.Generator, archetype: str, params: Mapping,
                 human_params: Mapping, probe_time: datetime, user_id: str,
                 vocab: list[str]) -> AccountPayload:
    lat = _draw_latents(rng, params)
    # Two tiers of bots blended toward a fresh human draw: moderately
    # confusable ones stay recognizable, deep ones crowd the near-human region.
    # Deep blends are what separate the two ensemble architectures: a pooled
    # classifier sees their union across classes and wavers, while each
    # specialized classifier sees only its own class's few and stays decisive.
    roll = rng.random()
    blend = 0.0
    if roll < params.get("deep_frac", 0.0):
        blend = rng.uniform(*params.get("deep_blend", (0.7, 0.9)))
    elif roll < params.get("deep_frac", 0.0) + params.get("confusable_frac", 0.0):
        blend = rng.uniform(*params.get("confusable_blend", (0.3, 0.55)))
    if blend > 0.0:
        human_lat = _draw_latents(rng, human_params)
        lat = {k: lat[k] * (1.0 - blend) + human_lat[k] * blend for k in lat}

    age_days = lat["age_days"]
    created_at = probe_time - timedelta(days=float(age_days))
    followers = int(round(lat["followers"]))
    friends = int(round(lat["friends"]))
    timeline_len = int(round(lat["timeline_len"]))
    statuses = int(age_days * lat["statuses_per_day"]) + timeline_len

    n_digits = int(round(lat["name_digits"]))
    screen_name = _make_screen_name(rng, int(rng.integers(4, 11)), n_digits)
    display_name = " ".join(_pick_words(rng, vocab, int(rng.integers(1, 3)))).title()
    desc_words = int(round(lat["description_words"]))
    description = " ".join(_pick_words(rng, vocab, desc_words)) if desc_words else ""

    user = UserObject(
        user_id=user_id,
        screen_name=screen_name,
        display_name=display_name,
        created_at=created_at,
        followers_count=followers,
        friends_count=friends,
        statuses_count=statuses,
        listed_count=_log_uniform_int(rng, 0, max(1, followers // 50)),
        favourites_count=int(round(lat["favourites"])),
        verified=bool(rng.random() < lat["verified_prob"]),
        default_profile=bool(rng.random() < lat["default_profile_prob"]),
        default_profile_image=bool(rng.random() < lat["default_image_prob"]),
        profile_use_background_image=bool(rng.random() < lat["background_prob"]),
        description=description,
        declared_language="en",
    )

    # Tweet times: walk back from just before the probe using archetype gaps,
    # never crossing the account creation time (young accounts tweet less).
    gap_mean_s = lat["gap_hours"] * 3600.0
    gap_sigma = lat["gap_sigma"]
    floor = created_at + timedelta(hours=1)
    times: list[datetime] = []
    cursor = probe_time - timedelta(seconds=float(rng.uniform(60.0, gap_mean_s + 120.0)))
    for _ in range(timeline_len):
        if cursor < floor:
            break
        times.append(cursor)
        if params.get("bursty", False) and rng.random() < 0.65:
            gap = rng.uniform(20.0, 240.0)  # in-burst gap, seconds
        else:
            gap = gap_mean_s * math.exp(rng.normal(0.0, gap_sigma))
        cursor = cursor - timedelta(seconds=float(max(1.0, gap)))
    if params["hour_profile"] == "diurnal":
        weights = _DIURNAL_HOURS / _DIURNAL_HOURS.sum()
        adjusted = []
        for moment in times:
            hour = int(rng.choice(24, p=weights))
            shifted = moment.replace(
                hour=hour, minute=int(rng.integers(0, 60)), second=int(rng.integers(0, 60)))
            adjusted.append(min(max(shifted, floor), probe_time))
        times = sorted(adjusted, reverse=True)
        deduped: list[datetime] = []
        for moment in times:  # break collisions, keep strict descending order
            if deduped and moment >= deduped[-1]:
                moment = deduped[-1] - timedelta(seconds=1)
                if moment < floor:
                    continue
            deduped.append(moment)
        times = deduped

    # Per-account interaction pools.
    pool_size = max(1, int(round(lat["target_pool"])))
    pool = [f"x{int(i):07d}" for i in rng.integers(0, 2_000_000, size=pool_size)]
    hashtag_pool = ["".join(w) for w in
                    (_pick_words(rng, vocab, 1) for _ in range(max(2, pool_size // 2)))]

    templates = [" ".join(_pick_words(rng, vocab, int(rng.integers(5, 11))))
                 for _ in range(max(1, int(round(lat["templates"]))))]
    dup_prob = lat["duplicate_prob"]

    tweets: list[TweetRecord] = []
    for i, moment in enumerate(times):
        if rng.random() < dup_prob:
            text = templates[int(rng.integers(0, len(templates)))]
        else:
            text = " ".join(_pick_words(rng, vocab, int(rng.integers(4, 15))))
        n_hash = int(rng.poisson(lat["hashtag_rate"]))
        n_urls = int(rng.poisson(lat["url_rate"]))
        n_ments = int(rng.poisson(lat["mention_rate"]))
        entities = TweetEntities(
            hashtags=tuple(hashtag_pool[int(k)] for k in
                           rng.integers(0, len(hashtag_pool), size=n_hash)),
            mentions=tuple(pool[int(k)] for k in rng.integers(0, pool_size, size=n_ments)),
            urls=tuple(f"https://t.example/{int(k):06d}"
                       for k in rng.integers(0, 999_999, size=n_urls)),
        )
        is_retweet = rng.random() < lat["retweet_frac"]
        is_reply = (not is_retweet) and rng.random() < lat["reply_frac"]
        replied = None
        if is_reply:
            self_reply = rng.random() < lat["self_reply_frac"]
            replied = user_id if self_reply else pool[int(rng.integers(0, pool_size))]
        tweets.append(TweetRecord(
            tweet_id=f"{user_id}-t{i:04d}",
            author=user,
            created_at=moment,
            text=text,
            lang="en",
            entities=entities,
            is_retweet=is_retweet,
            is_reply=is_reply,
            retweeted_user_id=pool[int(rng.integers(0, pool_size))] if is_retweet else None,
            replied_user_id=replied,
        ))

    n_mentions = int(round(lat["incoming_mentions"]))
    mentions: list[TweetRecord] = []
    for j in range(n_mentions):
        other = UserObject(
            user_id=f"m{user_id}-{j}",
            screen_name=_make_screen_name(rng, 6, 1),
            display_name="",
            created_at=probe_time - timedelta(days=float(rng.uniform(100, 3000))),
            followers_count=int(rng.integers(0, 500)),
            friends_count=int(rng.integers(0, 500)),
            statuses_count=int(rng.integers(1, 5000)),
        )
        mentions.append(TweetRecord(
            tweet_id=f"{user_id}-m{j:03d}",
            author=other,
            created_at=probe_time - timedelta(seconds=float(rng.uniform(600, 86400 * 5))),
            text=" ".join(_pick_words(rng, vocab, int(rng.integers(3, 9)))),
            lang="en",
            entities=TweetEntities(mentions=(user_id,)),
        ))

    return AccountPayload(
        user=user, timeline=tuple(tweets), mentions=tuple(mentions), probe_time=probe_time)


def synthesize_corpus(spec: CorpusSpec, seed: int) -> LabeledDataset:
    """Deterministically generate a labeled corpus of archetype accounts.

    Pure function of (spec, seed): the same inputs reproduce the corpus
    byte-for-byte through save_dataset.
    """
    counts = spec.counts()
    for archetype, count in counts.items():
        if count < 0:
            raise ValueError(f"synthesize_corpus: negative count for {archetype}")
    config = load_archetype_config(spec.config_name)
    probe_time = parse_utc(config["probe_time"], "archetype config probe_time")
    vocab = _content_vocab()
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))

    prefixes = {"human": "h", "spammer": "s", "fake_follower": "f",
                "self_declared": "d", "astroturf": "a", "cyborg": "y"}
    human_params = config["archetypes"]["human"]
    records: list[LabeledRecord] = []
    for archetype in ARCHETYPES:
        params = config["archetypes"][archetype]
        for i in range(counts[archetype]):
            user_id = f"{spec.name}:{prefixes[archetype]}{i:05d}"
            payload = _gen_account(
                rng, archetype, params, human_params, probe_time, user_id, vocab)
            if archetype == "human":
                records.append(LabeledRecord(payload=payload, label=HUMAN))
            elif archetype == "cyborg":
                # Even indices annotated human, odd ones bot (class rotates):
                # the same behavioral template lands on both sides of the label.
                if i % 2 == 0:
                    records.append(LabeledRecord(payload=payload, label=HUMAN))
                else:
                    records.append(LabeledRecord(
                        payload=payload, label=BOT,
                        bot_class=_CYBORG_CLASSES[(i // 2) % len(_CYBORG_CLASSES)]))
            else:
                records.append(LabeledRecord(payload=payload, label=BOT, bot_class=archetype))
    return LabeledDataset(name=spec.name, records=tuple(records))


# The corpus used by the shipped evaluation suite and the demo pipeline:
# four bot archetypes plus a cyborg population whose split labels exercise
# the ambiguous middle of the score range.
DEFAULT_FIXTURE_SPEC = CorpusSpec(
    humans=240, spammers=70, fake_followers=50, self_declared=40,
    astroturf=40, cyborgs=48, name="fixture")


# ---------------------------------------------------------------------------
# Cashtag case-study fixture
# ---------------------------------------------------------------------------

# Group shape: (tweets, unique accounts) before and after the English filter.
CASHTAG_STUDY_SHAPE: dict[str, dict[str, int]] = {
    "SHIB": {"tweets": 2000, "accounts": 1241, "en_tweets": 1819, "en_accounts": 1111},
    "FLOKI": {"tweets": 2000, "accounts": 937, "en_tweets": 1893, "en_accounts": 860},
    "AAPL": {"tweets": 2000, "accounts": 1107, "en_tweets": 1864, "en_accounts": 1006},
}

# Score mixture per group: (weight, low, high) triples over the unit interval.
_STUDY_SCORE_MIX: dict[str, list[tuple[float, float, float]]] = {
    "SHIB": [(0.45, 0.02, 0.25), (0.45, 0.52, 0.68), (0.10, 0.80, 0.97)],
    "FLOKI": [(0.48, 0.02, 0.25), (0.42, 0.52, 0.68), (0.10, 0.80, 0.97)],
    "AAPL": [(0.62, 0.02, 0.25), (0.10, 0.45, 0.60), (0.28, 0.88, 0.99)],
}


def _spread_counts(rng: np.random.Generator, total: int, bins: int) -> list[int]:
    """Split ``total`` items over ``bins`` accounts, each receiving at least one."""
    if bins == 0:
        return []
    extra = total - bins
    assignment = rng.integers(0, bins, size=extra)
    out = [1] * bins
    for k in assignment:
        out[int(k)] += 1
    return out


def synthesize_cashtag_study(
    seed: int = 7,
    shape: Mapping[str, Mapping[str, int]] | None = None,
) -> tuple[dict[str, list[TweetRecord]], dict[str, float]]:
    """Build per-cashtag tweet groups with fixed raw/filtered count structure.

    Returns (groups, scores): tweet lists keyed by cashtag and a synthetic
    per-account raw bot score map for downstream distribution analysis.
    """
    shape = shape or CASHTAG_STUDY_SHAPE
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), 0xCA5])))
    probe = datetime(2022, 1, 10, tzinfo=timezone.utc)
    groups: dict[str, list[TweetRecord]] = {}
    scores: dict[str, float] = {}

    for g_idx, (symbol, counts) in enumerate(shape.items()):
        n_en_acc = counts["en_accounts"]
        n_other_acc = counts["accounts"] - n_en_acc
        n_en_tweets = counts["en_tweets"]
        n_other_tweets = counts["tweets"] - counts["en_tweets"]
        if n_other_acc < 0 or n_other_tweets < 0:
            raise ValueError(f"cashtag study shape for {symbol}: filtered exceeds raw")

        per_account = (
            [("en", c) for c in _spread_counts(rng, n_en_tweets, n_en_acc)]
            + [("ja", c) for c in _spread_counts(rng, n_other_tweets, n_other_acc)]
        )
        mix = _STUDY_SCORE_MIX.get(symbol, [(1.0, 0.05, 0.95)])
        weights = np.array([w for w, _, _ in mix])
        weights = weights / weights.sum()

        tweets: list[TweetRecord] = []
        for a_idx, (lang, n_tweets) in enumerate(per_account):
            uid = f"c{g_idx}{a_idx:05d}"
            component = int(rng.choice(len(mix), p=weights))
            lo, hi = mix[component][1], mix[component][2]
            scores[uid] = float(rng.uniform(lo, hi))
            author = UserObject(
                user_id=uid,
                screen_name=_make_screen_name(rng, 7, 2),
                display_name="",
                created_at=probe - timedelta(days=float(rng.uniform(30, 2000))),
                followers_count=int(rng.integers(0, 2000)),
                friends_count=int(rng.integers(0, 2000)),
                statuses_count=int(rng.integers(int(n_tweets), 50000)),
                declared_language=lang,
            )
            for t_idx in range(n_tweets):
                tweets.append(TweetRecord(
                    tweet_id=f"{uid}-q{t_idx:03d}",
                    author=author,
                    created_at=probe - timedelta(seconds=float(rng.uniform(60, 86400 * 7))),
                    text=f"watching ${symbol} today",
                    lang=lang,
                    entities=TweetEntities(cashtags=(symbol,)),
                ))
        order = rng.permutation(len(tweets))
        groups[symbol] = [tweets[int(i)] for i in order]
    return groups, scores
