"""Case-study statistics: sample building, language profiling, rank and
proportion tests, threshold sweeps/validation, and score time series.

The analysis unit is the tweet (accounts weighted by how often they tweeted
the query), with an account-level mode behind a flag. Dichotomization is the
strict inequality score > threshold throughout; boundary atoms can flip
results, so the convention is fixed here once.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from ._stats import midranks, normal_sf
from .corpus import TweetRecord
from .jsonutil import format_utc, parse_utc

EXACT_MWU_LIMIT = 12  # exact two-sided p by enumeration up to this pooled size, tie-free

STAR_LEVELS = ((0.001, "***"), (0.01, "**"), (0.05, "*"))


def stars_for_p(p: float) -> str:
    """Figure-caption significance convention: ***<=0.001, **<=0.01, *<=0.05, else NS."""
    for cutoff, marker in STAR_LEVELS:
        if p <= cutoff:
            return marker
    return "NS"


# ---------------------------------------------------------------------------
# Samples
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AnalyticalSample:
    """Deduplicated, optionally language-filtered tweet group with scores."""

    group_name: str
    tweets: tuple[tuple[str, str, float], ...]  # (tweet_id, user_id, raw score)
    accounts: dict[str, float]                  # user_id -> raw score
    language_filter: str | None
    raw_tweet_count: int
    raw_account_count: int

    def __post_init__(self):
        if set(self.accounts) != {uid for _, uid, _ in self.tweets}:
            raise ValueError("sample: accounts must equal the distinct tweet authors")
        for _, uid, s in self.tweets:
            if self.accounts[uid] != s:
                raise ValueError("sample: tweet score differs from its account score")

    @property
    def n_tweets(self) -> int:
        return len(self.tweets)

    @property
    def n_accounts(self) -> int:
        return len(self.accounts)

    def tweet_scores(self) -> list[float]:
        return [s for _, _, s in self.tweets]

    def account_scores(self) -> list[float]:
        return [self.accounts[uid] for uid in sorted(self.accounts)]


def _score_value(entry) -> float:
    # Accepts either a bare raw score or a ScoreReport-like object.
    raw = getattr(entry, "raw_overall", entry)
    return float(raw)


def _majority_lang(tweets: Sequence[TweetRecord]) -> str:
    counts: dict[str, int] = {}
    for t in tweets:
        if t.lang:
            counts[t.lang] = counts.get(t.lang, 0) + 1
    if not counts:
        return tweets[0].author.declared_language or "und"
    top = max(counts.values())
    winners = sorted(lang for lang, c in counts.items() if c == top)
    if len(winners) == 1:
        return winners[0]
    declared = tweets[0].author.declared_language
    if declared in winners:
        return declared
    return "und"


def build_sample(group_name: str,
                 tweets: Sequence[TweetRecord],
                 scores: Mapping[str, object],
                 language: str | None = None) -> AnalyticalSample:
    """Assemble the analytical sample for one query group.

    Every tweet author must have a score entry. With a language filter,
    accounts whose majority tweet language differs are dropped along with all
    their tweets.
    """
    by_account: dict[str, list[TweetRecord]] = {}
    for t in tweets:
        uid = t.author.user_id
        if uid not in scores:
            raise ValueError(f"build_sample: no score for user_id {uid}")
        by_account.setdefault(uid, []).append(t)

    raw_tweets = len(tweets)
    raw_accounts = len(by_account)
    kept: set[str] = set()
    for uid, their in by_account.items():
        if language is None or _majority_lang(their) == language:
            kept.add(uid)

    accounts = {uid: _score_value(scores[uid]) for uid in kept}
    rows = tuple(
        (t.tweet_id, t.author.user_id, accounts[t.author.user_id])
        for t in tweets if t.author.user_id in kept)
    return AnalyticalSample(
        group_name=group_name, tweets=rows, accounts=accounts,
        language_filter=language,
        raw_tweet_count=raw_tweets, raw_account_count=raw_accounts)


def language_profile(tweets: Sequence[TweetRecord]) -> dict[str, float]:
    """Fraction of accounts per majority tweet language; fractions sum to 1."""
    if not tweets:
        raise ValueError("language_profile: no tweets given")
    by_account: dict[str, list[TweetRecord]] = {}
    for t in tweets:
        by_account.setdefault(t.author.user_id, []).append(t)
    counts: dict[str, int] = {}
    for their in by_account.values():
        lang = _majority_lang(their)
        counts[lang] = counts.get(lang, 0) + 1
    total = len(by_account)
    return {lang: counts[lang] / total for lang in sorted(counts)}


# ---------------------------------------------------------------------------
# Statistical tests
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TestResult:
    statistic_name: str  # "U" or "z"
    statistic: float
    p_value: float
    method: str  # "exact" or "normal_approx"
    n1: int
    n2: int
    k1: int | None = None
    k2: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.p_value <= 1.0:
            raise ValueError("test result: p-value must lie in [0, 1]")


def _u_statistic(a: Sequence[float], b: Sequence[float]) -> float:
    """U of the first sample via midranks (ties counted one half)."""
    n1, n2 = len(a), len(b)
    ranks = midranks(list(a) + list(b))
    r1 = float(ranks[:n1].sum())
    return r1 - n1 * (n1 + 1) / 2.0


def _exact_u_tail_counts(n1: int, n2: int) -> list[int]:
    """Null distribution of U for tie-free samples: count[u] over all C(n,n1) splits.

    Dynamic program over rank subsets; u ranges 0..n1*n2.
    """
    max_u = n1 * n2
    counts = [0] * (max_u + 1)
    # ways[k][s]: number of k-subsets of ranks {1..r} with rank sum s
    ways = [[0] * (n1 * (n1 + 2 * n2 + 1) // 2 + 1) for _ in range(n1 + 1)]
    ways[0][0] = 1
    for r in range(1, n1 + n2 + 1):
        for k in range(min(r, n1), 0, -1):
            row = ways[k]
            prev = ways[k - 1]
            for s in range(len(row) - 1, r - 1, -1):
                if prev[s - r]:
                    row[s] += prev[s - r]
    base = n1 * (n1 + 1) // 2
    for s, c in enumerate(ways[n1]):
        if c and 0 <= s - base <= max_u:
            counts[s - base] = c
    return counts


def mann_whitney_u(a: Sequence[float], b: Sequence[float]) -> TestResult:
    """Two-sided Mann-Whitney U test.

    Exact enumeration p when the pooled size is at most EXACT_MWU_LIMIT and no
    ties are present; otherwise the normal approximation with tie and
    continuity corrections. The reported statistic is U of the first sample.
    """
    if not a or not b:
        raise ValueError("mann_whitney_u: both samples must be non-empty")
    n1, n2 = len(a), len(b)
    u = _u_statistic(a, b)
    pooled = list(a) + list(b)
    tie_free = len(set(pooled)) == len(pooled)

    if tie_free and n1 + n2 <= EXACT_MWU_LIMIT:
        counts = _exact_u_tail_counts(n1, n2)
        total = sum(counts)
        u_int = int(round(u))
        lo = min(u_int, n1 * n2 - u_int)
        hi = n1 * n2 - lo
        tail = sum(c for v, c in enumerate(counts) if v <= lo or v >= hi)
        p = min(1.0, tail / total)
        return TestResult("U", u, p, "exact", n1, n2)

    n = n1 + n2
    mu = n1 * n2 / 2.0
    _, tie_counts = np.unique(np.asarray(pooled, dtype=float), return_counts=True)
    tie_term = float(((tie_counts ** 3) - tie_counts).sum())
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if var <= 0.0:
        return TestResult("U", u, 1.0, "normal_approx", n1, n2)
    z = max(0.0, abs(u - mu) - 0.5) / math.sqrt(var)
    p = min(1.0, 2.0 * normal_sf(z))
    return TestResult("U", u, p, "normal_approx", n1, n2)


def two_proportion_z(k1: int, n1: int, k2: int, n2: int) -> TestResult:
    """Two-sided pooled-variance z-test for two binomial proportions."""
    for k, n, name in ((k1, n1, "first"), (k2, n2, "second")):
        if n < 1:
            raise ValueError(f"two_proportion_z: {name} sample size must be >= 1")
        if k < 0 or k > n:
            raise ValueError(f"two_proportion_z: {name} count must satisfy 0 <= k <= n")
    pooled = (k1 + k2) / (n1 + n2)
    if pooled in (0.0, 1.0):
        return TestResult("z", 0.0, 1.0, "normal_approx", n1, n2, k1, k2)
    se = math.sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2))
    z = (k1 / n1 - k2 / n2) / se
    p = min(1.0, 2.0 * normal_sf(abs(z)))
    return TestResult("z", z, p, "normal_approx", n1, n2, k1, k2)


# ---------------------------------------------------------------------------
# Threshold analyses
# ---------------------------------------------------------------------------

DEFAULT_THRESHOLDS = (0.5, 0.7)


@dataclass(frozen=True)
class ThresholdReport:
    threshold: float
    proportions: dict[str, tuple[int, int]]  # group -> (bot tweets, total tweets)
    pairwise: dict[tuple[str, str], TestResult]
    stars: dict[tuple[str, str], str]

    def fraction(self, group: str) -> float:
        k, n = self.proportions[group]
        return k / n if n else 0.0


def threshold_sweep(samples: Sequence[AnalyticalSample],
                    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
                    unit: str = "tweets") -> list[ThresholdReport]:
    """Per-threshold likely-bot proportions plus all pairwise z-tests.

    ``unit`` selects tweets (default, repeat tweeters weigh more) or accounts.
    """
    if unit not in ("tweets", "accounts"):
        raise ValueError("threshold_sweep: unit must be 'tweets' or 'accounts'")
    for t in thresholds:
        if not 0.0 <= t <= 1.0:
            raise ValueError(f"threshold_sweep: threshold {t} outside [0, 1]")
    groups = [
        (s.group_name, s.tweet_scores() if unit == "tweets" else s.account_scores())
        for s in samples]
    reports: list[ThresholdReport] = []
    for t in thresholds:
        proportions = {
            name: (sum(1 for v in values if v > t), len(values))
            for name, values in groups}
        pairwise: dict[tuple[str, str], TestResult] = {}
        stars: dict[tuple[str, str], str] = {}
        for i in range(len(groups)):
            for j in range(i + 1, len(groups)):
                g1, g2 = groups[i][0], groups[j][0]
                k1, m1 = proportions[g1]
                k2, m2 = proportions[g2]
                result = two_proportion_z(k1, m1, k2, m2)
                pairwise[(g1, g2)] = result
                stars[(g1, g2)] = stars_for_p(result.p_value)
        reports.append(ThresholdReport(
            threshold=float(t), proportions=proportions,
            pairwise=pairwise, stars=stars))
    return reports


@dataclass(frozen=True)
class ThresholdMetrics:
    threshold: float
    accuracy: float
    precision: float
    recall: float
    f1: float
    degenerate: bool  # no predicted positives: precision and f1 forced to 0


def threshold_validation(labeled: Sequence[tuple[float, str]],
                         thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
                         ) -> list[ThresholdMetrics]:
    """Accuracy/precision/recall/F1 per threshold with bot as the positive class."""
    from .corpus import BOT, HUMAN

    labels = {label for _, label in labeled}
    if labels != {BOT, HUMAN}:
        raise ValueError("threshold_validation: need scores for both labels")
    out: list[ThresholdMetrics] = []
    for t in thresholds:
        tp = sum(1 for s, y in labeled if s > t and y == BOT)
        fp = sum(1 for s, y in labeled if s > t and y == HUMAN)
        fn = sum(1 for s, y in labeled if s <= t and y == BOT)
        tn = sum(1 for s, y in labeled if s <= t and y == HUMAN)
        degenerate = (tp + fp) == 0
        precision = 0.0 if degenerate else tp / (tp + fp)
        recall = tp / (tp + fn)
        f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
        out.append(ThresholdMetrics(
            threshold=float(t),
            accuracy=(tp + tn) / len(labeled),
            precision=precision, recall=recall, f1=f1,
            degenerate=degenerate))
    return out


# ---------------------------------------------------------------------------
# Score time series
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScoreSeries:
    user_id: str
    points: tuple[tuple[datetime, float, str], ...]  # (probe_time, score, model_version)

    def __post_init__(self):
        for (t1, s1, _), (t2, s2, _) in zip(self.points, self.points[1:]):
            if t2 <= t1:
                raise ValueError(f"series {self.user_id}: probe times must strictly increase")
        for _, s, _ in self.points:
            if not 0.0 <= s <= 1.0:
                raise ValueError(f"series {self.user_id}: scores must lie in [0, 1]")


class SeriesStore:
    """JSON-lines backed probe log; single writer, any number of readers."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._series: dict[str, list[tuple[datetime, float, str]]] = {}
        if self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    row = json.loads(line)
                    self._series.setdefault(row["user_id"], []).append(
                        (parse_utc(row["probe_time"]), row["score"],
                         row.get("model_version", "")))

    def get(self, user_id: str) -> ScoreSeries:
        return ScoreSeries(user_id=user_id, points=tuple(self._series.get(user_id, ())))


def record_probe(store: SeriesStore, user_id: str, probe_time: datetime,
                 raw_score: float, model_version: str = "") -> ScoreSeries:
    """Append one probe point; identical re-recordings are idempotent."""
    points = store._series.setdefault(user_id, [])
    entry = (probe_time, raw_score, model_version)
    if points:
        last = points[-1]
        if (last[0], last[1], last[2]) == entry:
            return store.get(user_id)
        if probe_time <= last[0]:
            raise ValueError(
                f"record_probe: probe_time must be strictly after the series' "
                f"last point for {user_id}")
    points.append(entry)
    with open(store.path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps({
            "user_id": user_id,
            "probe_time": format_utc(probe_time),
            "score": raw_score,
            "model_version": model_version,
        }, sort_keys=True))
        fh.write("\n")
    return store.get(user_id)


# ---------------------------------------------------------------------------
# Plot-data emission (no rendering here; external tools draw the figures)
# ---------------------------------------------------------------------------

def histogram_data(values: Sequence[float], bins: int = 20) -> dict:
    hist, edges = np.histogram(np.asarray(values, dtype=float), bins=bins, range=(0.0, 1.0))
    return {"bin_edges": [float(e) for e in edges], "counts": [int(c) for c in hist]}


def box_summary(values: Sequence[float]) -> dict:
    arr = np.sort(np.asarray(values, dtype=float))
    if arr.size == 0:
        raise ValueError("box_summary: empty values")
    q1, med, q3 = (float(np.quantile(arr, q)) for q in (0.25, 0.5, 0.75))
    return {
        "min": float(arr[0]), "q1": q1, "median": med, "q3": q3,
        "max": float(arr[-1]), "mean": float(arr.mean()),
    }


def plot_payload(samples: Sequence[AnalyticalSample],
                 thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
                 bins: int = 20) -> dict:
    """Histogram bins, box five-number summaries with means, and star annotations."""
    reports = threshold_sweep(samples, thresholds)
    return {
        "groups": {
            s.group_name: {
                "histogram": histogram_data(s.tweet_scores(), bins=bins),
                "box": box_summary(s.tweet_scores()),
                "n_tweets": s.n_tweets,
                "n_accounts": s.n_accounts,
            }
            for s in samples
        },
        "thresholds": [
            {
                "threshold": r.threshold,
                "proportions": {
                    g: {"bot_tweets": k, "total": n, "fraction": (k / n if n else 0.0)}
                    for g, (k, n) in sorted(r.proportions.items())},
                "tests": [
                    {
                        "groups": list(pair),
                        "z": r.pairwise[pair].statistic,
                        "p": r.pairwise[pair].p_value,
                        "stars": r.stars[pair],
                    }
                    for pair in sorted(r.pairwise)
                ],
            }
            for r in reports
        ],
    }
