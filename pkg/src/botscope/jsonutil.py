"""Canonical JSON and RFC 3339 UTC timestamp helpers shared across the package."""

from __future__ import annotations

import hashlib
import json
from datetime import datetime, timezone


def dumps_canonical(obj) -> str:
    """Serialize to a deterministic JSON string (sorted keys, compact separators)."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def content_version(obj) -> str:
    """Short content hash used as an artifact version string."""
    return hashlib.sha256(dumps_canonical(obj).encode("utf-8")).hexdigest()[:12]


def parse_utc(value: str, where: str = "timestamp") -> datetime:
    """Parse an RFC 3339 timestamp; accepts both 'Z' and '+00:00' suffixes."""
    if not isinstance(value, str) or not value.strip():
        raise ValueError(f"{where}: expected an RFC 3339 string, got {value!r}")
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    try:
        parsed = datetime.fromisoformat(text)
    except ValueError as exc:
        raise ValueError(f"{where}: malformed timestamp {value!r} ({exc})") from None
    if parsed.tzinfo is None:
        raise ValueError(f"{where}: timestamp {value!r} lacks a UTC offset")
    return parsed.astimezone(timezone.utc)


def format_utc(moment: datetime) -> str:
    """Format a timezone-aware datetime as RFC 3339 UTC with a 'Z' suffix."""
    if moment.tzinfo is None:
        raise ValueError("refusing to format a naive datetime as UTC")
    moment = moment.astimezone(timezone.utc)
    if moment.microsecond:
        return moment.strftime("%Y-%m-%dT%H:%M:%S.%fZ")
    return moment.strftime("%Y-%m-%dT%H:%M:%SZ")
