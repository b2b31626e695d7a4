"""Rate-limited HTTP scoring service.

Endpoints mirror the hosted-API surface: a per-account check returning raw,
display, and posterior scores, a bulk metadata-only check, and a health probe.
The only mutable state is the per-key quota counter, updated under a lock so
admission stays exact under concurrent clients; quota windows are fixed UTC
calendar days.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, replace
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Callable, Mapping

from fastapi import FastAPI, Header, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import ensemble as ensemble_mod
from . import lite as lite_mod
from .corpus import payload_from_dict, user_from_dict
from .jsonutil import format_utc, parse_utc

DEFAULT_CHECK_QUOTA = 43_200
DEFAULT_LITE_QUOTA = 8_600_000
DEFAULT_PAGE_SIZE = 1_000

Clock = Callable[[], datetime]


def _utc_now() -> datetime:
    return datetime.now(timezone.utc)


# ---------------------------------------------------------------------------
# Keys and quotas
# ---------------------------------------------------------------------------

@dataclass
class ApiKeyRecord:
    key: str
    quota_check_account: int = DEFAULT_CHECK_QUOTA
    quota_lite_users: int = DEFAULT_LITE_QUOTA
    window_start: datetime | None = None  # UTC day boundary of the current window
    used_check: int = 0
    used_lite: int = 0


class QuotaError(Exception):
    def __init__(self, message: str, reset_at: datetime):
        super().__init__(message)
        self.reset_at = reset_at


class QuotaStore:
    """Atomic check-and-increment admission over per-key daily windows."""

    def __init__(self, keys: Mapping[str, ApiKeyRecord], clock: Clock = _utc_now):
        self._records = dict(keys)
        self._clock = clock
        self._lock = threading.Lock()

    def known(self, key: str) -> bool:
        return key in self._records

    def _roll_window(self, record: ApiKeyRecord, now: datetime) -> None:
        day = now.astimezone(timezone.utc).replace(hour=0, minute=0, second=0, microsecond=0)
        if record.window_start != day:
            record.window_start = day
            record.used_check = 0
            record.used_lite = 0

    def admit(self, key: str, kind: str, amount: int = 1) -> None:
        """Grant ``amount`` units or raise QuotaError consuming nothing."""
        if amount < 0:
            raise ValueError("admit: amount must be >= 0")
        with self._lock:
            record = self._records[key]
            now = self._clock()
            self._roll_window(record, now)
            reset_at = record.window_start + timedelta(days=1)
            if kind == "check":
                if record.used_check + amount > record.quota_check_account:
                    raise QuotaError("daily check_account quota exhausted", reset_at)
                record.used_check += amount
            elif kind == "lite":
                if record.used_lite + amount > record.quota_lite_users:
                    raise QuotaError("daily bulk quota exhausted", reset_at)
                record.used_lite += amount
            else:
                raise ValueError(f"admit: unknown kind {kind!r}")

    def usage(self, key: str) -> tuple[int, int]:
        with self._lock:
            record = self._records[key]
            self._roll_window(record, self._clock())
            return record.used_check, record.used_lite


def load_keys(path: str | Path,
              default_check: int = DEFAULT_CHECK_QUOTA,
              default_lite: int = DEFAULT_LITE_QUOTA) -> dict[str, ApiKeyRecord]:
    """Flat key file: one key per line, optionally ``key,check_quota,lite_quota``."""
    keys: dict[str, ApiKeyRecord] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            record = ApiKeyRecord(
                key=parts[0],
                quota_check_account=int(parts[1]) if len(parts) > 1 else default_check,
                quota_lite_users=int(parts[2]) if len(parts) > 2 else default_lite)
            keys[record.key] = record
    return keys


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8750
    model_path: str = "model.json"
    calibration_path: str = "calibration.json"
    lite_path: str = "lite.json"
    keys_path: str = "keys.txt"
    prior: float = ensemble_mod.DEFAULT_PRIOR
    page_size: int = DEFAULT_PAGE_SIZE
    quota_check_account: int = DEFAULT_CHECK_QUOTA
    quota_lite_users: int = DEFAULT_LITE_QUOTA
    request_log: str | None = None


_ENV_OVERRIDES = {
    "BOTSCOPE_HOST": ("host", str),
    "BOTSCOPE_PORT": ("port", int),
    "BOTSCOPE_MODEL": ("model_path", str),
    "BOTSCOPE_CALIBRATION": ("calibration_path", str),
    "BOTSCOPE_LITE": ("lite_path", str),
    "BOTSCOPE_KEYS": ("keys_path", str),
    "BOTSCOPE_PRIOR": ("prior", float),
    "BOTSCOPE_PAGE_SIZE": ("page_size", int),
    "BOTSCOPE_REQUEST_LOG": ("request_log", str),
}


def load_config(path: str | Path | None = None,
                env: Mapping[str, str] | None = None) -> ServiceConfig:
    """Single JSON config file with environment-variable overrides.

    Relative artifact paths are resolved against the config file's directory.
    """
    env = os.environ if env is None else env
    values: dict = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            values.update(json.load(fh))
        base = Path(path).resolve().parent
        for name in ("model_path", "calibration_path", "lite_path", "keys_path",
                     "request_log"):
            if values.get(name) and not Path(values[name]).is_absolute():
                values[name] = str(base / values[name])
    config = ServiceConfig(**values)
    overrides = {}
    for var, (name, cast) in _ENV_OVERRIDES.items():
        if var in env:
            overrides[name] = cast(env[var])
    return replace(config, **overrides) if overrides else config


# ---------------------------------------------------------------------------
# The application
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ModelBundle:
    esc: ensemble_mod.EscModel
    calibration: dict[str, ensemble_mod.CalibrationTable]
    lite: lite_mod.LiteModel
    calibration_version: str = ""

    def __post_init__(self):
        for name in ("english", "universal"):
            if name not in self.calibration:
                raise ValueError(f"model bundle: missing {name!r} calibration table")


def load_bundle(config: ServiceConfig) -> ModelBundle:
    esc = ensemble_mod.load_esc(config.model_path)
    tables, version = ensemble_mod.load_calibration_bundle(config.calibration_path)
    for table in tables.values():
        if table.model_version and table.model_version != esc.version:
            raise ValueError(
                "model bundle: calibration was built for model "
                f"{table.model_version}, loaded model is {esc.version}")
    return ModelBundle(
        esc=esc, calibration=tables,
        lite=lite_mod.load_lite(config.lite_path),
        calibration_version=version)


class _RequestLog:
    def __init__(self, path: str | Path | None):
        self.path = Path(path) if path else None
        self._lock = threading.Lock()

    def write(self, entry: dict) -> None:
        if self.path is None:
            return
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry, sort_keys=True))
                fh.write("\n")


def _error(status: int, message: str, **extra) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message, **extra})


def create_app(bundle: ModelBundle | None,
               keys: Mapping[str, ApiKeyRecord],
               config: ServiceConfig = ServiceConfig(),
               clock: Clock = _utc_now) -> FastAPI:
    """Build the ASGI app; pass bundle=None to model the pre-load state."""
    app = FastAPI(title="botscope scoring service")
    # The browser UI may be served from any static origin.
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
        allow_headers=["*"])
    store = QuotaStore(keys, clock=clock)
    log = _RequestLog(config.request_log)
    app.state.bundle = bundle
    app.state.quota = store

    def _auth(api_key: str | None) -> JSONResponse | None:
        if not api_key or not store.known(api_key):
            return _error(401, "unknown or missing API key")
        return None

    @app.get("/health")
    def health():
        current: ModelBundle | None = app.state.bundle
        if current is None:
            return _error(503, "models not loaded")
        return {
            "status": "ok",
            "model_version": current.esc.version,
            "registry_version": current.esc.registry_version,
            "calibration_version": current.calibration_version,
            "lite_version": current.lite.version,
        }

    @app.post("/check_account")
    async def check_account(request: Request,
                            x_api_key: str | None = Header(default=None)):
        current: ModelBundle | None = app.state.bundle
        if current is None:
            return _error(503, "models not loaded")
        denied = _auth(x_api_key)
        if denied is not None:
            return denied
        try:
            body = await request.json()
        except json.JSONDecodeError:
            return _error(400, "payload: request body is not valid JSON")
        try:
            payload = payload_from_dict(body)
        except ValueError as exc:
            return _error(400, str(exc))
        try:
            store.admit(x_api_key, "check", 1)
        except QuotaError as exc:
            log.write({"endpoint": "check_account", "key": x_api_key, "status": 429,
                       "time": format_utc(clock())})
            return _error(429, str(exc), reset_at=format_utc(exc.reset_at))

        report = ensemble_mod.score_account(current.esc, payload)
        report = ensemble_mod.apply_calibration(
            report, current.calibration["english"], current.calibration["universal"])
        response = report_response(report, payload, clock())
        log.write({"endpoint": "check_account", "key": x_api_key, "status": 200,
                   "user_id": payload.user.user_id, "time": response["server_time"]})
        return response

    @app.post("/check_accounts_in_bulk")
    async def check_accounts_in_bulk(request: Request,
                                     x_api_key: str | None = Header(default=None)):
        current: ModelBundle | None = app.state.bundle
        if current is None:
            return _error(503, "models not loaded")
        denied = _auth(x_api_key)
        if denied is not None:
            return denied
        try:
            body = await request.json()
        except json.JSONDecodeError:
            return _error(400, "payload: request body is not valid JSON")
        if not isinstance(body, list):
            return _error(400, "payload: expected a JSON array of {user, probe_time}")
        if len(body) > config.page_size:
            return _error(400, f"payload: batch of {len(body)} exceeds page size "
                               f"{config.page_size}")
        try:
            store.admit(x_api_key, "lite", len(body))  # all-or-nothing admission
        except QuotaError as exc:
            log.write({"endpoint": "check_accounts_in_bulk", "key": x_api_key,
                       "status": 429, "time": format_utc(clock())})
            return _error(429, str(exc), reset_at=format_utc(exc.reset_at))

        results = []
        for i, entry in enumerate(body):
            try:
                if not isinstance(entry, Mapping):
                    raise ValueError(f"entry[{i}]: expected an object")
                user = user_from_dict(entry.get("user"), f"entry[{i}].user")
                probe = parse_utc(entry.get("probe_time", ""), f"entry[{i}].probe_time")
                score = lite_mod.score_lite(current.lite, user, probe)
                results.append({"user_id": user.user_id, "botscore": score})
            except ValueError as exc:
                uid = None
                if isinstance(entry, Mapping) and isinstance(entry.get("user"), Mapping):
                    uid = entry["user"].get("user_id")
                results.append({"user_id": uid, "error": str(exc)})
        log.write({"endpoint": "check_accounts_in_bulk", "key": x_api_key, "status": 200,
                   "entries": len(body), "time": format_utc(clock())})
        return results

    return app


def report_response(report: ensemble_mod.ScoreReport, payload, now: datetime) -> dict:
    """The frozen response JSON shape consumed by clients and the web UI."""
    body = ensemble_mod.report_to_dict(report)
    user = payload.user
    return {
        "user": {
            "user_id": user.user_id,
            "screen_name": user.screen_name,
            "probe_time": body["probe_time"],
            "timeline_tweets": len(payload.timeline),
            "mention_tweets": len(payload.mentions),
        },
        "raw_scores": body["raw_scores"],
        "display_scores": body["display_scores"],
        "cap": body["cap"],
        "low_data": body["low_data"],
        "model_version": body["model_version"],
        "server_time": format_utc(now),
    }


def serve(config: ServiceConfig) -> None:
    """Load artifacts and run uvicorn (blocking)."""
    import uvicorn

    bundle = load_bundle(config)
    keys = load_keys(config.keys_path, config.quota_check_account, config.quota_lite_users)
    app = create_app(bundle, keys, config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
