"""Pluggable translation backends.

Three families behind one ``translate(request) -> str`` contract:

* ``HttpBackend`` -- a generic HTTP client (configurable URL/body
  template and response field path, so any provider or local
  translation server can be plugged in) with retry, exponential
  backoff, and a requests-per-second throttle;
* ``RecordingBackend`` / ``ReplayBackend`` -- transcript capture and
  offline replay keyed by a content hash of each request, for
  bit-exact reproducible augmentation runs;
* mock backends (identity, word-reversing, sentinel-dropping) used by
  tests and offline pipeline runs.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
import urllib.parse
from dataclasses import dataclass, field
from pathlib import Path

import requests


class BackendError(Exception):
    """Base class for translation-backend failures."""


class TransportError(BackendError):
    """HTTP transport failed (after retries, or a non-retriable status)."""

    def __init__(self, message: str, attempts: int = 1):
        super().__init__(message)
        self.attempts = attempts


class ReplayMissError(BackendError):
    """A replayed request was never recorded."""

    def __init__(self, message: str, request_hash: str = ""):
        super().__init__(message)
        self.request_hash = request_hash


@dataclass(frozen=True)
class TranslationRequest:
    text: str
    source_lang: str
    target_lang: str

    def __post_init__(self):
        if not self.text:
            raise ValueError("translation request text is empty")
        if not self.source_lang or not self.target_lang:
            raise ValueError("language codes must be non-empty")
        if self.source_lang == self.target_lang:
            raise ValueError("source and target languages must differ")


def request_hash(req: TranslationRequest) -> str:
    """Stable content hash of (text, source, target): sha256 over the
    JSON array [text, source, target]."""
    payload = json.dumps([req.text, req.source_lang, req.target_lang],
                         ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class TranslationBackend:
    """Interface: subclasses provide ``name`` and ``translate``."""

    name = "abstract"

    def translate(self, req: TranslationRequest) -> str:
        raise NotImplementedError


class RateLimiter:
    """Serializes callers so request starts are at least 1/rate apart.

    Clock and sleep are injectable for testing.
    """

    def __init__(self, rate_per_second: float | None,
                 clock=time.monotonic, sleep=time.sleep):
        self.min_interval = 1.0 / rate_per_second if rate_per_second else 0.0
        self._clock = clock
        self._sleep = sleep
        self._last: float | None = None
        self._lock = threading.Lock()

    def wait(self) -> None:
        if not self.min_interval:
            return
        with self._lock:
            now = self._clock()
            if self._last is not None:
                remaining = self._last + self.min_interval - now
                if remaining > 0:
                    self._sleep(remaining)
                    now = self._clock()
            self._last = now


@dataclass
class EndpointConfig:
    """Neutral HTTP translation endpoint description.

    ``url_template`` and ``body_fields`` values may contain the
    placeholders {text}, {source}, {target}; text is URL-encoded when
    substituted into the URL.  ``response_field`` is a dotted path into
    the JSON response (list indices allowed), e.g.
    ``data.translations.0.text``.
    """

    url_template: str
    method: str = "GET"
    headers: dict = field(default_factory=dict)
    body_fields: dict | None = None
    response_field: str = "translation"
    timeout: float = 10.0
    max_retries: int = 3
    requests_per_second: float | None = None
    backoff_base: float = 0.5


def _extract_field(payload, path: str):
    value = payload
    for part in path.split("."):
        if isinstance(value, list):
            value = value[int(part)]
        else:
            value = value[part]
    return value


class HttpBackend(TranslationBackend):
    """Live HTTP client: retries transient failures, throttles, and
    extracts the translation from the JSON response."""

    name = "http"

    RETRIABLE_STATUSES = frozenset({429, 500, 502, 503, 504})

    def __init__(self, config: EndpointConfig, session=None, sleep=time.sleep):
        self.config = config
        self.session = session or requests.Session()
        self._sleep = sleep
        self.limiter = RateLimiter(config.requests_per_second)
        self.stats = {"requests": 0, "retries": 0}

    def _fill(self, template: str, req: TranslationRequest, quote: bool) -> str:
        text = urllib.parse.quote(req.text) if quote else req.text
        return (template.replace("{text}", text)
                        .replace("{source}", req.source_lang)
                        .replace("{target}", req.target_lang))

    def translate(self, req: TranslationRequest) -> str:
        cfg = self.config
        url = self._fill(cfg.url_template, req, quote=True)
        body = None
        if cfg.body_fields is not None:
            body = {k: self._fill(v, req, quote=False)
                    for k, v in cfg.body_fields.items()}

        last_error = None
        attempts = 0
        for attempt in range(cfg.max_retries + 1):
            attempts = attempt + 1
            if attempt > 0:
                self._sleep(cfg.backoff_base * 2 ** (attempt - 1))
                self.stats["retries"] += 1
            self.limiter.wait()
            self.stats["requests"] += 1
            try:
                resp = self.session.request(cfg.method, url, json=body,
                                            headers=cfg.headers or None,
                                            timeout=cfg.timeout)
            except requests.RequestException as exc:
                last_error = f"transport failure: {exc}"
                continue
            if resp.status_code == 200:
                try:
                    translation = _extract_field(resp.json(), cfg.response_field)
                except (KeyError, IndexError, TypeError, ValueError) as exc:
                    raise TransportError(
                        f"response field {cfg.response_field!r} missing: {exc}",
                        attempts=attempts) from exc
                if not isinstance(translation, str) or not translation:
                    raise TransportError("endpoint returned an empty translation",
                                         attempts=attempts)
                return translation
            if resp.status_code in self.RETRIABLE_STATUSES:
                last_error = f"HTTP {resp.status_code}"
                continue
            # Any other 4xx is a caller error; retrying cannot help.
            raise TransportError(
                f"HTTP {resp.status_code} (non-retriable): {resp.text[:200]}",
                attempts=attempts)
        raise TransportError(f"exhausted retries ({last_error})", attempts=attempts)


@dataclass(frozen=True)
class TranscriptRecord:
    hash: str
    source_lang: str
    target_lang: str
    text: str
    translation: str


class Transcript:
    """Ordered (request, response) records keyed by request hash."""

    def __init__(self, records: list[TranscriptRecord] | None = None):
        self.records: list[TranscriptRecord] = []
        self.by_hash: dict[str, str] = {}
        for rec in records or []:
            self.append(rec)

    def __len__(self) -> int:
        return len(self.records)

    def append(self, rec: TranscriptRecord) -> None:
        self.records.append(rec)
        self.by_hash[rec.hash] = rec.translation

    def lookup(self, key: str) -> str | None:
        return self.by_hash.get(key)

    @classmethod
    def load(cls, path: str | Path) -> "Transcript":
        transcript = cls()
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                rec = json.loads(line)
                transcript.append(TranscriptRecord(
                    hash=rec["hash"], source_lang=rec["source_lang"],
                    target_lang=rec["target_lang"], text=rec["text"],
                    translation=rec["translation"]))
        return transcript

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for rec in self.records:
                fh.write(json.dumps(rec.__dict__, ensure_ascii=False) + "\n")


class RecordingBackend(TranslationBackend):
    """Pass-through wrapper that appends every exchange to a transcript.

    When given a path, each record is written and flushed immediately so
    the transcript file stays valid JSONL even if the run is interrupted.
    """

    name = "record"

    def __init__(self, inner: TranslationBackend, path: str | Path | None = None):
        self.inner = inner
        self.transcript = Transcript()
        self._fh = open(path, "w", encoding="utf-8") if path is not None else None
        self._lock = threading.Lock()

    def translate(self, req: TranslationRequest) -> str:
        translation = self.inner.translate(req)
        rec = TranscriptRecord(hash=request_hash(req),
                               source_lang=req.source_lang,
                               target_lang=req.target_lang,
                               text=req.text, translation=translation)
        with self._lock:
            self.transcript.append(rec)
            if self._fh is not None:
                self._fh.write(json.dumps(rec.__dict__, ensure_ascii=False) + "\n")
                self._fh.flush()
        return translation

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class ReplayBackend(TranslationBackend):
    """Serves recorded responses only; never touches the network."""

    name = "replay"

    def __init__(self, transcript: Transcript | str | Path):
        if not isinstance(transcript, Transcript):
            transcript = Transcript.load(transcript)
        self.transcript = transcript
        self.lookups = 0

    def translate(self, req: TranslationRequest) -> str:
        key = request_hash(req)
        translation = self.transcript.lookup(key)
        if translation is None:
            raise ReplayMissError(
                f"no recorded response for request {key} "
                f"({req.source_lang}->{req.target_lang}, text {req.text[:60]!r})",
                request_hash=key)
        self.lookups += 1
        return translation


class IdentityBackend(TranslationBackend):
    """Returns its input unchanged (lossless round trips)."""

    name = "identity"

    def translate(self, req: TranslationRequest) -> str:
        return req.text


class WordReversingBackend(TranslationBackend):
    """Scrambling mock: reverses the order of all tokens that do not
    carry the sentinel marker, leaving sentinel tokens in place."""

    name = "word-reversing"

    def __init__(self, sentinel_marker: str = "ENTX"):
        self.sentinel_marker = sentinel_marker

    def translate(self, req: TranslationRequest) -> str:
        tokens = req.text.split()
        movable = [t for t in tokens if self.sentinel_marker not in t]
        movable.reverse()
        out, i = [], 0
        for t in tokens:
            if self.sentinel_marker in t:
                out.append(t)
            else:
                out.append(movable[i])
                i += 1
        return " ".join(out)


class SentinelDroppingBackend(TranslationBackend):
    """Failure-mode mock: deletes sentinel tokens, as a translator that
    destroys placeholders would."""

    name = "sentinel-dropping"

    def __init__(self, sentinel_marker: str = "ENTX"):
        self.sentinel_marker = sentinel_marker

    def translate(self, req: TranslationRequest) -> str:
        kept = [t for t in req.text.split() if self.sentinel_marker not in t]
        return " ".join(kept) or "-"
