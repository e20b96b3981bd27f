"""Generation client: one HTTP transport, deterministic mocks, a persistent
response cache, request rate limiting, and cost accounting.

A transport is any callable (request, context) -> TransportReply. The context
is the prompt bundle that produced the request; mocks read its choice map to
fabricate answers, the HTTP transport ignores it.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import requests as _requests

from .errors import AuthFailure, ConfigError, ContextTooLong, DataError, EndpointUnreachable, MalformedRecord
from .prompting import NONE_LABEL, PromptBundle, estimate_tokens

CACHE_VERSION = 1

ENV_ENDPOINT = "LLM_ENDPOINT"
ENV_API_KEY = "LLM_API_KEY"
ENV_MODEL = "LLM_MODEL"


@dataclass(frozen=True)
class GenRequest:
    prompt: str
    max_output_tokens: int
    model_id: str
    temperature: float = 0.0
    stop: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ConfigError(f"temperature must be >= 0, got {self.temperature}")
        if self.max_output_tokens < 1:
            raise ConfigError(f"max_output_tokens must be >= 1, got {self.max_output_tokens}")


@dataclass(frozen=True)
class GenResult:
    text: str
    prompt_tokens: int
    completion_tokens: int
    latency_ms: int
    cached: bool
    tokens_estimated: bool = False


@dataclass
class TransportReply:
    text: str
    prompt_tokens: int | None = None
    completion_tokens: int | None = None


Transport = Callable[[GenRequest, Optional[PromptBundle]], TransportReply]


@dataclass
class CostLedger:
    total_calls: int = 0
    cached_hits: int = 0
    total_prompt_tokens: int = 0
    total_completion_tokens: int = 0
    wall_ms: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def record(self, result: GenResult) -> None:
        with self._lock:
            self.total_calls += 1
            if result.cached:
                self.cached_hits += 1
            else:
                self.total_prompt_tokens += result.prompt_tokens
                self.total_completion_tokens += result.completion_tokens
                self.wall_ms += result.latency_ms

    def to_json(self) -> dict:
        return {
            "total_calls": self.total_calls,
            "cached_hits": self.cached_hits,
            "total_prompt_tokens": self.total_prompt_tokens,
            "total_completion_tokens": self.total_completion_tokens,
            "wall_ms": self.wall_ms,
        }


def cache_key(req: GenRequest) -> str:
    payload = json.dumps(
        {
            "model_id": req.model_id,
            "prompt": req.prompt,
            "temperature": req.temperature,
            "max_output_tokens": req.max_output_tokens,
            "stop": list(req.stop) if req.stop else None,
        },
        sort_keys=True,
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class ResponseCache:
    """Append-only JSONL store keyed by request hash.

    Every record carries a version tag; a torn final line (interrupted write)
    is ignored on load, anything else malformed is an error.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._entries: dict[str, dict] = {}
        self._write_lock = threading.Lock()
        if self.path.exists():
            self._load()

    def _load(self) -> None:
        with open(self.path, encoding="utf-8") as fh:
            lines = fh.readlines()
        for i, line in enumerate(lines):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError:
                if i == len(lines) - 1:
                    break
                raise MalformedRecord(i + 1, "undecodable cache line")
            if rec.get("v") != CACHE_VERSION:
                raise DataError(f"cache {self.path} line {i + 1}: unsupported version {rec.get('v')!r}")
            self._entries[rec["key"]] = rec

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, key: str) -> dict | None:
        return self._entries.get(key)

    def put(self, key: str, req: GenRequest, reply_text: str, prompt_tokens: int,
            completion_tokens: int, tokens_estimated: bool) -> None:
        rec = {
            "v": CACHE_VERSION,
            "key": key,
            "model_id": req.model_id,
            "prompt": req.prompt,
            "temperature": req.temperature,
            "max_output_tokens": req.max_output_tokens,
            "stop": list(req.stop) if req.stop else None,
            "text": reply_text,
            "prompt_tokens": prompt_tokens,
            "completion_tokens": completion_tokens,
            "tokens_estimated": tokens_estimated,
        }
        line = json.dumps(rec, ensure_ascii=False)
        with self._write_lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
            self._entries[key] = rec


class TokenBucket:
    """Simple requests-per-minute limiter; acquire() blocks until a slot frees."""

    def __init__(self, per_minute: int):
        if per_minute < 1:
            raise ConfigError(f"rate must be >= 1/min, got {per_minute}")
        self.capacity = float(per_minute)
        self.rate_per_s = per_minute / 60.0
        self.tokens = float(per_minute)
        self.updated = time.monotonic()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = time.monotonic()
                self.tokens = min(self.capacity, self.tokens + (now - self.updated) * self.rate_per_s)
                self.updated = now
                if self.tokens >= 1.0:
                    self.tokens -= 1.0
                    return
                wait = (1.0 - self.tokens) / self.rate_per_s
            time.sleep(wait)


class LLMClient:
    """Caching, rate-accounted front end over a transport.

    Identical requests are answered from the cache byte for byte; concurrent
    identical requests are collapsed to one transport call (single flight).
    """

    def __init__(self, transport: Transport, cache_path: str | Path | None = None,
                 ledger: CostLedger | None = None, max_parallel: int = 4):
        if max_parallel < 1:
            raise ConfigError(f"max_parallel must be >= 1, got {max_parallel}")
        self.transport = transport
        self.cache = ResponseCache(cache_path) if cache_path is not None else None
        self.ledger = ledger if ledger is not None else CostLedger()
        self._sem = threading.Semaphore(max_parallel)
        self._key_locks: dict[str, threading.Lock] = {}
        self._key_locks_guard = threading.Lock()

    def _lock_for(self, key: str) -> threading.Lock:
        with self._key_locks_guard:
            lock = self._key_locks.get(key)
            if lock is None:
                lock = threading.Lock()
                self._key_locks[key] = lock
            return lock

    def generate(self, req: GenRequest, context: PromptBundle | None = None) -> GenResult:
        key = cache_key(req)
        with self._lock_for(key):
            if self.cache is not None:
                hit = self.cache.get(key)
                if hit is not None:
                    result = GenResult(
                        text=hit["text"],
                        prompt_tokens=hit["prompt_tokens"],
                        completion_tokens=hit["completion_tokens"],
                        latency_ms=0,
                        cached=True,
                        tokens_estimated=hit.get("tokens_estimated", False),
                    )
                    self.ledger.record(result)
                    return result
            t0 = time.monotonic()
            with self._sem:
                reply = self.transport(req, context)
            latency_ms = int((time.monotonic() - t0) * 1000)
            estimated = reply.prompt_tokens is None or reply.completion_tokens is None
            prompt_tokens = reply.prompt_tokens if reply.prompt_tokens is not None else estimate_tokens(req.prompt)
            completion_tokens = (
                reply.completion_tokens if reply.completion_tokens is not None else estimate_tokens(reply.text)
            )
            result = GenResult(
                text=reply.text,
                prompt_tokens=prompt_tokens,
                completion_tokens=completion_tokens,
                latency_ms=latency_ms,
                cached=False,
                tokens_estimated=estimated,
            )
            self.ledger.record(result)
            if self.cache is not None:
                self.cache.put(key, req, reply.text, prompt_tokens, completion_tokens, estimated)
            return result


def http_transport(endpoint: str | None = None, api_key: str | None = None,
                   *, timeout: float = 60.0, max_retries: int = 4,
                   rate_per_min: int = 20) -> Transport:
    """OpenAI-style chat-completions transport. Connection settings fall back
    to LLM_ENDPOINT / LLM_API_KEY; transient failures retry with backoff."""
    url = endpoint or os.environ.get(ENV_ENDPOINT)
    if not url:
        raise ConfigError(f"no endpoint configured (set {ENV_ENDPOINT})")
    token = api_key if api_key is not None else os.environ.get(ENV_API_KEY, "")
    bucket = TokenBucket(rate_per_min)

    def call(req: GenRequest, context: PromptBundle | None = None) -> TransportReply:
        body: dict = {
            "model": req.model_id,
            "messages": [{"role": "user", "content": req.prompt}],
            "temperature": req.temperature,
            "max_tokens": req.max_output_tokens,
        }
        if req.stop:
            body["stop"] = list(req.stop)
        headers = {"Content-Type": "application/json"}
        if token:
            headers["Authorization"] = f"Bearer {token}"
        last_error = "no attempts made"
        for attempt in range(max_retries + 1):
            bucket.acquire()
            try:
                resp = _requests.post(url, json=body, headers=headers, timeout=timeout)
            except _requests.RequestException as exc:
                last_error = str(exc)
                time.sleep(min(30.0, 0.5 * 2**attempt))
                continue
            if resp.status_code in (401, 403):
                raise AuthFailure(f"endpoint rejected credentials (HTTP {resp.status_code})")
            if resp.status_code == 400 and "context" in resp.text.lower():
                raise ContextTooLong(resp.text[:500])
            if resp.status_code in (429, 500, 502, 503, 504):
                last_error = f"HTTP {resp.status_code}"
                time.sleep(min(30.0, 0.5 * 2**attempt))
                continue
            if resp.status_code != 200:
                raise EndpointUnreachable(f"HTTP {resp.status_code}: {resp.text[:500]}")
            payload = resp.json()
            try:
                text = payload["choices"][0]["message"]["content"]
            except (KeyError, IndexError, TypeError):
                raise EndpointUnreachable(f"malformed endpoint reply: {str(payload)[:500]}") from None
            usage = payload.get("usage") or {}
            return TransportReply(
                text=text,
                prompt_tokens=usage.get("prompt_tokens"),
                completion_tokens=usage.get("completion_tokens"),
            )
        raise EndpointUnreachable(f"gave up after {max_retries + 1} attempts: {last_error}")

    return call


def _answer_line(letter: str) -> str:
    return f"Answer: ({letter})"


def _oracle_letter(bundle: PromptBundle | None, gold: dict[str, str]) -> str:
    if bundle is None or not bundle.choice_map:
        return "a"
    target = gold.get(bundle.meta.get("sample_id", ""))
    for letter, label in bundle.choice_map:
        if label == target:
            return letter
    for letter, label in bundle.choice_map:
        if label == NONE_LABEL:
            return letter
    return bundle.choice_map[0][0]


def mock_llm(policy: str, *, gold: dict[str, str] | None = None, text: str | None = None,
             p: float | None = None, seed: int = 0) -> Transport:
    """Deterministic stand-ins for an endpoint.

    oracle: answer the gold label's letter (falling back to None, then the
    first choice). first_choice: always (a). fixed_text: verbatim canned
    reply. noisy: gold with probability p, otherwise a seeded-uniform wrong
    letter; the draw is a pure function of (seed, prompt).
    """
    if policy == "oracle":
        if gold is None:
            raise ConfigError("oracle mock needs a gold map")

        def call(req: GenRequest, context: PromptBundle | None = None) -> TransportReply:
            return TransportReply(text=_answer_line(_oracle_letter(context, gold)))

        return call
    if policy == "first_choice":

        def call(req: GenRequest, context: PromptBundle | None = None) -> TransportReply:
            letter = context.choice_map[0][0] if context is not None and context.choice_map else "a"
            return TransportReply(text=_answer_line(letter))

        return call
    if policy == "fixed_text":
        if text is None:
            raise ConfigError("fixed_text mock needs text")
        canned = text

        def call(req: GenRequest, context: PromptBundle | None = None) -> TransportReply:
            return TransportReply(text=canned)

        return call
    if policy == "noisy":
        if p is None or not 0.0 <= p <= 1.0:
            raise ConfigError(f"noisy mock needs p in [0, 1], got {p}")
        if gold is None:
            raise ConfigError("noisy mock needs a gold map")
        prob = p

        def call(req: GenRequest, context: PromptBundle | None = None) -> TransportReply:
            digest = hashlib.sha256(f"{seed}:{req.prompt}".encode("utf-8")).digest()
            rng = random.Random(int.from_bytes(digest[:8], "big"))
            right = _oracle_letter(context, gold)
            if rng.random() < prob or context is None or len(context.choice_map) <= 1:
                return TransportReply(text=_answer_line(right))
            wrong = [letter for letter, _ in context.choice_map if letter != right]
            return TransportReply(text=_answer_line(rng.choice(wrong)))

        return call
    raise ConfigError(f"unknown mock policy {policy!r}")
