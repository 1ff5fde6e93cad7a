"""Chat-completion transport against an OpenAI-compatible endpoint.

One gateway object owns a global in-flight cap and is safe to share
across threads. Sampling batches fan out concurrently but always return
in sample-index order; a single failed sample degrades to a failed-status
entry instead of aborting the batch.
"""

from __future__ import annotations

import math
import os
import random
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Callable

import httpx

from .errors import AuthError, ConfigError, PlacerankError, ProtocolError, TransportError
from .prompting import ImagePart, MessageSequence, TextPart

API_KEY_ENV = "MLLM_API_KEY"

BACKOFF_BASE_S = 1.0
BACKOFF_CAP_S = 8.0
BACKOFF_JITTER = 0.2

# Module-level so tests can stub the waiting out.
_sleep = time.sleep


@dataclass(frozen=True)
class ModelConfig:
    endpoint_url: str
    model_name: str
    temperature: float = 0.0
    request_timeout_s: float = 120.0
    max_retries: int = 3
    max_concurrency: int = 4

    def __post_init__(self):
        if not math.isfinite(self.temperature):
            raise ConfigError(f"temperature must be finite, got {self.temperature}")
        if self.max_concurrency < 1:
            raise ConfigError(f"max_concurrency must be >= 1, got {self.max_concurrency}")
        if self.max_retries < 0:
            raise ConfigError(f"max_retries must be >= 0, got {self.max_retries}")


@dataclass(frozen=True)
class RawResponse:
    """One raw reply: verbatim text plus transport accounting.

    output_tokens is 0 when the endpoint omits usage data. failed_reason
    is None for a successful request.
    """

    sample_index: int
    text: str
    latency_s: float
    output_tokens: int = 0
    failed_reason: str | None = None

    @property
    def ok(self) -> bool:
        return self.failed_reason is None


@dataclass(frozen=True)
class PairContext:
    """Identifies the pair a request belongs to. The HTTP gateway ignores
    it; the mock gateway keys its deterministic output on it."""

    query_id: str
    candidate_id: str
    ground_truth_distance_m: float = float("nan")


def messages_to_wire(messages: MessageSequence) -> list[dict]:
    """Convert a message sequence to the chat-completions body format,
    inlining images as data URLs."""
    wire = []
    for msg in messages:
        content = []
        for part in msg.parts:
            if isinstance(part, TextPart):
                content.append({"type": "text", "text": part.text})
            elif isinstance(part, ImagePart):
                content.append({
                    "type": "image_url",
                    "image_url": {"url": f"data:{part.media_type};base64,{part.base64_data}"},
                })
            else:
                raise ConfigError(f"unknown content part {type(part).__name__}")
        wire.append({"role": msg.role, "content": content})
    return wire


def fan_out_samples(
    complete_one: Callable[[int], RawResponse],
    n: int,
    max_workers: int,
) -> list[RawResponse]:
    """Run complete_one for indices 0..n-1 concurrently and return results
    in index order regardless of completion order."""
    if n == 1:
        return [complete_one(0)]
    results: list[RawResponse | None] = [None] * n
    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        futures = {pool.submit(complete_one, i): i for i in range(n)}
        for fut in as_completed(futures):
            results[futures[fut]] = fut.result()
    return results  # type: ignore[return-value]


class HttpGateway:
    """Synchronous HTTP client for {endpoint}/chat/completions."""

    requires_images = True

    def __init__(self, cfg: ModelConfig):
        self.cfg = cfg
        self._gate = threading.BoundedSemaphore(cfg.max_concurrency)
        self._client = httpx.Client(timeout=cfg.request_timeout_s)

    @property
    def fingerprint(self) -> str:
        """Identity string for cache keying: anything that changes the
        distribution of replies must appear here."""
        return f"http|{self.cfg.model_name}|tau={self.cfg.temperature}"

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "HttpGateway":
        return self

    def __exit__(self, *_exc) -> None:
        self.close()

    def complete(
        self,
        messages: MessageSequence,
        sample_index: int = 0,
        context: PairContext | None = None,
    ) -> RawResponse:
        """Issue one request, retrying transient failures with exponential
        backoff. Auth failures and malformed replies are never retried."""
        del context  # only meaningful to the mock transport
        body = {
            "model": self.cfg.model_name,
            "temperature": self.cfg.temperature,
            "messages": messages_to_wire(messages),
        }
        headers = {}
        api_key = os.environ.get(API_KEY_ENV)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        url = self.cfg.endpoint_url.rstrip("/") + "/chat/completions"

        attempts = self.cfg.max_retries + 1
        last_failure = "no attempt made"
        for attempt in range(attempts):
            if attempt > 0:
                _sleep(_backoff_delay(attempt - 1))
            try:
                with self._gate:
                    start = time.monotonic()
                    resp = self._client.post(url, json=body, headers=headers)
                    latency = time.monotonic() - start
            except httpx.HTTPError as e:
                last_failure = f"{type(e).__name__}: {e}"
                continue
            if resp.status_code in (401, 403):
                raise AuthError(f"HTTP {resp.status_code} from {url}")
            if resp.status_code == 429 or resp.status_code >= 500:
                last_failure = f"HTTP {resp.status_code}"
                continue
            if resp.status_code != 200:
                raise ProtocolError(f"unexpected HTTP {resp.status_code} from {url}")
            return _parse_reply(resp, sample_index, latency)
        raise TransportError(f"request failed after {attempts} attempts: {last_failure}")

    def sample_n(
        self,
        messages: MessageSequence,
        n: int,
        context: PairContext | None = None,
    ) -> list[RawResponse]:
        """Collect n independent samples of the same prompt.

        Always returns exactly n entries ordered by sample index; a sample
        whose request ultimately failed carries a failed_reason instead of
        aborting the batch.
        """
        if n < 1:
            raise ConfigError(f"sample count must be >= 1, got {n}")

        def one(i: int) -> RawResponse:
            start = time.monotonic()
            try:
                return self.complete(messages, sample_index=i, context=context)
            except PlacerankError as e:
                return RawResponse(
                    sample_index=i,
                    text="",
                    latency_s=time.monotonic() - start,
                    failed_reason=f"{type(e).__name__}: {e}",
                )

        return fan_out_samples(one, n, min(n, self.cfg.max_concurrency))


def _backoff_delay(retry_index: int) -> float:
    base = min(BACKOFF_BASE_S * (2 ** retry_index), BACKOFF_CAP_S)
    return base * (1.0 + random.uniform(-BACKOFF_JITTER, BACKOFF_JITTER))


def _parse_reply(resp: httpx.Response, sample_index: int, latency: float) -> RawResponse:
    try:
        data = resp.json()
        content = data["choices"][0]["message"]["content"]
    except Exception:
        raise ProtocolError(f"malformed endpoint reply: {resp.text[:200]!r}") from None
    if not isinstance(content, str):
        raise ProtocolError("endpoint reply content is not a string")
    usage = data.get("usage") or {}
    tokens = usage.get("completion_tokens", 0)
    if not isinstance(tokens, int) or tokens < 0:
        tokens = 0
    return RawResponse(
        sample_index=sample_index,
        text=content,
        latency_s=latency,
        output_tokens=tokens,
    )
