"""Deterministic stand-ins for the model endpoint.

MockGateway synthesizes a verdict from the ground-truth distance of each
pair, so offline runs exercise the whole transport-parse-calibrate path
with byte-reproducible output. The synthetic noise is heteroscedastic:
largest for mid-range distances, where a real model is least consistent,
and it does not depend on temperature, mimicking ambiguity that more
sampling cannot remove but can average over.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
import threading
import time
from dataclasses import dataclass
from typing import Callable, Sequence

from .errors import ConfigError
from .gateway import PairContext, RawResponse, fan_out_samples


@dataclass(frozen=True)
class MockConfig:
    seed: int = 0
    noise_scale: float = 0.0
    malform_rate: float = 0.0
    fence_rate: float = 0.0
    d_ref_m: float = 200.0     # distance at which the base score reaches 0
    hetero_floor: float = 0.1  # minimum noise weight at the score extremes

    def __post_init__(self):
        for name in ("malform_rate", "fence_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {v}")
        if self.d_ref_m <= 0:
            raise ConfigError(f"d_ref_m must be > 0, got {self.d_ref_m}")


_JUSTIFICATIONS = (
    (0.8, "The same storefronts, signage, and street furniture appear in both views with a consistent layout.",
     ("storefront signage", "street lamps", "building facades"), ()),
    (0.5, "Several permanent structures correspond, but parts of the surroundings differ or are occluded.",
     ("building facades", "road layout"), ("storefront signage",)),
    (0.2, "Only generic street elements are shared; distinctive landmarks do not line up.",
     ("road markings",), ("building facades", "signage")),
    (0.0, "The permanent structures in the two views do not correspond.",
     (), ("building facades", "street furniture", "signage")),
)


def _pair_rng(seed: int, query_id: str, candidate_id: str, sample_index: int, salt: str = "") -> random.Random:
    key = f"{seed}|{query_id}|{candidate_id}|{sample_index}|{salt}".encode("utf-8")
    digest = hashlib.sha256(key).digest()
    return random.Random(int.from_bytes(digest[:8], "little"))


def _clamp01(v: float) -> float:
    return max(0.0, min(1.0, v))


def mock_verdict_text(context: PairContext, sample_index: int, cfg: MockConfig) -> str:
    """Synthesize one raw reply for a pair, deterministic in
    (seed, query id, candidate id, sample index).

    The embedded score is clamp01(1 - distance / d_ref) plus seeded noise,
    rounded to two decimals the way models tend to answer. Draw order is
    fixed (malform, fence, noise) so toggling one rate never shifts the
    other draws.
    """
    rng = _pair_rng(cfg.seed, context.query_id, context.candidate_id, sample_index)
    u_malform = rng.random()
    u_fence = rng.random()
    gauss = rng.gauss(0.0, 1.0)

    if u_malform < cfg.malform_rate:
        return (
            f"After comparing the two street views I could not settle on a numeric verdict "
            f"for {context.query_id} versus {context.candidate_id}; please retry this pair."
        )

    distance = context.ground_truth_distance_m
    if math.isnan(distance):
        distance = 0.0
    base = _clamp01(1.0 - distance / cfg.d_ref_m)
    sigma = cfg.noise_scale * (cfg.hetero_floor + 4.0 * base * (1.0 - base))
    score = round(_clamp01(base + gauss * sigma), 2)

    for threshold, justification, matching, mismatched in _JUSTIFICATIONS:
        if score >= threshold:
            break
    body = json.dumps(
        {
            "similarity_score": score,
            "justification": justification,
            "key_matching_objects": list(matching),
            "key_mismatched_objects": list(mismatched),
        },
        indent=2,
    )
    if u_fence < cfg.fence_rate:
        return f"```json\n{body}\n```"
    return body


_DEFAULT_CONTEXT = PairContext(query_id="query", candidate_id="candidate", ground_truth_distance_m=0.0)


class MockGateway:
    """Drop-in gateway that never touches the network.

    Counts every issued request so tests can assert request budgets.
    delay_fn, when set, sleeps per sample before answering to simulate
    network timing without affecting the output.
    """

    requires_images = False

    def __init__(
        self,
        cfg: MockConfig,
        max_concurrency: int = 8,
        latency_range: tuple[float, float] = (0.5, 2.0),
        delay_fn: Callable[[int], float] | None = None,
    ):
        self.cfg = cfg
        self.max_concurrency = max_concurrency
        self.latency_range = latency_range
        self.delay_fn = delay_fn
        self._lock = threading.Lock()
        self.calls = 0

    @property
    def fingerprint(self) -> str:
        c = self.cfg
        return (
            f"mock|seed={c.seed}|noise={c.noise_scale}|malform={c.malform_rate}"
            f"|fence={c.fence_rate}|dref={c.d_ref_m}|floor={c.hetero_floor}"
        )

    def reset_calls(self) -> None:
        with self._lock:
            self.calls = 0

    def complete(
        self,
        messages=None,
        sample_index: int = 0,
        context: PairContext | None = None,
    ) -> RawResponse:
        del messages  # the verdict depends only on the pair context
        with self._lock:
            self.calls += 1
        if self.delay_fn is not None:
            time.sleep(self.delay_fn(sample_index))
        ctx = context or _DEFAULT_CONTEXT
        text = mock_verdict_text(ctx, sample_index, self.cfg)
        lat_rng = _pair_rng(self.cfg.seed, ctx.query_id, ctx.candidate_id, sample_index, salt="latency")
        latency = lat_rng.uniform(*self.latency_range)
        return RawResponse(
            sample_index=sample_index,
            text=text,
            latency_s=latency,
            output_tokens=len(text) // 4,
        )

    def sample_n(self, messages, n: int, context: PairContext | None = None) -> list[RawResponse]:
        if n < 1:
            raise ConfigError(f"sample count must be >= 1, got {n}")
        return fan_out_samples(
            lambda i: self.complete(messages, sample_index=i, context=context),
            n,
            min(n, self.max_concurrency),
        )


class ReplayGateway:
    """Gateway that replays scripted texts by sample index, for fixtures."""

    requires_images = False

    def __init__(self, texts: Sequence[str], latency_s: float = 1.0, tokens_per_text: int | None = None):
        if not texts:
            raise ConfigError("ReplayGateway needs at least one text")
        self.texts = list(texts)
        self.latency_s = latency_s
        self.tokens_per_text = tokens_per_text
        self._lock = threading.Lock()
        self.calls = 0

    @property
    def fingerprint(self) -> str:
        digest = hashlib.sha256("\x00".join(self.texts).encode("utf-8")).hexdigest()[:12]
        return f"replay|{digest}"

    def complete(self, messages=None, sample_index: int = 0, context=None) -> RawResponse:
        with self._lock:
            self.calls += 1
        text = self.texts[sample_index % len(self.texts)]
        tokens = self.tokens_per_text if self.tokens_per_text is not None else len(text) // 4
        return RawResponse(
            sample_index=sample_index,
            text=text,
            latency_s=self.latency_s,
            output_tokens=tokens,
        )

    def sample_n(self, messages, n: int, context=None) -> list[RawResponse]:
        if n < 1:
            raise ConfigError(f"sample count must be >= 1, got {n}")
        return [self.complete(messages, sample_index=i, context=context) for i in range(n)]
