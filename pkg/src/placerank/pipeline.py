"""Re-ranking pipeline: score shortlisted pairs, reorder, cache, account.

Each (query, candidate) pair is scored independently: the gateway collects
one sample (single mode) or several (uasc mode), replies are parsed, and
the calibrated score decides the new order. Scores are cached per pair on
disk, keyed by everything that can change a verdict, so an interrupted run
resumes without repeating model calls and a finished run replays
byte-identically.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .codec import ParseOutcome, parse_scored_response
from .errors import ConfigError, EmptyCandidateList, NoValidSamples, UnknownId
from .evaluation import geo_distance
from .gateway import PairContext
from .prompting import PromptTemplate, build_messages
from .retrieval import CandidateList, PlaceRecord
from .uasc import CalibrationConfig, UascResult, run_uasc

MODES = ("uasc", "single")

FALLBACK_SCORE = 0.0


@dataclass(frozen=True)
class PipelineConfig:
    mode: str = "uasc"
    top_n: int = 20
    calibration: CalibrationConfig = field(default_factory=CalibrationConfig)
    template: PromptTemplate | None = None  # None selects the built-in prompt
    max_side: int | None = None             # image downscale bound, None keeps full size
    pair_workers: int = 1                   # pairs scored concurrently per query

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.top_n < 1:
            raise ConfigError(f"top_n must be >= 1, got {self.top_n}")
        if self.pair_workers < 1:
            raise ConfigError(f"pair_workers must be >= 1, got {self.pair_workers}")

    def resolved_template(self) -> PromptTemplate:
        return self.template or PromptTemplate.default()

    def samples_per_pair(self) -> int:
        return self.calibration.n_samples if self.mode == "uasc" else 1


@dataclass(frozen=True)
class PairScore:
    """Final verdict for one pair plus the evidence behind it.

    Exactly one of uasc/single is set on the happy path; when every sample
    of a uasc pair failed, both are None and samples holds the rejects.
    from_cache is bookkeeping for telemetry and is never serialized.
    """

    query_id: str
    candidate_id: str
    mode: str
    final_score: float
    fallback_used: bool
    latency_s: float      # summed across samples
    output_tokens: int    # summed across samples
    num_requests: int
    uasc: UascResult | None = None
    single: ParseOutcome | None = None
    samples: tuple[ParseOutcome, ...] = ()
    from_cache: bool = False

    def to_record(self) -> dict:
        rec: dict = {
            "query_id": self.query_id,
            "candidate_id": self.candidate_id,
            "mode": self.mode,
            "final_score": self.final_score,
            "fallback_used": self.fallback_used,
            "latency_s": self.latency_s,
            "output_tokens": self.output_tokens,
            "num_requests": self.num_requests,
        }
        if self.uasc is not None:
            rec["uasc"] = self.uasc.to_record()
        if self.single is not None:
            rec["single"] = self.single.to_record()
        if self.samples:
            rec["samples"] = [o.to_record() for o in self.samples]
        return rec

    @classmethod
    def from_record(cls, rec: dict, from_cache: bool = False) -> "PairScore":
        return cls(
            query_id=rec["query_id"],
            candidate_id=rec["candidate_id"],
            mode=rec["mode"],
            final_score=float(rec["final_score"]),
            fallback_used=bool(rec["fallback_used"]),
            latency_s=float(rec["latency_s"]),
            output_tokens=int(rec["output_tokens"]),
            num_requests=int(rec["num_requests"]),
            uasc=UascResult.from_record(rec["uasc"]) if "uasc" in rec else None,
            single=ParseOutcome.from_record(rec["single"]) if "single" in rec else None,
            samples=tuple(ParseOutcome.from_record(r) for r in rec.get("samples", [])),
            from_cache=from_cache,
        )

    def failed_sample_count(self) -> int:
        if self.uasc is not None:
            return sum(1 for d in self.uasc.per_sample if d.status != "Success")
        if self.single is not None:
            return 0 if self.single.valid else 1
        return sum(1 for o in self.samples if not o.valid)


@dataclass(frozen=True)
class RankedItem:
    candidate_id: str
    final_score: float
    coarse_rank: int
    coarse_score: float
    fallback_used: bool


@dataclass(frozen=True)
class Ranking:
    query_id: str
    items: tuple[RankedItem, ...]

    def ids(self) -> list[str]:
        return [it.candidate_id for it in self.items]

    def to_record(self) -> dict:
        return {
            "query_id": self.query_id,
            "ranking": [
                {
                    "candidate_id": it.candidate_id,
                    "final_score": it.final_score,
                    "coarse_rank": it.coarse_rank,
                    "coarse_score": it.coarse_score,
                    "fallback_used": it.fallback_used,
                }
                for it in self.items
            ],
        }

    @classmethod
    def from_record(cls, rec: dict) -> "Ranking":
        return cls(
            query_id=rec["query_id"],
            items=tuple(
                RankedItem(
                    candidate_id=it["candidate_id"],
                    final_score=float(it["final_score"]),
                    coarse_rank=int(it["coarse_rank"]),
                    coarse_score=float(it["coarse_score"]),
                    fallback_used=bool(it.get("fallback_used", False)),
                )
                for it in rec["ranking"]
            ),
        )


class PairCache:
    """One JSON file per scored pair, named by the cache key.

    Writes are atomic (tmp file + rename) so a crash never leaves a
    half-written entry; an unreadable entry is treated as a miss and
    rescored.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def key(query_id: str, candidate_id: str, mode_key: str) -> str:
        raw = f"{query_id}|{candidate_id}|{mode_key}".encode("utf-8")
        return hashlib.sha256(raw).hexdigest()

    def _path(self, key: str) -> Path:
        return self.root / f"{key}.json"

    def get(self, key: str) -> dict | None:
        path = self._path(key)
        try:
            with open(path, "r", encoding="utf-8") as fh:
                return json.load(fh)
        except FileNotFoundError:
            return None
        except (json.JSONDecodeError, OSError):
            return None

    def put(self, key: str, record: dict) -> None:
        path = self._path(key)
        tmp = path.with_suffix(".json.tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(record, fh)
        os.replace(tmp, path)

    def __len__(self) -> int:
        return sum(1 for _ in self.root.glob("*.json"))


def mode_key(gateway, cfg: PipelineConfig) -> str:
    """Cache discriminator: transport identity, prompt, and calibration.

    Changing any of these must invalidate cached verdicts; changing top_n
    or worker counts must not.
    """
    cal = cfg.calibration
    parts = [
        getattr(gateway, "fingerprint", type(gateway).__name__),
        cfg.mode,
        cfg.resolved_template().fingerprint(),
        f"n={cfg.samples_per_pair()}",
        f"lambda={cal.lambda_}",
        f"var={cal.variance_mode}",
        f"maxside={cfg.max_side}",
    ]
    return "|".join(parts)


def score_pair(
    gateway,
    query: PlaceRecord,
    candidate: PlaceRecord,
    cfg: PipelineConfig,
    distance_m: float = float("nan"),
    cache: PairCache | None = None,
    cache_mode_key: str | None = None,
) -> PairScore:
    """Score one pair end to end: prompt, sample, parse, calibrate.

    With a cache, a previously scored pair is returned as-is without any
    gateway traffic. A pair whose every sample is unusable falls back to
    score 0.0 with fallback_used set, never an exception: one bad pair
    must not sink a run.
    """
    key = None
    if cache is not None:
        key = PairCache.key(query.id, candidate.id, cache_mode_key or mode_key(gateway, cfg))
        hit = cache.get(key)
        if hit is not None:
            return PairScore.from_record(hit, from_cache=True)

    if getattr(gateway, "requires_images", True):
        messages = build_messages(
            query, candidate, template=cfg.resolved_template(), max_side=cfg.max_side
        )
    else:
        messages = ()
    context = PairContext(
        query_id=query.id, candidate_id=candidate.id, ground_truth_distance_m=distance_m
    )
    n = cfg.samples_per_pair()
    raws = gateway.sample_n(messages, n, context=context)

    outcomes = tuple(
        parse_scored_response(raw.text)
        if raw.ok
        else ParseOutcome(raw_text=raw.text, reason=raw.failed_reason)
        for raw in raws
    )
    latency = sum(r.latency_s for r in raws)
    tokens = sum(r.output_tokens for r in raws)

    if cfg.mode == "uasc":
        try:
            result = run_uasc(outcomes, cfg.calibration)
            score = PairScore(
                query_id=query.id,
                candidate_id=candidate.id,
                mode=cfg.mode,
                final_score=result.final,
                fallback_used=False,
                latency_s=latency,
                output_tokens=tokens,
                num_requests=n,
                uasc=result,
            )
        except NoValidSamples:
            score = PairScore(
                query_id=query.id,
                candidate_id=candidate.id,
                mode=cfg.mode,
                final_score=FALLBACK_SCORE,
                fallback_used=True,
                latency_s=latency,
                output_tokens=tokens,
                num_requests=n,
                samples=outcomes,
            )
    else:
        outcome = outcomes[0]
        score = PairScore(
            query_id=query.id,
            candidate_id=candidate.id,
            mode=cfg.mode,
            final_score=outcome.response.similarity_score if outcome.valid else FALLBACK_SCORE,
            fallback_used=not outcome.valid,
            latency_s=latency,
            output_tokens=tokens,
            num_requests=n,
            single=outcome,
        )

    if cache is not None and key is not None:
        cache.put(key, score.to_record())
    return score


def rerank_query(
    gateway,
    query: PlaceRecord,
    shortlist: CandidateList,
    records: Mapping[str, PlaceRecord],
    cfg: PipelineConfig,
    cache: PairCache | None = None,
) -> tuple[Ranking, list[PairScore]]:
    """Re-rank one query's coarse shortlist.

    At most cfg.top_n candidates (already in coarse order) are scored;
    the new order is by final score descending with ties resolved by the
    original coarse rank, so an uninformative pass degrades to the coarse
    order instead of scrambling it. Returned scores follow coarse order.
    """
    if not shortlist.items:
        raise EmptyCandidateList(f"query {query.id!r} has no candidates")
    items = shortlist.items[: cfg.top_n]
    resolved = []
    for cand in items:
        rec = records.get(cand.candidate_id)
        if rec is None:
            raise UnknownId(cand.candidate_id)
        resolved.append(rec)
    mk = mode_key(gateway, cfg)

    def one(i: int) -> PairScore:
        return score_pair(
            gateway,
            query,
            resolved[i],
            cfg,
            distance_m=geo_distance(query, resolved[i]),
            cache=cache,
            cache_mode_key=mk,
        )

    if cfg.pair_workers == 1 or len(items) == 1:
        scores = [one(i) for i in range(len(items))]
    else:
        scores = [None] * len(items)  # type: ignore[list-item]
        with ThreadPoolExecutor(max_workers=cfg.pair_workers) as pool:
            futures = {pool.submit(one, i): i for i in range(len(items))}
            for fut in as_completed(futures):
                scores[futures[fut]] = fut.result()

    order = sorted(
        range(len(items)), key=lambda i: (-scores[i].final_score, items[i].coarse_rank)
    )
    ranking = Ranking(
        query_id=query.id,
        items=tuple(
            RankedItem(
                candidate_id=items[i].candidate_id,
                final_score=scores[i].final_score,
                coarse_rank=items[i].coarse_rank,
                coarse_score=items[i].coarse_score,
                fallback_used=scores[i].fallback_used,
            )
            for i in order
        ),
    )
    return ranking, list(scores)


def rerank_dataset(
    gateway,
    shortlists: Sequence[CandidateList],
    records: Mapping[str, PlaceRecord],
    cfg: PipelineConfig,
    cache: PairCache | None = None,
) -> tuple[list[Ranking], list[PairScore], "Telemetry"]:
    """Re-rank every query shortlist in order. Query records are resolved
    from the same manifest mapping as candidates."""
    rankings: list[Ranking] = []
    all_scores: list[PairScore] = []
    for shortlist in shortlists:
        query = records.get(shortlist.query_id)
        if query is None:
            raise UnknownId(shortlist.query_id)
        ranking, scores = rerank_query(gateway, query, shortlist, records, cfg, cache=cache)
        rankings.append(ranking)
        all_scores.extend(scores)
    return rankings, all_scores, aggregate_telemetry(all_scores)


@dataclass(frozen=True)
class Telemetry:
    """Run accounting summed over pairs. Latency and token figures for
    cached pairs reflect the run that produced them."""

    num_pairs: int
    num_requests: int
    num_fallbacks: int
    num_failed_samples: int
    total_output_tokens: int
    total_latency_s: float
    cache_hits: int

    @property
    def mean_latency_s(self) -> float:
        return self.total_latency_s / self.num_requests if self.num_requests else 0.0

    def to_record(self) -> dict:
        return {
            "num_pairs": self.num_pairs,
            "num_requests": self.num_requests,
            "num_fallbacks": self.num_fallbacks,
            "num_failed_samples": self.num_failed_samples,
            "total_output_tokens": self.total_output_tokens,
            "total_latency_s": self.total_latency_s,
            "mean_latency_s": self.mean_latency_s,
            "cache_hits": self.cache_hits,
        }


def aggregate_telemetry(scores: Sequence[PairScore]) -> Telemetry:
    return Telemetry(
        num_pairs=len(scores),
        num_requests=sum(s.num_requests for s in scores),
        num_fallbacks=sum(1 for s in scores if s.fallback_used),
        num_failed_samples=sum(s.failed_sample_count() for s in scores),
        total_output_tokens=sum(s.output_tokens for s in scores),
        total_latency_s=sum(s.latency_s for s in scores),
        cache_hits=sum(1 for s in scores if s.from_cache),
    )


def coarse_rankings(shortlists: Sequence[CandidateList]) -> list[tuple[str, list[str]]]:
    """Shortlists as (query_id, ordered candidate ids) for evaluation."""
    return [(sl.query_id, sl.ids()) for sl in shortlists]


def reranked_rankings(rankings: Sequence[Ranking]) -> list[tuple[str, list[str]]]:
    return [(r.query_id, r.ids()) for r in rankings]


def write_rankings_jsonl(path: str | Path, rankings: Sequence[Ranking]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for r in rankings:
            fh.write(json.dumps(r.to_record()) + "\n")


def read_rankings_jsonl(path: str | Path) -> list[Ranking]:
    rankings = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rankings.append(Ranking.from_record(json.loads(line)))
    return rankings


def write_pair_scores_jsonl(path: str | Path, scores: Sequence[PairScore]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for s in scores:
            fh.write(json.dumps(s.to_record()) + "\n")
