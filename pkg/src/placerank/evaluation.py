"""Geolocation-based Recall@K over rankings.

A query counts as solved at K when at least one of its first K ranked
candidates lies within the radius of the query's ground-truth location.
Distances are planar for utm records and great-circle (spherical Earth,
R = 6,371 km) for wgs84; at a 25 m decision radius the spherical
approximation error is far below dataset GPS noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import ConfigError, FrameMismatch, MismatchedConfigs, UnknownId
from .retrieval import PlaceRecord

EARTH_RADIUS_M = 6_371_000.0

# One ranked query: (query_id, candidate ids in rank order).
RankedQuery = tuple[str, Sequence[str]]


@dataclass(frozen=True)
class EvalConfig:
    radius_m: float = 25.0
    k_values: tuple[int, ...] = (1, 5, 10)

    def __post_init__(self):
        if not self.radius_m > 0:
            raise ConfigError(f"radius_m must be > 0, got {self.radius_m}")
        ks = tuple(self.k_values)
        if not ks or any(k < 1 for k in ks) or any(a >= b for a, b in zip(ks, ks[1:])):
            raise ConfigError(f"k_values must be strictly increasing positive integers, got {ks}")


@dataclass(frozen=True)
class RecallReport:
    recall: dict  # K -> fraction in [0, 1]
    num_queries: int
    radius_m: float

    def to_json_dict(self) -> dict:
        return {
            "recall": {str(k): v for k, v in sorted(self.recall.items())},
            "num_queries": self.num_queries,
            "radius_m": self.radius_m,
        }


def geo_distance(a: PlaceRecord, b: PlaceRecord) -> float:
    """Distance in meters between two records sharing a coordinate frame."""
    if a.frame != b.frame:
        raise FrameMismatch(f"cannot mix frames {a.frame!r} and {b.frame!r}")
    if a.frame == "utm":
        return math.hypot(a.x - b.x, a.y - b.y)
    return _haversine_m(a.x, a.y, b.x, b.y)


def _haversine_m(lon1: float, lat1: float, lon2: float, lat2: float) -> float:
    phi1 = math.radians(lat1)
    phi2 = math.radians(lat2)
    dphi = math.radians(lat2 - lat1)
    dlam = math.radians(lon2 - lon1)
    h = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def recall_at_k(
    rankings: Iterable[RankedQuery],
    records: Mapping[str, PlaceRecord],
    cfg: EvalConfig,
) -> RecallReport:
    """Recall@K for each configured K over a set of ranked queries.

    A K larger than a ranking simply evaluates the whole list. Every id,
    query and candidate alike, must resolve in the records mapping.
    """
    first_hits: list[int | None] = []
    num_queries = 0
    for query_id, candidate_ids in rankings:
        num_queries += 1
        query = _resolve(records, query_id)
        first_hit = None
        for idx, cand_id in enumerate(candidate_ids):
            cand = _resolve(records, cand_id)
            if geo_distance(query, cand) <= cfg.radius_m:
                first_hit = idx
                break
        first_hits.append(first_hit)
    recall = {}
    for k in cfg.k_values:
        hits = sum(1 for fh in first_hits if fh is not None and fh < k)
        recall[k] = hits / num_queries if num_queries else 0.0
    return RecallReport(recall=recall, num_queries=num_queries, radius_m=cfg.radius_m)


def _resolve(records: Mapping[str, PlaceRecord], id_: str) -> PlaceRecord:
    try:
        return records[id_]
    except KeyError:
        raise UnknownId(id_) from None


def records_by_id(records: Iterable[PlaceRecord]) -> dict[str, PlaceRecord]:
    return {r.id: r for r in records}


def build_report(coarse: RecallReport, reranked: RecallReport) -> dict:
    """Side-by-side comparison: per-K recall of both stages plus the
    absolute delta (reranked minus coarse)."""
    if sorted(coarse.recall) != sorted(reranked.recall):
        raise MismatchedConfigs(
            f"k_values differ: {sorted(coarse.recall)} vs {sorted(reranked.recall)}"
        )
    if coarse.num_queries != reranked.num_queries:
        raise MismatchedConfigs(
            f"query counts differ: {coarse.num_queries} vs {reranked.num_queries}"
        )
    if coarse.radius_m != reranked.radius_m:
        raise MismatchedConfigs(f"radii differ: {coarse.radius_m} vs {reranked.radius_m}")
    ks = sorted(coarse.recall)
    return {
        "k_values": ks,
        "num_queries": coarse.num_queries,
        "radius_m": coarse.radius_m,
        "coarse": {str(k): coarse.recall[k] for k in ks},
        "reranked": {str(k): reranked.recall[k] for k in ks},
        "delta": {str(k): reranked.recall[k] - coarse.recall[k] for k in ks},
    }


def format_recall_table(report: RecallReport) -> str:
    lines = [f"{'K':>4}  {'recall':>8}"]
    for k in sorted(report.recall):
        lines.append(f"{k:>4}  {report.recall[k]:>8.4f}")
    lines.append(f"queries: {report.num_queries}  radius: {report.radius_m} m")
    return "\n".join(lines)


def format_comparison_table(cmp: dict) -> str:
    lines = [f"{'K':>4}  {'coarse':>8}  {'reranked':>8}  {'delta':>8}"]
    for k in cmp["k_values"]:
        key = str(k)
        lines.append(
            f"{k:>4}  {cmp['coarse'][key]:>8.4f}  {cmp['reranked'][key]:>8.4f}  "
            f"{cmp['delta'][key]:>+8.4f}"
        )
    lines.append(f"queries: {cmp['num_queries']}  radius: {cmp['radius_m']} m")
    return "\n".join(lines)
