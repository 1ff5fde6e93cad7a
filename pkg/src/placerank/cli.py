"""Command-line surface: retrieve, rerank, eval, report, mock-check.

Every setting resolves as defaults <- config file <- flags, later wins.
The config file is a flat JSON object whose keys mirror the long flag
names (with or without hyphens). The API key is read exclusively from the
MLLM_API_KEY environment variable; a key smuggled into the config file is
rejected outright.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Sequence

from . import evaluation, pipeline, reference
from .errors import MissingFile, ParseError, PlacerankError, UsageError
from .gateway import ModelConfig, HttpGateway
from .mock import MockConfig, MockGateway
from .prompting import load_template
from .retrieval import (
    CandidateList,
    load_embeddings,
    load_manifest,
    retrieve_top_n,
    sniff_embeddings_format,
)
from .uasc import CalibrationConfig


def _parse_k_values(value) -> tuple[int, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(int(v) for v in value)
    try:
        ks = tuple(int(part) for part in str(value).split(",") if part.strip())
    except ValueError:
        raise UsageError(f"cannot parse K list from {value!r}, expected e.g. 1,5,10") from None
    if not ks:
        raise UsageError("K list is empty")
    return ks


def _parse_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("true", "1", "yes", "on"):
        return True
    if text in ("false", "0", "no", "off"):
        return False
    raise UsageError(f"cannot parse boolean from {value!r}")


@dataclass(frozen=True)
class RunConfig:
    """Fully merged settings; resolved before any pipeline work starts."""

    top_n: int = 20
    metric: str = "cosine"
    format: str = "auto"
    prompt_file: str | None = None
    max_side: int | None = None
    endpoint: str | None = None
    model: str | None = None
    temperature: float = 0.0
    timeout_s: float = 120.0
    max_retries: int = 3
    concurrency: int = 4
    mode: str = "uasc"
    n_samples: int = 5
    lambda_: float = 0.5
    variance_mode: str = "population"
    radius_m: float = 25.0
    k_values: tuple[int, ...] = (1, 5, 10)
    cache_dir: str | None = None
    pair_workers: int = 1
    mock: bool = False
    mock_seed: int = 0
    mock_noise: float = 0.0
    mock_malform_rate: float = 0.0
    mock_fence_rate: float = 0.0
    mock_dref_m: float = 200.0


# field name -> (config/flag key, coercion). One table drives flag
# registration, config parsing, and the precedence test.
SETTINGS: dict[str, tuple[str, Callable]] = {
    "top_n": ("top-n", int),
    "metric": ("metric", str),
    "format": ("format", str),
    "prompt_file": ("prompt-file", str),
    "max_side": ("max-side", int),
    "endpoint": ("endpoint", str),
    "model": ("model", str),
    "temperature": ("temperature", float),
    "timeout_s": ("timeout-s", float),
    "max_retries": ("max-retries", int),
    "concurrency": ("concurrency", int),
    "mode": ("mode", str),
    "n_samples": ("n-samples", int),
    "lambda_": ("lambda", float),
    "variance_mode": ("variance-mode", str),
    "radius_m": ("radius-m", float),
    "k_values": ("k", _parse_k_values),
    "cache_dir": ("cache-dir", str),
    "pair_workers": ("pair-workers", int),
    "mock": ("mock", _parse_bool),
    "mock_seed": ("mock-seed", int),
    "mock_noise": ("mock-noise", float),
    "mock_malform_rate": ("mock-malform-rate", float),
    "mock_fence_rate": ("mock-fence-rate", float),
    "mock_dref_m": ("mock-dref-m", float),
}

_SECRET_KEYS = {
    "api-key", "api_key", "key", "token", "authorization",
    "mllm-api-key", "mllm_api_key",
}


def load_config_file(path: str | Path) -> dict:
    """Read a flat JSON config whose keys mirror flag names."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(f"config file {path} is not valid JSON: {e}") from None
    if not isinstance(data, dict):
        raise UsageError(f"config file {path} must hold a flat JSON object")
    return data


def merge_run_config(file_values: dict | None, flag_values: dict) -> RunConfig:
    """defaults <- config file <- flags; unknown or secret keys rejected."""
    by_key = {key: (field, coerce) for field, (key, coerce) in SETTINGS.items()}
    merged: dict = {}
    for raw_key, value in (file_values or {}).items():
        key = raw_key.strip().lstrip("-").replace("_", "-")
        if key in _SECRET_KEYS:
            raise UsageError(
                f"config key {raw_key!r} looks like a credential; "
                f"the API key must come from the MLLM_API_KEY environment variable"
            )
        if key not in by_key:
            raise UsageError(f"unknown config key {raw_key!r}")
        field, coerce = by_key[key]
        merged[field] = coerce(value)
    for field, value in flag_values.items():
        if value is not None:
            _, coerce = SETTINGS[field]
            merged[field] = coerce(value)
    return replace(RunConfig(), **merged)


def _collect_flag_values(args: argparse.Namespace) -> dict:
    return {
        field: getattr(args, field)
        for field in SETTINGS
        if hasattr(args, field)
    }


def resolve_run_config(args: argparse.Namespace) -> RunConfig:
    file_values = load_config_file(args.config) if getattr(args, "config", None) else None
    return merge_run_config(file_values, _collect_flag_values(args))


def _add_setting_flags(parser: argparse.ArgumentParser, names: Sequence[str]) -> None:
    for field in names:
        key, _ = SETTINGS[field]
        if field == "mock":
            parser.add_argument("--mock", action=argparse.BooleanOptionalAction, default=None,
                                help="use the deterministic offline transport")
        else:
            parser.add_argument(f"--{key}", dest=field, default=None)


_RETRIEVE_SETTINGS = ("top_n", "metric", "format")
_RERANK_SETTINGS = (
    "top_n", "prompt_file", "max_side", "endpoint", "model", "temperature",
    "timeout_s", "max_retries", "concurrency", "mode", "n_samples", "lambda_",
    "variance_mode", "cache_dir", "pair_workers", "mock", "mock_seed",
    "mock_noise", "mock_malform_rate", "mock_fence_rate", "mock_dref_m",
)
_EVAL_SETTINGS = ("radius_m", "k_values")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="placerank",
        description="Coarse place retrieval with model-guided re-ranking.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("retrieve", help="embeddings -> candidate shortlists")
    p.add_argument("--embeddings", required=True, help="database embeddings file")
    p.add_argument("--query-embeddings", required=True, help="query embeddings file")
    p.add_argument("--output", required=True, help="shortlists JSONL to write")
    p.add_argument("--config", default=None)
    _add_setting_flags(p, _RETRIEVE_SETTINGS)
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("rerank", help="shortlists -> re-ranked rankings")
    p.add_argument("--manifest", required=True, help="place manifest JSONL")
    p.add_argument("--shortlists", required=True, help="shortlists JSONL from retrieve")
    p.add_argument("--output", required=True, help="rankings JSONL to write")
    p.add_argument("--pair-scores", default=None, help="optional per-pair detail JSONL")
    p.add_argument("--config", default=None)
    _add_setting_flags(p, _RERANK_SETTINGS)
    p.set_defaults(func=cmd_rerank)

    p = sub.add_parser("eval", help="rankings -> Recall@K")
    p.add_argument("--ranking", required=True, help="rankings or shortlists JSONL")
    p.add_argument("--manifest", required=True)
    p.add_argument("--json", action="store_true", help="emit the report as JSON")
    p.add_argument("--config", default=None)
    _add_setting_flags(p, _EVAL_SETTINGS)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="coarse vs reranked side by side")
    p.add_argument("--coarse", required=True, help="shortlists JSONL")
    p.add_argument("--ranking", required=True, help="rankings JSONL")
    p.add_argument("--manifest", required=True)
    p.add_argument("--json", action="store_true")
    p.add_argument("--config", default=None)
    _add_setting_flags(p, _EVAL_SETTINGS)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("mock-check", help="verify the frozen calibration example")
    p.set_defaults(func=cmd_mock_check)

    return parser


def _resolved_format(rc: RunConfig, path: str) -> str:
    if rc.format != "auto":
        return rc.format
    return sniff_embeddings_format(path)


def cmd_retrieve(args: argparse.Namespace) -> int:
    rc = resolve_run_config(args)
    # Unit-normalizing is idempotent for the cosine contract but would distort
    # raw positional descriptors compared with l2.
    normalize = rc.metric == "cosine"
    db = load_embeddings(
        args.embeddings, format=_resolved_format(rc, args.embeddings), normalize=normalize
    )
    queries = load_embeddings(
        args.query_embeddings,
        format=_resolved_format(rc, args.query_embeddings),
        normalize=normalize,
    )
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        for qid in queries.ids:
            shortlist = retrieve_top_n(qid, queries.vector(qid), db, rc.top_n, metric=rc.metric)
            fh.write(json.dumps(shortlist.to_record()) + "\n")
    print(f"wrote {len(queries.ids)} shortlists (top {rc.top_n}, {rc.metric}) to {out}")
    return 0


def read_shortlists_jsonl(path: str | Path) -> list[CandidateList]:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"shortlists file not found: {path}")
    shortlists = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                shortlists.append(CandidateList.from_record(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                raise ParseError(f"bad shortlist record in {path}", line=lineno) from None
    return shortlists


def _build_gateway(rc: RunConfig):
    use_mock = rc.mock or rc.mode == "mock"
    if use_mock:
        return MockGateway(
            MockConfig(
                seed=rc.mock_seed,
                noise_scale=rc.mock_noise,
                malform_rate=rc.mock_malform_rate,
                fence_rate=rc.mock_fence_rate,
                d_ref_m=rc.mock_dref_m,
            ),
            max_concurrency=rc.concurrency,
        )
    if not rc.endpoint or not rc.model:
        raise UsageError(
            "rerank needs either --mock or both --endpoint and --model "
            "(the API key comes from MLLM_API_KEY)"
        )
    return HttpGateway(
        ModelConfig(
            endpoint_url=rc.endpoint,
            model_name=rc.model,
            temperature=rc.temperature,
            request_timeout_s=rc.timeout_s,
            max_retries=rc.max_retries,
            max_concurrency=rc.concurrency,
        )
    )


def cmd_rerank(args: argparse.Namespace) -> int:
    rc = resolve_run_config(args)
    if rc.mode not in ("uasc", "single", "mock"):
        raise UsageError(f"mode must be uasc, single, or mock, got {rc.mode!r}")
    records = {r.id: r for r in load_manifest(args.manifest)}
    shortlists = read_shortlists_jsonl(args.shortlists)
    gateway = _build_gateway(rc)
    pipe_cfg = pipeline.PipelineConfig(
        mode="single" if rc.mode == "single" else "uasc",
        top_n=rc.top_n,
        calibration=CalibrationConfig(
            lambda_=rc.lambda_, variance_mode=rc.variance_mode, n_samples=rc.n_samples
        ),
        template=load_template(rc.prompt_file) if rc.prompt_file else None,
        max_side=rc.max_side,
        pair_workers=rc.pair_workers,
    )
    cache = pipeline.PairCache(rc.cache_dir) if rc.cache_dir else None
    try:
        rankings, scores, telemetry = pipeline.rerank_dataset(
            gateway, shortlists, records, pipe_cfg, cache=cache
        )
    finally:
        close = getattr(gateway, "close", None)
        if close:
            close()
    pipeline.write_rankings_jsonl(args.output, rankings)
    if args.pair_scores:
        pipeline.write_pair_scores_jsonl(args.pair_scores, scores)
    t = telemetry.to_record()
    print(f"wrote {len(rankings)} rankings to {args.output}")
    print(
        f"pairs={t['num_pairs']} requests={t['num_requests']} "
        f"fallbacks={t['num_fallbacks']} failed_samples={t['num_failed_samples']} "
        f"cache_hits={t['cache_hits']} tokens={t['total_output_tokens']} "
        f"mean_latency_s={t['mean_latency_s']:.3f}"
    )
    return 0


def _load_orderings(path: str | Path) -> list[tuple[str, list[str]]]:
    """Accept either rankings or shortlists JSONL; both carry an ordered
    candidate list per query."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"ranking file not found: {path}")
    orderings = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                if "ranking" in rec:
                    ranking = pipeline.Ranking.from_record(rec)
                    orderings.append((ranking.query_id, ranking.ids()))
                else:
                    shortlist = CandidateList.from_record(rec)
                    orderings.append((shortlist.query_id, shortlist.ids()))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                raise ParseError(f"bad ranking record in {path}", line=lineno) from None
    return orderings


def _eval_config(rc: RunConfig) -> evaluation.EvalConfig:
    return evaluation.EvalConfig(radius_m=rc.radius_m, k_values=rc.k_values)


def cmd_eval(args: argparse.Namespace) -> int:
    rc = resolve_run_config(args)
    records = evaluation.records_by_id(load_manifest(args.manifest))
    report = evaluation.recall_at_k(_load_orderings(args.ranking), records, _eval_config(rc))
    if args.json:
        print(json.dumps(report.to_json_dict(), indent=2))
    else:
        print(evaluation.format_recall_table(report))
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    rc = resolve_run_config(args)
    records = evaluation.records_by_id(load_manifest(args.manifest))
    cfg = _eval_config(rc)
    coarse = evaluation.recall_at_k(_load_orderings(args.coarse), records, cfg)
    reranked = evaluation.recall_at_k(_load_orderings(args.ranking), records, cfg)
    cmp = evaluation.build_report(coarse, reranked)
    if args.json:
        print(json.dumps(cmp, indent=2))
    else:
        print(evaluation.format_comparison_table(cmp))
    return 0


def cmd_mock_check(args: argparse.Namespace) -> int:
    del args
    report = reference.run_reference_check()
    for line in report.lines():
        print(line)
    print("mock-check: PASS" if report.ok else "mock-check: FAIL")
    return 0 if report.ok else 1


def run_cli(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 2
    except PlacerankError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


def main() -> int:
    return run_cli(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
