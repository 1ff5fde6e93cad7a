"""Uncertainty-aware self-consistency scoring.

A pair is scored from N stochastic samples of the same prompt: take the
valid scores, average them, and subtract a penalty proportional to their
standard deviation before clamping to [0, 1]. The spread is a direct,
per-input estimate of aleatoric uncertainty, so a high mean only survives
calibration when the samples also agree with each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .codec import ParseOutcome
from .errors import ConfigError, EmptyScoreSet, NoValidSamples

POPULATION = "population"  # divide by N
SAMPLE = "sample"          # divide by N - 1
VARIANCE_MODES = (POPULATION, SAMPLE)

ScoreSet = Sequence[float]


@dataclass(frozen=True)
class CalibrationConfig:
    """Penalty strength, variance convention, and sample count.

    The population denominator is the default because it reproduces the
    reference record this implementation is validated against; the sample
    denominator is available for the N-1 convention.
    """

    lambda_: float = 0.5
    variance_mode: str = POPULATION
    n_samples: int = 5

    def __post_init__(self):
        if not math.isfinite(self.lambda_) or self.lambda_ < 0:
            raise ConfigError(f"lambda must be finite and >= 0, got {self.lambda_}")
        if self.variance_mode not in VARIANCE_MODES:
            raise ConfigError(f"variance_mode must be one of {VARIANCE_MODES}, got {self.variance_mode!r}")
        if self.n_samples < 1:
            raise ConfigError(f"n_samples must be >= 1, got {self.n_samples}")


@dataclass(frozen=True)
class SampleDetail:
    sample_index: int
    raw_output: str
    status: str  # "Success" or the parse rejection reason
    parsed_score: float | None

    def to_record(self) -> dict:
        return {
            "sample_index": self.sample_index,
            "raw_output": self.raw_output,
            "status": self.status,
            "parsed_score": self.parsed_score,
        }


@dataclass(frozen=True)
class UascResult:
    """Full calibration record for one pair."""

    mean: float
    std: float
    lambda_: float
    num_valid_samples: int
    calibrated: float
    final: float
    per_sample: tuple[SampleDetail, ...] = field(default_factory=tuple)

    def to_record(self) -> dict:
        return {
            "uncertainty_metrics": {
                "mean_score": self.mean,
                "std_dev": self.std,
                "lambda": self.lambda_,
                "num_valid_samples": self.num_valid_samples,
            },
            "similarity_score": self.final,
            "sc_details": [s.to_record() for s in self.per_sample],
        }

    @classmethod
    def from_record(cls, rec: dict) -> "UascResult":
        metrics = rec["uncertainty_metrics"]
        mean = float(metrics["mean_score"])
        std = float(metrics["std_dev"])
        lam = float(metrics["lambda"])
        final = float(rec["similarity_score"])
        details = tuple(
            SampleDetail(
                sample_index=int(d["sample_index"]),
                raw_output=d.get("raw_output", ""),
                status=d["status"],
                parsed_score=None if d.get("parsed_score") is None else float(d["parsed_score"]),
            )
            for d in rec.get("sc_details", [])
        )
        return cls(
            mean=mean,
            std=std,
            lambda_=lam,
            num_valid_samples=int(metrics["num_valid_samples"]),
            calibrated=mean - lam * std,
            final=final,
            per_sample=details,
        )


def collect_valid_scores(outcomes: Sequence[ParseOutcome]) -> list[float]:
    """Scores of the valid outcomes, in sample order; invalid ones are dropped."""
    return [o.response.similarity_score for o in outcomes if o.valid]


def mean_score(scores: ScoreSet) -> float:
    if len(scores) == 0:
        raise EmptyScoreSet("mean of an empty score set")
    # fsum: correctly rounded, so statistics are exactly permutation invariant
    return math.fsum(scores) / len(scores)


def std_score(scores: ScoreSet, mode: str = POPULATION) -> float:
    """Standard deviation of the score set under the chosen denominator.

    A single score carries no dispersion evidence, so |scores| = 1 yields 0
    in both modes rather than an undefined N-1 division.
    """
    if mode not in VARIANCE_MODES:
        raise ConfigError(f"variance_mode must be one of {VARIANCE_MODES}, got {mode!r}")
    n = len(scores)
    if n == 0:
        raise EmptyScoreSet("std of an empty score set")
    if n == 1:
        return 0.0
    mu = mean_score(scores)
    sq = math.fsum((s - mu) ** 2 for s in scores)
    denom = n if mode == POPULATION else n - 1
    return math.sqrt(sq / denom)


def calibrate_and_clamp(mu: float, sigma: float, lambda_: float) -> tuple[float, float]:
    """Apply the uncertainty penalty, then clamp to [0, 1].

    Returns (calibrated, final) where calibrated = mu - lambda * sigma.
    """
    calibrated = mu - lambda_ * sigma
    final = max(0.0, min(1.0, calibrated))
    return calibrated, final


def run_uasc(outcomes: Sequence[ParseOutcome], cfg: CalibrationConfig) -> UascResult:
    """Calibrate one sampling batch end to end.

    Expects exactly cfg.n_samples outcomes, ordered by sample index.
    Raises NoValidSamples when every sample was rejected; the caller owns
    the fallback policy for that case.
    """
    if len(outcomes) != cfg.n_samples:
        raise ConfigError(f"expected {cfg.n_samples} outcomes, got {len(outcomes)}")
    scores = collect_valid_scores(outcomes)
    if not scores:
        raise NoValidSamples(f"all {len(outcomes)} samples rejected")
    mu = mean_score(scores)
    sigma = std_score(scores, cfg.variance_mode)
    calibrated, final = calibrate_and_clamp(mu, sigma, cfg.lambda_)
    details = tuple(
        SampleDetail(
            sample_index=i,
            raw_output=o.raw_text,
            status="Success" if o.valid else (o.reason or "Unknown"),
            parsed_score=o.response.similarity_score if o.valid else None,
        )
        for i, o in enumerate(outcomes)
    )
    return UascResult(
        mean=mu,
        std=sigma,
        lambda_=cfg.lambda_,
        num_valid_samples=len(scores),
        calibrated=calibrated,
        final=final,
        per_sample=details,
    )
