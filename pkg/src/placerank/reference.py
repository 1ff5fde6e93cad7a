"""Frozen end-to-end calibration example used as a regression oracle.

Five raw replies for one pair — a mix of fenced and bare JSON — with the
exact statistics the calibration stage must produce from them. The values
are pinned to full double precision; any drift in parsing, mean/std, or
the calibration formula shows up here before anywhere else.
"""

from __future__ import annotations

from dataclasses import dataclass

from .codec import parse_scored_response
from .uasc import CalibrationConfig, UascResult, run_uasc

REFERENCE_RAW_OUTPUTS: tuple[str, ...] = (
    '```json\n{\n  "similarity_score": 0.9,\n  "justification": "Both images show a busy '
    'urban street with similar storefronts, signage, and general layout, indicating they '
    'are likely taken from the same area.",\n  "key_matching_objects": ["street lamps", '
    '"signage boards", "pedestrian crossing lines"],\n  "key_mismatched_objects": []\n}\n```',
    '{\n  "similarity_score": 0.8,\n  "justification": "Both images show a busy urban '
    'street with similar storefronts, signage, and general layout, indicating they are '
    'likely taken at the same location.",\n  "key_matching_objects": ["streetlights", '
    '"signage", "buildings"],\n  "key_mismatched_objects": []\n}',
    '{\n  "similarity_score": 0.9,\n  "justification": "Both images show a busy urban '
    'street with similar storefronts, signage, and general layout, indicating they are '
    'likely taken from the same area.",\n  "key_matching_objects": ["street lamps", '
    '"signage boards", "pedestrian crossing lines"],\n  "key_mismatched_objects": []\n}',
    '```json\n{\n  "similarity_score": 0.95,\n  "justification": "Both images show the '
    "same urban street scene with recognizable shops and signage, including '3COINS' and "
    "'Claire's', indicating they are likely taken at the same location.\",\n  "
    '"key_matching_objects": [\n    "\'3COINS\' store sign",\n    "\'Claire\'s\' store '
    'sign",\n    "Street lamp design",\n    "Pedestrian crossing lines"\n  ],\n  '
    '"key_mismatched_objects": []\n}\n```',
    '{\n  "similarity_score": 0.85,\n  "justification": "Both images show a busy urban '
    "street with similar storefronts, signage, and general layout. Key matching objects "
    "include the '3COINS' store sign, 'KEN' sign, and various shop facades with "
    'consistent branding.",\n  "key_matching_objects": ["3COINS", "KEN", "Shop '
    'Facades"],\n  "key_mismatched_objects": []\n}',
)

EXPECTED_SCORES: tuple[float, ...] = (0.9, 0.8, 0.9, 0.95, 0.85)
EXPECTED_MEAN = 0.8799999999999999
EXPECTED_STD = 0.050990195135927834
EXPECTED_LAMBDA = 0.5
EXPECTED_NUM_VALID = 5
EXPECTED_FINAL = 0.854504902432036

REFERENCE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class ReferenceCheck:
    name: str
    expected: float
    actual: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return abs(self.actual - self.expected) <= self.tolerance


@dataclass(frozen=True)
class ReferenceReport:
    checks: tuple[ReferenceCheck, ...]
    result: UascResult

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def lines(self) -> list[str]:
        out = []
        for c in self.checks:
            mark = "ok " if c.ok else "FAIL"
            out.append(
                f"[{mark}] {c.name}: expected {c.expected!r}, got {c.actual!r} "
                f"(tol {c.tolerance:g})"
            )
        return out


def reference_result(cfg: CalibrationConfig | None = None) -> UascResult:
    """Parse and calibrate the frozen replies with the default settings."""
    cfg = cfg or CalibrationConfig()
    outcomes = [parse_scored_response(raw) for raw in REFERENCE_RAW_OUTPUTS]
    return run_uasc(outcomes, cfg)


def run_reference_check() -> ReferenceReport:
    result = reference_result()
    tol = REFERENCE_TOLERANCE
    checks = [
        ReferenceCheck("mean_score", EXPECTED_MEAN, result.mean, tol),
        ReferenceCheck("std_dev", EXPECTED_STD, result.std, tol),
        ReferenceCheck("lambda", EXPECTED_LAMBDA, result.lambda_, tol),
        ReferenceCheck("num_valid_samples", float(EXPECTED_NUM_VALID), float(result.num_valid_samples), 0.0),
        ReferenceCheck("similarity_score", EXPECTED_FINAL, result.final, tol),
    ]
    for detail, expected in zip(result.per_sample, EXPECTED_SCORES):
        checks.append(
            ReferenceCheck(
                f"sample_{detail.sample_index}_parsed_score",
                expected,
                detail.parsed_score if detail.parsed_score is not None else float("nan"),
                tol,
            )
        )
    return ReferenceReport(checks=tuple(checks), result=result)
