"""Extraction and validation of the JSON verdict inside raw model text.

Models asked for "a single, raw JSON object" still wrap it in markdown
fences or surrounding prose often enough that a strict json.loads on the
whole reply is useless. Extraction prefers the first fenced code block,
then falls back to the first balanced top-level brace span.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import NoJsonFound

SCORE_KEY = "similarity_score"


@dataclass(frozen=True)
class ScoredResponse:
    """One validated model verdict for a query-candidate pair."""

    similarity_score: float
    justification: str = ""
    key_matching_objects: tuple[str, ...] = ()
    key_mismatched_objects: tuple[str, ...] = ()

    def to_json(self) -> str:
        return json.dumps(
            {
                SCORE_KEY: self.similarity_score,
                "justification": self.justification,
                "key_matching_objects": list(self.key_matching_objects),
                "key_mismatched_objects": list(self.key_mismatched_objects),
            }
        )


@dataclass(frozen=True)
class ParseOutcome:
    """Result of parsing one raw reply: a verdict, or a rejection reason."""

    raw_text: str
    response: ScoredResponse | None = None
    reason: str | None = None

    @property
    def valid(self) -> bool:
        return self.response is not None

    def to_record(self) -> dict:
        rec: dict = {
            "raw_output": self.raw_text,
            "status": "Success" if self.valid else self.reason,
            "parsed_score": self.response.similarity_score if self.valid else None,
        }
        if self.valid:
            rec["justification"] = self.response.justification
            rec["key_matching_objects"] = list(self.response.key_matching_objects)
            rec["key_mismatched_objects"] = list(self.response.key_mismatched_objects)
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "ParseOutcome":
        if rec.get("status") == "Success":
            resp = ScoredResponse(
                similarity_score=float(rec["parsed_score"]),
                justification=rec.get("justification", ""),
                key_matching_objects=tuple(rec.get("key_matching_objects", ())),
                key_mismatched_objects=tuple(rec.get("key_mismatched_objects", ())),
            )
            return cls(raw_text=rec.get("raw_output", ""), response=resp)
        return cls(raw_text=rec.get("raw_output", ""), reason=rec.get("status"))


def extract_json_block(raw: str) -> str:
    """Return the best JSON candidate substring of a raw reply.

    A closed markdown fence wins over bare braces because models that emit
    both tend to put the intended payload inside the fence. Raises
    NoJsonFound when neither form is present.
    """
    fenced = _first_fenced_block(raw)
    if fenced is not None:
        return fenced
    span = _first_balanced_object(raw)
    if span is not None:
        return span
    raise NoJsonFound("no fenced block or balanced object in text")


def _first_fenced_block(raw: str) -> str | None:
    start = raw.find("```")
    if start < 0:
        return None
    body_start = start + 3
    end = raw.find("```", body_start)
    if end < 0:
        return None  # unclosed fence, fall back to brace scan
    newline = raw.find("\n", body_start)
    if newline != -1 and newline < end:
        tag = raw[body_start:newline].strip()
        if tag == "" or tag.isalnum():
            body_start = newline + 1
    return raw[body_start:end].strip()


def _first_balanced_object(raw: str) -> str | None:
    # Scan is string-aware so braces inside quoted values do not unbalance it.
    n = len(raw)
    start = raw.find("{")
    while start != -1:
        depth = 0
        in_string = False
        escaped = False
        for j in range(start, n):
            ch = raw[j]
            if in_string:
                if escaped:
                    escaped = False
                elif ch == "\\":
                    escaped = True
                elif ch == '"':
                    in_string = False
            elif ch == '"':
                in_string = True
            elif ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    return raw[start:j + 1]
        start = raw.find("{", start + 1)
    return None


def parse_scored_response(raw: str) -> ParseOutcome:
    """Parse a raw reply into a verdict, or explain why it was rejected.

    Valid means: a JSON object was extracted, it carries a numeric
    "similarity_score" inside [0, 1]. The other schema fields are filled
    with defaults when absent; unknown extra fields are ignored. Scores
    outside [0, 1] are rejected rather than clamped so they cannot
    contaminate downstream statistics.
    """
    try:
        block = extract_json_block(raw)
    except NoJsonFound:
        return ParseOutcome(raw_text=raw, reason="NoJsonFound")
    try:
        obj = json.loads(block)
    except (json.JSONDecodeError, RecursionError):
        return ParseOutcome(raw_text=raw, reason="MalformedJson")
    if not isinstance(obj, dict):
        return ParseOutcome(raw_text=raw, reason="MalformedJson")
    if SCORE_KEY not in obj:
        return ParseOutcome(raw_text=raw, reason="MissingScore")
    score = obj[SCORE_KEY]
    if isinstance(score, bool) or not isinstance(score, (int, float)):
        return ParseOutcome(raw_text=raw, reason="NonNumericScore")
    score = float(score)
    if not (0.0 <= score <= 1.0):
        return ParseOutcome(raw_text=raw, reason=f"OutOfRangeScore({score})")
    justification = obj.get("justification", "")
    if not isinstance(justification, str):
        justification = ""
    return ParseOutcome(
        raw_text=raw,
        response=ScoredResponse(
            similarity_score=score,
            justification=justification,
            key_matching_objects=_string_list(obj.get("key_matching_objects")),
            key_mismatched_objects=_string_list(obj.get("key_mismatched_objects")),
        ),
    )


def _string_list(value) -> tuple[str, ...]:
    if isinstance(value, str):
        return (value,)
    if not isinstance(value, list):
        return ()
    return tuple(str(v) for v in value)
