"""JSON extraction and verdict parsing from raw model text."""

from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from placerank.codec import (
    ParseOutcome,
    ScoredResponse,
    extract_json_block,
    parse_scored_response,
)
from placerank.errors import NoJsonFound
from placerank.reference import EXPECTED_SCORES, REFERENCE_RAW_OUTPUTS


def _verdict(score, **extra) -> str:
    body = {"similarity_score": score, "justification": "j", **extra}
    return json.dumps(body)


# ---------------------------------------------------------------- extract

def test_extract_prefers_fenced_block():
    raw = 'noise {"similarity_score": 0.1}\n```json\n{"similarity_score": 0.2}\n```\ntail'
    block = extract_json_block(raw)
    assert json.loads(block)["similarity_score"] == 0.2


def test_extract_fence_without_language_tag():
    raw = '```\n{"similarity_score": 0.4}\n```'
    assert json.loads(extract_json_block(raw))["similarity_score"] == 0.4


def test_extract_unclosed_fence_falls_back_to_braces():
    raw = 'intro ```json\n{"similarity_score": 0.3}'
    assert json.loads(extract_json_block(raw))["similarity_score"] == 0.3


def test_extract_bare_object_with_prose():
    raw = 'The verdict is {"similarity_score": 0.7, "justification": "same corner"} overall.'
    assert json.loads(extract_json_block(raw))["similarity_score"] == 0.7


def test_extract_braces_inside_strings():
    raw = '{"justification": "shape like } or {", "similarity_score": 0.5}'
    obj = json.loads(extract_json_block(raw))
    assert obj["similarity_score"] == 0.5


def test_extract_escaped_quotes_inside_strings():
    raw = '{"justification": "he said \\"verdict}\\" loudly", "similarity_score": 1.0}'
    obj = json.loads(extract_json_block(raw))
    assert obj["similarity_score"] == 1.0


def test_extract_first_of_multiple_objects():
    raw = '{"similarity_score": 0.1} and later {"similarity_score": 0.9}'
    assert json.loads(extract_json_block(raw))["similarity_score"] == 0.1


def test_extract_no_json_raises():
    with pytest.raises(NoJsonFound):
        extract_json_block("no structured content here")
    with pytest.raises(NoJsonFound):
        extract_json_block("")
    with pytest.raises(NoJsonFound):
        extract_json_block("unbalanced { opening only")


# ------------------------------------------------------------------ parse

def test_parse_valid_minimal():
    out = parse_scored_response(_verdict(0.85))
    assert out.valid and out.reason is None
    assert out.response.similarity_score == 0.85
    assert out.response.justification == "j"


def test_parse_reference_outputs_exact_scores():
    scores = []
    for raw in REFERENCE_RAW_OUTPUTS:
        out = parse_scored_response(raw)
        assert out.valid, out.reason
        scores.append(out.response.similarity_score)
    assert tuple(scores) == EXPECTED_SCORES == (0.9, 0.8, 0.9, 0.95, 0.85)


def test_parse_boundary_scores_accepted():
    assert parse_scored_response(_verdict(0.0)).response.similarity_score == 0.0
    assert parse_scored_response(_verdict(1.0)).response.similarity_score == 1.0
    assert parse_scored_response(_verdict(1)).response.similarity_score == 1.0  # int ok


def test_parse_no_json():
    out = parse_scored_response("nothing structured")
    assert not out.valid and out.reason == "NoJsonFound"
    assert out.raw_text == "nothing structured"


def test_parse_malformed_json():
    out = parse_scored_response('{"similarity_score": 0.5,}')
    assert out.reason == "MalformedJson"


def test_parse_non_object_json():
    out = parse_scored_response('```json\n[0.5]\n```')
    assert out.reason in ("MalformedJson", "NoJsonFound")


def test_parse_missing_score():
    out = parse_scored_response('{"justification": "looks alike"}')
    assert out.reason == "MissingScore"


def test_parse_non_numeric_score():
    assert parse_scored_response(_verdict("high")).reason == "NonNumericScore"
    assert parse_scored_response(_verdict(True)).reason == "NonNumericScore"
    assert parse_scored_response(_verdict(None)).reason == "NonNumericScore"


def test_parse_out_of_range_rejected_not_clamped():
    out = parse_scored_response(_verdict(1.5))
    assert not out.valid
    assert out.reason.startswith("OutOfRangeScore")
    assert "1.5" in out.reason
    assert parse_scored_response(_verdict(-0.1)).reason.startswith("OutOfRangeScore")


def test_parse_nan_score_rejected():
    out = parse_scored_response('{"similarity_score": NaN}')
    assert not out.valid


def test_parse_extra_keys_ignored():
    out = parse_scored_response(_verdict(0.5, confidence="high", extra=[1, 2]))
    assert out.valid and out.response.similarity_score == 0.5


def test_parse_object_lists_coerced():
    out = parse_scored_response(
        _verdict(0.6, key_matching_objects=["lamp", 3], key_mismatched_objects="sign")
    )
    assert out.valid
    assert out.response.key_matching_objects == ("lamp", "3")
    assert out.response.key_mismatched_objects == ("sign",)


def test_outcome_record_roundtrip():
    for raw in (_verdict(0.5), "garbage", _verdict(2.0)):
        out = parse_scored_response(raw)
        back = ParseOutcome.from_record(out.to_record())
        assert back.valid == out.valid
        assert back.reason == out.reason
        if out.valid:
            assert back.response.similarity_score == out.response.similarity_score


def test_scored_response_to_json_parses_back():
    resp = ScoredResponse(
        similarity_score=0.9,
        justification="same block",
        key_matching_objects=("lamp",),
        key_mismatched_objects=(),
    )
    obj = json.loads(resp.to_json())
    assert obj["similarity_score"] == 0.9
    assert obj["key_matching_objects"] == ["lamp"]


# ------------------------------------------------------------------- fuzz

@given(st.text(max_size=400))
@settings(max_examples=300, deadline=None)
def test_parse_never_raises_on_arbitrary_text(raw):
    out = parse_scored_response(raw)
    assert isinstance(out, ParseOutcome)
    assert out.valid == (out.reason is None)
    if out.valid:
        assert 0.0 <= out.response.similarity_score <= 1.0


@given(
    st.text(alphabet='{}[]"\\:,.0-9absimilarity_score \n`', max_size=200),
)
@settings(max_examples=300, deadline=None)
def test_parse_never_raises_on_bracey_text(raw):
    out = parse_scored_response(raw)
    assert isinstance(out, ParseOutcome)
