"""Deterministic mock transport: seeding, noise, malformed replies."""

from __future__ import annotations

import json

import pytest

from placerank.codec import parse_scored_response
from placerank.errors import ConfigError
from placerank.gateway import PairContext
from placerank.mock import MockConfig, MockGateway, ReplayGateway, mock_verdict_text


def _ctx(d=10.0, qid="q1", cid="c1"):
    return PairContext(query_id=qid, candidate_id=cid, ground_truth_distance_m=d)


# ------------------------------------------------------------- determinism

def test_verdict_deterministic_per_key():
    cfg = MockConfig(seed=3, noise_scale=0.2, malform_rate=0.1, fence_rate=0.3)
    a = mock_verdict_text(_ctx(), 0, cfg)
    b = mock_verdict_text(_ctx(), 0, cfg)
    assert a == b


def test_verdict_varies_with_each_key_part():
    cfg = MockConfig(seed=3, noise_scale=0.2)
    base = mock_verdict_text(_ctx(d=100.0), 0, cfg)
    assert mock_verdict_text(_ctx(d=100.0), 1, cfg) != base          # sample index
    assert mock_verdict_text(_ctx(d=100.0, qid="q2"), 0, cfg) != base  # query id
    assert mock_verdict_text(_ctx(d=100.0, cid="c2"), 0, cfg) != base  # candidate id
    other = mock_verdict_text(_ctx(d=100.0), 0, MockConfig(seed=4, noise_scale=0.2))
    assert other != base                                              # seed


def test_score_distance_mapping_noise_free():
    cfg = MockConfig(seed=0, d_ref_m=200.0)
    for d, expected in ((0.0, 1.0), (50.0, 0.75), (100.0, 0.5), (200.0, 0.0), (400.0, 0.0)):
        out = parse_scored_response(mock_verdict_text(_ctx(d=d), 0, cfg))
        assert out.valid
        assert out.response.similarity_score == pytest.approx(expected, abs=1e-9)


def test_nan_distance_treated_as_zero():
    cfg = MockConfig(seed=0)
    ctx = PairContext(query_id="q", candidate_id="c")  # distance defaults to nan
    out = parse_scored_response(mock_verdict_text(ctx, 0, cfg))
    assert out.response.similarity_score == 1.0


def test_scores_stay_in_range_with_noise():
    cfg = MockConfig(seed=1, noise_scale=0.6)
    for i in range(50):
        out = parse_scored_response(mock_verdict_text(_ctx(d=100.0), i, cfg))
        assert out.valid
        assert 0.0 <= out.response.similarity_score <= 1.0


def test_noise_heteroscedastic_peak_at_midrange():
    cfg = MockConfig(seed=5, noise_scale=0.3)

    def spread(d):
        scores = [
            parse_scored_response(mock_verdict_text(_ctx(d=d), i, cfg)).response.similarity_score
            for i in range(40)
        ]
        mu = sum(scores) / len(scores)
        return (sum((s - mu) ** 2 for s in scores) / len(scores)) ** 0.5

    # base 0.5 (mid-range) must be noisier than base 1.0 (same place)
    assert spread(100.0) > spread(0.0)


def test_malformed_rate_one_yields_braceless_prose():
    cfg = MockConfig(seed=0, malform_rate=1.0)
    text = mock_verdict_text(_ctx(), 0, cfg)
    assert "{" not in text and "}" not in text
    assert "q1" in text and "c1" in text
    assert not parse_scored_response(text).valid


def test_fence_rate_one_wraps_fenced_json():
    cfg = MockConfig(seed=0, fence_rate=1.0)
    text = mock_verdict_text(_ctx(d=30.0), 0, cfg)
    assert text.startswith("```json\n") and text.endswith("\n```")
    assert parse_scored_response(text).valid


def test_fence_toggle_does_not_change_score():
    plain = MockConfig(seed=9, noise_scale=0.2, fence_rate=0.0)
    fenced = MockConfig(seed=9, noise_scale=0.2, fence_rate=1.0)
    for i in range(10):
        a = parse_scored_response(mock_verdict_text(_ctx(d=80.0), i, plain))
        b = parse_scored_response(mock_verdict_text(_ctx(d=80.0), i, fenced))
        assert a.response.similarity_score == b.response.similarity_score


def test_verdict_body_schema():
    obj = json.loads(mock_verdict_text(_ctx(d=10.0), 0, MockConfig(seed=0)))
    assert set(obj) == {
        "similarity_score",
        "justification",
        "key_matching_objects",
        "key_mismatched_objects",
    }
    assert isinstance(obj["key_matching_objects"], list)


def test_config_validation():
    with pytest.raises(ConfigError):
        MockConfig(malform_rate=1.5)
    with pytest.raises(ConfigError):
        MockConfig(fence_rate=-0.1)
    with pytest.raises(ConfigError):
        MockConfig(d_ref_m=0.0)


# ----------------------------------------------------------------- gateway

def test_gateway_counts_calls_and_is_deterministic():
    gw = MockGateway(MockConfig(seed=2, noise_scale=0.1))
    outs1 = gw.sample_n((), 5, context=_ctx(d=40.0))
    assert gw.calls == 5
    gw.reset_calls()
    outs2 = gw.sample_n((), 5, context=_ctx(d=40.0))
    assert gw.calls == 5
    assert [o.text for o in outs1] == [o.text for o in outs2]
    assert [o.latency_s for o in outs1] == [o.latency_s for o in outs2]
    assert [o.sample_index for o in outs1] == [0, 1, 2, 3, 4]


def test_gateway_latency_deterministic_and_in_range():
    gw = MockGateway(MockConfig(seed=2), latency_range=(0.5, 2.0))
    out = gw.complete(sample_index=1, context=_ctx())
    assert 0.5 <= out.latency_s <= 2.0
    again = gw.complete(sample_index=1, context=_ctx())
    assert out.latency_s == again.latency_s
    assert out.output_tokens == len(out.text) // 4


def test_gateway_requires_no_images():
    assert MockGateway.requires_images is False


def test_gateway_fingerprint_tracks_config():
    a = MockGateway(MockConfig(seed=1)).fingerprint
    b = MockGateway(MockConfig(seed=2)).fingerprint
    c = MockGateway(MockConfig(seed=1)).fingerprint
    assert a != b and a == c


def test_gateway_order_stable_under_delays():
    gw = MockGateway(
        MockConfig(seed=6, noise_scale=0.2),
        delay_fn=lambda i: [0.03, 0.0, 0.02, 0.01, 0.0][i % 5],
    )
    fast = MockGateway(MockConfig(seed=6, noise_scale=0.2))
    slow_texts = [o.text for o in gw.sample_n((), 5, context=_ctx(d=70.0))]
    fast_texts = [o.text for o in fast.sample_n((), 5, context=_ctx(d=70.0))]
    assert slow_texts == fast_texts


def test_replay_gateway_cycles_scripts():
    gw = ReplayGateway(["a", "b"], latency_s=1.5)
    outs = gw.sample_n((), 4)
    assert [o.text for o in outs] == ["a", "b", "a", "b"]
    assert all(o.latency_s == 1.5 for o in outs)
    assert gw.calls == 4
    with pytest.raises(ConfigError):
        ReplayGateway([])
