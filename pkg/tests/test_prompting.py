"""Prompt template handling and message assembly with inline images."""

from __future__ import annotations

import base64

import pytest

from placerank.errors import ConfigError, MissingFile, UnsupportedImageType
from placerank.prompting import (
    DEFAULT_SYSTEM_TEXT,
    DEFAULT_USER_TEXT,
    TEMPLATE_SECTION_MARKER,
    ImagePart,
    PromptTemplate,
    TextPart,
    build_messages,
    encode_image_data_url,
    load_template,
)
from placerank.retrieval import PlaceRecord


def _record(id_, image_path, x=0.0, y=0.0):
    return PlaceRecord(id=id_, image_path=image_path, frame="utm", x=x, y=y)


# ---------------------------------------------------------------- template

def test_default_template_rubric_anchors():
    t = PromptTemplate.default()
    assert t.system_text == DEFAULT_SYSTEM_TEXT
    assert t.user_text == DEFAULT_USER_TEXT
    for anchor in ("1.0:", "0.8-0.99:", "0.5-0.79:", "0.2-0.49:", "0.0-0.19:"):
        assert anchor in t.user_text, anchor
    for key in (
        "similarity_score",
        "justification",
        "key_matching_objects",
        "key_mismatched_objects",
    ):
        assert key in t.user_text, key
    assert "ranking engine" in t.system_text


def test_template_rejects_empty_or_scoreless():
    with pytest.raises(ConfigError):
        PromptTemplate(system_text="", user_text="score similarity_score now")
    with pytest.raises(ConfigError):
        PromptTemplate(system_text="sys", user_text="no schema key here")


def test_fingerprint_stable_and_sensitive():
    a = PromptTemplate.default().fingerprint()
    assert a == PromptTemplate.default().fingerprint()
    assert len(a) == 16
    b = PromptTemplate(
        system_text=DEFAULT_SYSTEM_TEXT + " v2", user_text=DEFAULT_USER_TEXT
    ).fingerprint()
    assert a != b


def test_load_template_override(tmp_path):
    path = tmp_path / "prompt.txt"
    path.write_text(
        "You compare two photographs.\n"
        f"{TEMPLATE_SECTION_MARKER}\n"
        "Reply with JSON holding similarity_score only.\n"
    )
    t = load_template(path)
    assert t.system_text == "You compare two photographs."
    assert "similarity_score" in t.user_text
    assert t.fingerprint() != PromptTemplate.default().fingerprint()


def test_load_template_missing_marker(tmp_path):
    path = tmp_path / "prompt.txt"
    path.write_text("just one similarity_score section")
    with pytest.raises(ConfigError):
        load_template(path)


def test_load_template_missing_file(tmp_path):
    with pytest.raises(MissingFile):
        load_template(tmp_path / "absent.txt")


# ------------------------------------------------------------------ images

def test_encode_png(make_png):
    path = make_png("a.png")
    media, payload = encode_image_data_url(path)
    assert media == "image/png"
    assert base64.b64decode(payload) == path.read_bytes()


def test_encode_jpeg_media_types(make_png, tmp_path):
    from PIL import Image

    for ext, media in (("jpg", "image/jpeg"), ("jpeg", "image/jpeg"), ("webp", "image/webp")):
        p = tmp_path / f"x.{ext}"
        Image.new("RGB", (4, 4), (1, 2, 3)).save(p)
        got, _ = encode_image_data_url(p)
        assert got == media


def test_encode_unsupported_extension(tmp_path):
    p = tmp_path / "doc.tiff"
    p.write_bytes(b"data")
    with pytest.raises(UnsupportedImageType) as exc:
        encode_image_data_url(p)
    assert "tiff" in str(exc.value)


def test_encode_missing_file(tmp_path):
    with pytest.raises(MissingFile):
        encode_image_data_url(tmp_path / "gone.png")


def test_encode_downscale(tmp_path):
    from PIL import Image
    import io

    p = tmp_path / "big.png"
    Image.new("RGB", (64, 32), (9, 9, 9)).save(p)
    _, payload = encode_image_data_url(p, max_side=16)
    img = Image.open(io.BytesIO(base64.b64decode(payload)))
    assert max(img.size) == 16
    # already small enough: bytes pass through untouched
    small = tmp_path / "small.png"
    Image.new("RGB", (8, 8), (9, 9, 9)).save(small)
    _, payload = encode_image_data_url(small, max_side=16)
    assert base64.b64decode(payload) == small.read_bytes()


# ---------------------------------------------------------------- messages

def test_build_messages_structure(make_png):
    q = _record("q", make_png("q.png"))
    c = _record("c", make_png("c.png", color=(0, 255, 0)))
    system, user = build_messages(q, c)
    assert system.role == "system" and user.role == "user"
    assert isinstance(system.parts[0], TextPart)
    assert system.parts[0].text == DEFAULT_SYSTEM_TEXT
    kinds = [type(p) for p in user.parts]
    assert kinds == [TextPart, ImagePart, ImagePart]
    q_payload = base64.b64encode(q.image_path.read_bytes()).decode("ascii")
    assert user.parts[1].base64_data == q_payload  # query image first


def test_build_messages_names_missing_side(make_png, tmp_path):
    ok = _record("ok", make_png("ok.png"))
    gone = _record("gone", tmp_path / "gone.png")
    with pytest.raises(MissingFile) as exc:
        build_messages(gone, ok)
    assert "query" in str(exc.value)
    with pytest.raises(MissingFile) as exc:
        build_messages(ok, gone)
    assert "candidate" in str(exc.value)


def test_build_messages_custom_template(make_png):
    q = _record("q", make_png("q.png"))
    c = _record("c", make_png("c.png"))
    t = PromptTemplate(system_text="terse judge", user_text="emit similarity_score")
    system, user = build_messages(q, c, template=t)
    assert system.parts[0].text == "terse judge"
    assert user.parts[0].text == "emit similarity_score"
