"""Shared fixtures: temp manifests, tiny images, and a local HTTP stub."""

from __future__ import annotations

import json
from pathlib import Path

import pytest


def write_jsonl(path: Path, records: list[dict]) -> Path:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    return path


@pytest.fixture
def make_png(tmp_path):
    """Factory for small solid-color PNGs on disk."""
    from PIL import Image

    def _make(name: str = "img.png", size=(8, 8), color=(120, 40, 200)) -> Path:
        path = tmp_path / name
        path.parent.mkdir(parents=True, exist_ok=True)
        Image.new("RGB", size, color).save(path)
        return path

    return _make


@pytest.fixture
def make_manifest(tmp_path):
    """Factory writing a manifest JSONL from (id, image, frame, x, y) dicts."""

    def _make(records: list[dict], name: str = "manifest.jsonl") -> Path:
        return write_jsonl(tmp_path / name, records)

    return _make


def manifest_record(id_: str, x: float, y: float, frame: str = "utm", image: str | None = None) -> dict:
    return {"id": id_, "image": image or f"{id_}.png", "frame": frame, "x": x, "y": y}
