#!/usr/bin/env python3
"""Generate a small self-contained demo dataset for the CLI walkthrough.

Each place gets a distinctively colored PNG; its descriptor is the GeM pool
of the image's own pixels, unit-normalized. Query images are re-shots of a
place with slightly shifted color and a few meters of positional offset, so
coarse cosine retrieval already works and the mock re-ranker (which scores
by ground-truth distance) has something to fix.

Example:
    python3 scripts/make_demo_data.py --output demo
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
from PIL import Image

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from placerank.retrieval import gem_pool, write_embeddings_binary, write_embeddings_jsonl


def parse_args(argv=None) -> argparse.Namespace:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--output", type=str, default="demo", help="output directory")
    ap.add_argument("--places", type=int, default=12)
    ap.add_argument("--queries", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--image-size", type=int, default=64)
    return ap.parse_args(argv)


def _render(rng: np.random.Generator, color: np.ndarray, size: int, path: Path) -> None:
    noise = rng.normal(0.0, 12.0, size=(size, size, 3))
    pixels = np.clip(color[None, None, :] + noise, 0, 255).astype(np.uint8)
    Image.fromarray(pixels, mode="RGB").save(path)


def _descriptor(path: Path) -> np.ndarray:
    pixels = np.asarray(Image.open(path).convert("RGB"), dtype=np.float64)
    vec = gem_pool(pixels.reshape(-1, 3), p=3.0)
    return vec / np.linalg.norm(vec)


def main(argv=None) -> int:
    args = parse_args(argv)
    out = Path(args.output)
    images = out / "images"
    images.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)

    manifest = []
    db_entries = []
    colors = rng.uniform(40.0, 215.0, size=(args.places, 3))
    for i in range(args.places):
        pid = f"place_{i:03d}"
        img = images / f"{pid}.png"
        _render(rng, colors[i], args.image_size, img)
        # 100 m grid, 4 places per row
        manifest.append(
            {
                "id": pid,
                "image": str(img),
                "frame": "utm",
                "x": 100.0 * (i % 4),
                "y": 100.0 * (i // 4),
            }
        )
        db_entries.append((pid, _descriptor(img).tolist()))

    query_entries = []
    for j in range(args.queries):
        target = int(rng.integers(0, args.places))
        qid = f"query_{j:03d}"
        img = images / f"{qid}.png"
        shifted = np.clip(colors[target] + rng.normal(0.0, 6.0, 3), 40.0, 215.0)
        _render(rng, shifted, args.image_size, img)
        offset = rng.uniform(-8.0, 8.0, 2)
        manifest.append(
            {
                "id": qid,
                "image": str(img),
                "frame": "utm",
                "x": manifest[target]["x"] + float(offset[0]),
                "y": manifest[target]["y"] + float(offset[1]),
            }
        )
        query_entries.append((qid, _descriptor(img).tolist()))

    manifest_path = out / "manifest.jsonl"
    with manifest_path.open("w", encoding="utf-8") as fh:
        for rec in manifest:
            fh.write(json.dumps(rec) + "\n")
    dim = len(db_entries[0][1])
    write_embeddings_jsonl(out / "db.jsonl", db_entries)
    write_embeddings_binary(out / "db.bin", db_entries, dim)
    write_embeddings_jsonl(out / "queries.jsonl", query_entries)

    print(f"wrote {args.places} places and {args.queries} queries under {out}/")
    print("try:")
    print(
        f"  placerank retrieve --embeddings {out}/db.bin "
        f"--query-embeddings {out}/queries.jsonl --output {out}/shortlists.jsonl --top-n 5"
    )
    print(
        f"  placerank rerank --manifest {manifest_path} --shortlists {out}/shortlists.jsonl "
        f"--output {out}/rankings.jsonl --mock --mock-seed 7"
    )
    print(f"  placerank eval --ranking {out}/rankings.jsonl --manifest {manifest_path} --k 1,5")
    print(
        f"  placerank report --coarse {out}/shortlists.jsonl --ranking {out}/rankings.jsonl "
        f"--manifest {manifest_path}"
    )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
