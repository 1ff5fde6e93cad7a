"""Manifests, descriptor tables, and exact top-N coarse retrieval.

Descriptors loaded from disk are L2-normalized, so cosine similarity on a
loaded table reduces to a dot product. Retrieval is exact brute force:
database sizes in the intended regime (up to ~1e5 vectors) keep a full
similarity scan affordable and easy to verify against an oracle.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import (
    CorruptHeader,
    DimMismatch,
    DuplicateId,
    EmptyInput,
    MissingFile,
    NonPositiveP,
    ParseError,
    UnknownFrame,
    ZeroVector,
)

FRAMES = ("utm", "wgs84")
METRICS = ("cosine", "l2")

BINARY_MAGIC = b"VPRD"

# Unit-norm tolerance for normalized descriptor tables.
NORM_TOL = 1e-6


@dataclass(frozen=True)
class PlaceRecord:
    """One geotagged image: stable id, image location on disk, geolocation.

    For the "utm" frame x is easting and y is northing, both in meters.
    For "wgs84" x is longitude and y is latitude, both in degrees.
    """

    id: str
    image_path: Path
    frame: str
    x: float
    y: float


@dataclass(frozen=True)
class Candidate:
    candidate_id: str
    coarse_score: float
    coarse_rank: int  # 1-based, contiguous


@dataclass(frozen=True)
class CandidateList:
    query_id: str
    items: tuple[Candidate, ...]

    def ids(self) -> list[str]:
        return [c.candidate_id for c in self.items]

    def to_record(self) -> dict:
        return {
            "query_id": self.query_id,
            "candidates": [
                {
                    "candidate_id": c.candidate_id,
                    "coarse_score": c.coarse_score,
                    "coarse_rank": c.coarse_rank,
                }
                for c in self.items
            ],
        }

    @classmethod
    def from_record(cls, rec: dict) -> "CandidateList":
        return cls(
            query_id=rec["query_id"],
            items=tuple(
                Candidate(
                    candidate_id=c["candidate_id"],
                    coarse_score=float(c["coarse_score"]),
                    coarse_rank=int(c["coarse_rank"]),
                )
                for c in rec["candidates"]
            ),
        )


def load_manifest(path: str | Path) -> list[PlaceRecord]:
    """Read a manifest of one JSON place record per line.

    The whole file is rejected on the first violation: malformed JSON,
    missing or mistyped fields, an unknown frame, out-of-range wgs84
    coordinates, or a repeated id.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"manifest not found: {path}")
    records: list[PlaceRecord] = []
    seen: set[str] = set()
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(f"invalid JSON: {e.msg}", line=line_no) from None
            if not isinstance(obj, dict):
                raise ParseError("record is not a JSON object", line=line_no)
            try:
                id_ = obj["id"]
                image = obj["image"]
                frame = obj["frame"]
                x = obj["x"]
                y = obj["y"]
            except KeyError as e:
                raise ParseError(f"missing field {e.args[0]!r}", line=line_no) from None
            if not isinstance(id_, str) or not id_:
                raise ParseError("'id' must be a nonempty string", line=line_no)
            if not isinstance(image, str):
                raise ParseError("'image' must be a string path", line=line_no)
            if not isinstance(frame, str) or frame not in FRAMES:
                raise UnknownFrame(str(frame))
            if isinstance(x, bool) or isinstance(y, bool) or not isinstance(x, (int, float)) or not isinstance(y, (int, float)):
                raise ParseError("'x' and 'y' must be numbers", line=line_no)
            if frame == "wgs84" and not (-180.0 <= x <= 180.0 and -90.0 <= y <= 90.0):
                raise ParseError(f"wgs84 coordinates out of range: x={x}, y={y}", line=line_no)
            if id_ in seen:
                raise DuplicateId(id_)
            seen.add(id_)
            records.append(PlaceRecord(id=id_, image_path=Path(image), frame=frame, x=float(x), y=float(y)))
    return records


class DescriptorSet:
    """Immutable id -> descriptor table backed by a dense float64 matrix.

    Safe for concurrent reads once constructed.
    """

    def __init__(self, ids: Sequence[str], matrix: np.ndarray):
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise ValueError("descriptor matrix must be 2-d")
        if len(ids) != matrix.shape[0]:
            raise ValueError("id count does not match matrix rows")
        self._ids = tuple(ids)
        self._matrix = matrix
        self._row = {id_: i for i, id_ in enumerate(self._ids)}
        if len(self._row) != len(self._ids):
            raise DuplicateId(_first_duplicate(self._ids))

    @classmethod
    def from_entries(
        cls,
        entries: Iterable[tuple[str, Sequence[float]]],
        normalize: bool = True,
        dim: int | None = None,
    ) -> "DescriptorSet":
        ids: list[str] = []
        rows: list[np.ndarray] = []
        for id_, vec in entries:
            v = np.asarray(vec, dtype=np.float64)
            if v.ndim != 1:
                raise DimMismatch(f"vector for {id_!r} is not 1-d", id_=id_)
            if dim is None:
                dim = int(v.shape[0])
            elif v.shape[0] != dim:
                raise DimMismatch(
                    f"vector for {id_!r} has dim {v.shape[0]}, expected {dim}",
                    id_=id_, got=int(v.shape[0]), want=dim,
                )
            ids.append(id_)
            rows.append(v)
        if dim is None:
            raise CorruptHeader("no entries and no declared dimension")
        matrix = np.vstack(rows) if rows else np.zeros((0, dim))
        out = cls(ids, matrix)
        return out.normalized() if normalize else out

    def normalized(self) -> "DescriptorSet":
        norms = np.linalg.norm(self._matrix, axis=1)
        zero = np.flatnonzero(norms == 0.0)
        if zero.size:
            raise ZeroVector(f"cannot normalize zero vector for id {self._ids[zero[0]]!r}")
        return DescriptorSet(self._ids, self._matrix / norms[:, None])

    @property
    def dim(self) -> int:
        return int(self._matrix.shape[1])

    @property
    def ids(self) -> tuple[str, ...]:
        return self._ids

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    def vector(self, id_: str) -> np.ndarray:
        return self._matrix[self._row[id_]]

    def __contains__(self, id_: str) -> bool:
        return id_ in self._row

    def __len__(self) -> int:
        return len(self._ids)

    def items(self) -> Iterator[tuple[str, np.ndarray]]:
        for i, id_ in enumerate(self._ids):
            yield id_, self._matrix[i]


def _first_duplicate(ids: Sequence[str]) -> str:
    seen: set[str] = set()
    for id_ in ids:
        if id_ in seen:
            return id_
        seen.add(id_)
    return ""


def load_embeddings(path: str | Path, format: str = "jsonl", normalize: bool = True) -> DescriptorSet:
    """Load a descriptor table from a jsonl or binary embeddings file.

    The first jsonl record declares the dimension; the binary header does.
    Vectors are L2-normalized unless `normalize` is disabled.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"embeddings file not found: {path}")
    if format == "jsonl":
        entries = list(_iter_jsonl_entries(path))
        if not entries:
            raise CorruptHeader(f"empty jsonl embeddings file, no dimension declared: {path}")
        return DescriptorSet.from_entries(entries, normalize=normalize)
    if format == "binary":
        ids, matrix, dim = _read_binary(path)
        out = DescriptorSet(ids, matrix if len(ids) else np.zeros((0, dim)))
        return out.normalized() if normalize and len(out) else out
    raise ValueError(f"unknown embeddings format {format!r}")


def sniff_embeddings_format(path: str | Path) -> str:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"embeddings file not found: {path}")
    with path.open("rb") as fh:
        head = fh.read(4)
    return "binary" if head == BINARY_MAGIC else "jsonl"


def _iter_jsonl_entries(path: Path) -> Iterator[tuple[str, list[float]]]:
    seen: set[str] = set()
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(f"invalid JSON: {e.msg}", line=line_no) from None
            if not isinstance(obj, dict) or "id" not in obj or "vector" not in obj:
                raise ParseError("expected an object with 'id' and 'vector'", line=line_no)
            id_ = obj["id"]
            vec = obj["vector"]
            if not isinstance(id_, str) or not id_:
                raise ParseError("'id' must be a nonempty string", line=line_no)
            if not isinstance(vec, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in vec):
                raise ParseError("'vector' must be a list of numbers", line=line_no)
            if id_ in seen:
                raise DuplicateId(id_)
            seen.add(id_)
            yield id_, [float(v) for v in vec]


def _read_binary(path: Path) -> tuple[list[str], np.ndarray, int]:
    data = path.read_bytes()
    if len(data) < 12 or data[:4] != BINARY_MAGIC:
        raise CorruptHeader(f"bad magic bytes in {path}")
    dim, count = struct.unpack_from("<II", data, 4)
    if dim == 0:
        raise CorruptHeader(f"descriptor dimension 0 in {path}")
    offset = 12
    ids: list[str] = []
    rows = np.zeros((count, dim))
    seen: set[str] = set()
    for i in range(count):
        if offset + 2 > len(data):
            raise CorruptHeader(f"truncated record header at byte {offset} in {path}")
        (id_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        if offset + id_len + 4 * dim > len(data):
            raise CorruptHeader(f"truncated record at byte {offset} in {path}")
        id_ = data[offset:offset + id_len].decode("utf-8")
        offset += id_len
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=offset)
        offset += 4 * dim
        if id_ in seen:
            raise DuplicateId(id_)
        seen.add(id_)
        ids.append(id_)
        rows[i] = vec.astype(np.float64)
    return ids, rows, int(dim)


def write_embeddings_jsonl(path: str | Path, entries: Iterable[tuple[str, Sequence[float]]]) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for id_, vec in entries:
            fh.write(json.dumps({"id": id_, "vector": [float(v) for v in vec]}) + "\n")


def write_embeddings_binary(path: str | Path, entries: Iterable[tuple[str, Sequence[float]]], dim: int) -> None:
    """Write the compact format: magic, LE u32 dim and count, then per record
    a u16 id byte-length, the UTF-8 id, and dim little-endian f32 values."""
    path = Path(path)
    rows = [(id_, np.asarray(vec, dtype="<f4")) for id_, vec in entries]
    for id_, vec in rows:
        if vec.shape != (dim,):
            raise DimMismatch(f"vector for {id_!r} has dim {vec.shape[0]}, expected {dim}",
                              id_=id_, got=int(vec.shape[0]), want=dim)
    with path.open("wb") as fh:
        fh.write(BINARY_MAGIC)
        fh.write(struct.pack("<II", dim, len(rows)))
        for id_, vec in rows:
            raw = id_.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(vec.tobytes())


def gem_pool(features: np.ndarray | Sequence[Sequence[float]], p: float = 3.0) -> np.ndarray:
    """Generalized-mean pool an n x d feature matrix down to one d-vector.

    Per column this is (mean of x_i^p)^(1/p); p=1 is average pooling and
    large p approaches max pooling. Negative inputs are clamped to 0 first,
    since fractional powers of negatives are undefined and the pooling is
    meant for post-activation feature maps.
    """
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim != 2:
        raise ValueError("features must be an n x d matrix")
    if feats.shape[0] == 0:
        raise EmptyInput("gem_pool needs at least one feature row")
    if not p > 0:
        raise NonPositiveP(f"gem power must be > 0, got {p}")
    clamped = np.maximum(feats, 0.0)
    return np.power(np.mean(np.power(clamped, p), axis=0), 1.0 / p)


def similarity(a: Sequence[float], b: Sequence[float], metric: str = "cosine") -> float:
    """Similarity between two vectors, higher meaning more similar.

    cosine returns a value in [-1, 1]; l2 returns the negated Euclidean
    distance so both metrics sort the same way.
    """
    va = np.asarray(a, dtype=np.float64)
    vb = np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape or va.ndim != 1:
        raise DimMismatch(f"vector dims differ: {va.shape} vs {vb.shape}")
    if metric == "cosine":
        na = float(np.linalg.norm(va))
        nb = float(np.linalg.norm(vb))
        if na == 0.0 or nb == 0.0:
            raise ZeroVector("cosine similarity is undefined for a zero vector")
        return float(np.clip(float(va @ vb) / (na * nb), -1.0, 1.0))
    if metric == "l2":
        return -float(np.linalg.norm(va - vb))
    raise ValueError(f"unknown metric {metric!r}")


def retrieve_top_n(
    query_id: str,
    query: Sequence[float],
    db: DescriptorSet,
    n: int,
    metric: str = "cosine",
) -> CandidateList:
    """Exact top-n retrieval: score every entry, sort descending, take n.

    Ties are broken by ascending candidate id so output is deterministic
    across runs and platforms. If the database is smaller than n, all
    entries are returned.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    q = np.asarray(query, dtype=np.float64)
    if q.ndim != 1 or q.shape[0] != db.dim:
        raise DimMismatch(f"query dim {q.shape} does not match db dim {db.dim}")
    if len(db) == 0:
        return CandidateList(query_id=query_id, items=())
    m = db.matrix
    if metric == "cosine":
        qn = float(np.linalg.norm(q))
        if qn == 0.0:
            raise ZeroVector("cosine similarity is undefined for a zero query")
        norms = np.linalg.norm(m, axis=1)
        zero = np.flatnonzero(norms == 0.0)
        if zero.size:
            raise ZeroVector(f"cosine similarity is undefined for zero vector {db.ids[zero[0]]!r}")
    # Score with the same per-pair function callers use directly: a matrix
    # product rounds differently per row (BLAS blocking), which would break
    # bit-for-bit reproducibility of tie handling.
    sims = [similarity(q, m[i], metric=metric) for i in range(len(db))]
    order = sorted(range(len(db)), key=lambda i: (-sims[i], db.ids[i]))
    items = tuple(
        Candidate(candidate_id=db.ids[i], coarse_score=sims[i], coarse_rank=rank)
        for rank, i in enumerate(order[:n], start=1)
    )
    return CandidateList(query_id=query_id, items=items)
