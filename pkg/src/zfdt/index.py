"""Vector library over community summaries with softmax-scored retrieval."""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .clients.base import Encoder
from .community import Community
from .errors import DimensionError, EmptyIndex, InvalidInput, IoError
from .taxonomy import Category

MAGIC = b"ZFDTIDX1"


@dataclass(frozen=True)
class IndexEntry:
    community_id: int
    category: Category
    summary_text: str
    vector: np.ndarray


@dataclass(frozen=True)
class CommunityIndex:
    entries: tuple[IndexEntry, ...]
    encoder_id: str
    dimension: int

    def entry_for(self, community_id: int) -> IndexEntry | None:
        for entry in self.entries:
            if entry.community_id == community_id:
                return entry
        return None


def build_index(communities: list[Community], encoder: Encoder) -> CommunityIndex:
    """Encode every community summary into the vector library."""
    entries = []
    for community in communities:
        if not community.description:
            raise InvalidInput(
                f"community {community.community_id} has no summary to index"
            )
        vector = np.asarray(encoder.encode(community.description), dtype=np.float64)
        if vector.shape != (encoder.dimension,):
            raise DimensionError(
                f"encoder returned dimension {vector.shape}, expected {encoder.dimension}"
            )
        entries.append(
            IndexEntry(community.community_id, community.category, community.description, vector)
        )
    return CommunityIndex(tuple(entries), encoder.name, encoder.dimension)


def score_candidates(
    index: CommunityIndex, query_vector: np.ndarray, candidates: list[np.ndarray]
) -> list[float]:
    """Softmax over dot products with the query; order preserved, sums to 1."""
    if not candidates:
        raise InvalidInput("no candidates to score")
    query = np.asarray(query_vector, dtype=np.float64)
    if query.shape != (index.dimension,):
        raise DimensionError("query vector dimension mismatch")
    mat = np.asarray(candidates, dtype=np.float64)
    if mat.shape[1] != index.dimension:
        raise DimensionError("candidate vector dimension mismatch")
    dots = mat @ query
    dots -= dots.max()  # shift invariance keeps the exponentials stable
    weights = np.exp(dots)
    return list(weights / weights.sum())


def top_k(index: CommunityIndex, query_vector: np.ndarray, k: int) -> list[tuple[int, float]]:
    """The k highest-scoring entries; ties break by ascending community id."""
    if k < 1:
        raise InvalidInput("k must be at least 1")
    if not index.entries:
        raise EmptyIndex("index has no entries")
    scores = score_candidates(index, query_vector, [e.vector for e in index.entries])
    ranked = sorted(
        zip((e.community_id for e in index.entries), scores),
        key=lambda pair: (-pair[1], pair[0]),
    )
    return ranked[:k]


def save_index(index: CommunityIndex, path: str | Path) -> None:
    """Snapshot: magic + JSON header + little-endian float32 vectors + summaries."""
    header = json.dumps(
        {
            "encoder_id": index.encoder_id,
            "dimension": index.dimension,
            "count": len(index.entries),
            "community_ids": [e.community_id for e in index.entries],
            "categories": [e.category.value for e in index.entries],
        }
    ).encode("utf-8")
    summaries = json.dumps([e.summary_text for e in index.entries]).encode("utf-8")
    try:
        with open(path, "wb") as f:
            f.write(MAGIC)
            f.write(struct.pack("<I", len(header)))
            f.write(header)
            for entry in index.entries:
                f.write(entry.vector.astype("<f4").tobytes())
            f.write(struct.pack("<I", len(summaries)))
            f.write(summaries)
    except OSError as exc:
        raise IoError(f"index snapshot failed: {exc}")


def load_index(path: str | Path) -> CommunityIndex:
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"index load failed: {exc}")
    if blob[: len(MAGIC)] != MAGIC:
        raise IoError("not an index snapshot (bad magic)")
    offset = len(MAGIC)
    (header_len,) = struct.unpack_from("<I", blob, offset)
    offset += 4
    header = json.loads(blob[offset : offset + header_len])
    offset += header_len
    dim = header["dimension"]
    vectors = []
    for _ in range(header["count"]):
        vec = np.frombuffer(blob, dtype="<f4", count=dim, offset=offset).astype(np.float64)
        vectors.append(vec)
        offset += 4 * dim
    (summaries_len,) = struct.unpack_from("<I", blob, offset)
    offset += 4
    summaries = json.loads(blob[offset : offset + summaries_len])
    entries = tuple(
        IndexEntry(cid, Category(cat), summary, vec)
        for cid, cat, summary, vec in zip(
            header["community_ids"], header["categories"], summaries, vectors
        )
    )
    return CommunityIndex(entries, header["encoder_id"], dim)
