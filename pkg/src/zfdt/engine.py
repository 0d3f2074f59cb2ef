"""Build-time pipeline orchestration and the persistent workspace.

A workspace is a directory of stage artifacts plus a manifest with digests:
inspectable, diffable, and sufficient at desk scale. Builds are atomic (a
staging directory is swapped in at the end) and idempotent (matching corpus
and config digests make the build a no-op).
"""

from __future__ import annotations

import hashlib
import json
import shutil
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import corpus as corpus_mod
from . import dataset as dataset_mod
from . import kg as kg_mod
from .clients import RemoteConfig, RemoteEncoder, RemoteGenerator, StubEncoder, StubGenerator
from .clients.base import Encoder, Generator
from .community import (
    Community,
    assign_categories,
    category_communities,
    hierarchical_leiden,
    summarize,
)
from .config import Config
from .errors import PipelineError, WorkspaceError, ZfdtError
from .index import CommunityIndex, build_index, load_index, save_index
from .leiden import LeidenConfig
from .retrieval import BeamConfig, QueryResult, run_query
from .taxonomy import Category

MANIFEST_NAME = "manifest.json"
ARTIFACTS = (
    "corpus.jsonl",
    "chunks.jsonl",
    "extractions.jsonl",
    "graph/nodes.csv",
    "graph/edges.csv",
    "communities.json",
    "index.bin",
)


def make_clients(config: Config) -> tuple[Encoder, Generator]:
    if config.stub or not config.endpoint:
        return (
            StubEncoder(dimension=config.encoder_dimension, seed=config.seed),
            StubGenerator(seed=config.seed),
        )
    remote = RemoteConfig(
        base_url=config.endpoint, model=config.model, api_key_env=config.api_key_env
    )
    return (
        RemoteEncoder(remote, dimension=config.encoder_dimension),
        RemoteGenerator(remote),
    )


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _config_digest(config: Config) -> str:
    return hashlib.sha256(
        json.dumps(config.to_dict(), sort_keys=True).encode("utf-8")
    ).hexdigest()


@dataclass
class EngineState:
    workspace: Path
    config: Config
    corpus: corpus_mod.Corpus
    graph: kg_mod.KnowledgeGraph
    leaves: list[Community]
    category_communities: list[Community]
    index: CommunityIndex
    encoder: Encoder
    generator: Generator
    manifest: dict = field(default_factory=dict)

    @property
    def deterministic_trace(self) -> bool:
        return isinstance(self.generator, StubGenerator)

    def workspace_digest(self) -> str:
        return _sha256_file(self.workspace / MANIFEST_NAME)

    def beam(self, top_k: int | None = None, beam_width: int | None = None) -> BeamConfig:
        k = top_k or self.config.top_k
        width = max(beam_width or self.config.beam_width, k)
        return BeamConfig(k=k, beam_width=width)

    def query(
        self, symptoms: str, top_k: int | None = None, beam_width: int | None = None
    ) -> QueryResult:
        return run_query(
            symptoms,
            graph=self.graph,
            communities=self.category_communities,
            index=self.index,
            encoder=self.encoder,
            generator=self.generator,
            beam=self.beam(top_k, beam_width),
            deterministic_trace=self.deterministic_trace,
        )


def _leiden_config(config: Config) -> LeidenConfig:
    return LeidenConfig(
        resolution=config.resolution,
        max_iterations=config.max_iterations,
        min_gain_epsilon=config.min_gain_epsilon,
        rng_seed=config.seed,
    )


def _write_stage_files(
    staging: Path,
    corpus_bytes: bytes,
    chunks: list[corpus_mod.Chunk],
    extractions: list[tuple[int, kg_mod.Extraction]],
    graph: kg_mod.KnowledgeGraph,
    leaves: list[Community],
    categories: list[Community],
    index: CommunityIndex,
) -> None:
    (staging / "corpus.jsonl").write_bytes(corpus_bytes)
    with open(staging / "chunks.jsonl", "w", encoding="utf-8") as f:
        for chunk in chunks:
            f.write(
                json.dumps(
                    {
                        "chunk_id": chunk.chunk_id,
                        "source_record_id": chunk.source_record_id,
                        "token_span": list(chunk.token_span),
                        "token_count": chunk.token_count,
                        "text": chunk.text,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
    with open(staging / "extractions.jsonl", "w", encoding="utf-8") as f:
        for chunk_id, (entities, relations) in extractions:
            f.write(
                json.dumps(
                    {
                        "chunk_id": chunk_id,
                        "entities": [
                            {"name": e.name, "category": e.category.value} for e in entities
                        ],
                        "relations": [
                            {"src": r.src, "dst": r.dst, "label": r.label} for r in relations
                        ],
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
    kg_mod.export_graph(graph, staging / "graph")

    def community_json(c: Community) -> dict:
        return {
            "community_id": c.community_id,
            "entity_ids": sorted(c.entity_ids),
            "category": c.category.value,
            "description": c.description,
            "level": c.level,
            "parent_id": c.parent_id,
            "is_leaf": c.is_leaf,
        }

    (staging / "communities.json").write_text(
        json.dumps(
            {"leaves": [community_json(c) for c in leaves],
             "categories": [community_json(c) for c in categories]},
            ensure_ascii=False,
        ),
        encoding="utf-8",
    )
    save_index(index, staging / "index.bin")


def build_workspace(
    corpus_path: str | Path, workspace: str | Path, config: Config | None = None
) -> EngineState:
    """Run the whole build pipeline and persist every stage artifact.

    Rebuilding over an up-to-date workspace (same corpus and config digests)
    is a no-op that just loads it back.
    """
    config = config or Config()
    corpus_path = Path(corpus_path)
    workspace = Path(workspace)
    corpus = corpus_mod.ingest(corpus_path)  # validates before any mutation

    manifest_path = workspace / MANIFEST_NAME
    if manifest_path.exists():
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        if (
            manifest.get("corpus_sha256") == corpus.provenance
            and manifest.get("config_sha256") == _config_digest(config)
        ):
            return load_workspace(workspace, config)

    encoder, generator = make_clients(config)
    stage = "chunk"
    try:
        chunks = corpus_mod.chunk(corpus, config.chunk_size)
        stage = "extract"
        extractions = [(c.chunk_id, kg_mod.extract(c, generator)) for c in chunks]
        stage = "graph"
        graph = kg_mod.build_graph(extractions)
        stage = "communities"
        hierarchy = hierarchical_leiden(graph, _leiden_config(config))
        leaves = assign_categories(hierarchy.leaves(), graph)
        graph.refresh_relation_types()
        categories = category_communities(leaves, next_id=len(hierarchy.communities))
        stage = "summaries"
        for community in leaves + categories:
            if community.entity_ids:
                community.description = summarize(community, graph, generator)
        stage = "index"
        index = build_index([c for c in leaves + categories if c.entity_ids], encoder)
    except ZfdtError as exc:
        raise PipelineError(stage, str(exc), cause=exc)

    staging = Path(tempfile.mkdtemp(prefix=".building-", dir=workspace.parent or Path(".")))
    try:
        (staging / "graph").mkdir(parents=True, exist_ok=True)
        _write_stage_files(
            staging, corpus_path.read_bytes(), chunks, extractions, graph, leaves,
            categories, index,
        )
        manifest = {
            "version": 1,
            "created_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            "corpus_sha256": corpus.provenance,
            "config_sha256": _config_digest(config),
            "config": config.to_dict(),
            "artifacts": {name: _sha256_file(staging / name) for name in ARTIFACTS},
        }
        (staging / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2), encoding="utf-8")
        if workspace.exists():
            shutil.rmtree(workspace)
        staging.rename(workspace)
    except Exception:
        shutil.rmtree(staging, ignore_errors=True)
        raise
    return load_workspace(workspace, config)


def _communities_from_json(items: list[dict]) -> list[Community]:
    return [
        Community(
            community_id=item["community_id"],
            entity_ids=set(item["entity_ids"]),
            category=Category(item["category"]),
            description=item["description"],
            level=item["level"],
            parent_id=item.get("parent_id"),
            is_leaf=item.get("is_leaf", False),
        )
        for item in items
    ]


def load_workspace(workspace: str | Path, config: Config | None = None) -> EngineState:
    """Load a built workspace, verifying every artifact digest against the manifest."""
    workspace = Path(workspace)
    manifest_path = workspace / MANIFEST_NAME
    if not manifest_path.exists():
        raise WorkspaceError(f"no valid workspace at {workspace} (missing manifest)")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    for name, digest in manifest.get("artifacts", {}).items():
        path = workspace / name
        if not path.exists() or _sha256_file(path) != digest:
            raise WorkspaceError(f"workspace artifact {name} is missing or stale")
    stored_config = Config(**manifest["config"])
    config = config or stored_config
    corpus = corpus_mod.ingest(workspace / "corpus.jsonl")
    graph = kg_mod.import_graph(workspace / "graph")
    communities_doc = json.loads((workspace / "communities.json").read_text(encoding="utf-8"))
    leaves = _communities_from_json(communities_doc["leaves"])
    categories = _communities_from_json(communities_doc["categories"])
    index = load_index(workspace / "index.bin")
    encoder, generator = make_clients(config)
    return EngineState(
        workspace=workspace,
        config=config,
        corpus=corpus,
        graph=graph,
        leaves=leaves,
        category_communities=categories,
        index=index,
        encoder=encoder,
        generator=generator,
        manifest=manifest,
    )


def build_dataset(
    state: EngineState, kind: str, limit: int
) -> list[dataset_mod.SftRecord | dataset_mod.DpoRecord | dataset_mod.ConflictRecord]:
    """Instruction records built through the retrieval pipeline.

    One record per corpus entry (cycling when ``limit`` exceeds the corpus):
    x is the record's symptom description, c the retrieved global answer, and
    y the rendered seven-element document. Conflict-tagged entries become
    conflict records with the matching warning appended.
    """
    records = []
    n = len(state.corpus.records)
    for i in range(limit):
        source = state.corpus.records[i % n]
        x = source.symptoms_population or source.disease
        result = state.query(x)
        c = result.global_answers[0].text
        y = corpus_mod.render_record(source)
        if kind == "dpo":
            records.append(dataset_mod.build_dpo_record(x, c, state.generator))
        elif source.conflict_tag is not None:
            records.append(dataset_mod.build_conflict_record(x, c, y, source.conflict_tag))
        else:
            records.append(dataset_mod.build_sft_record(x, c, y))
    return records
