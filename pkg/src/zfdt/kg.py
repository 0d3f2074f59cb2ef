"""Knowledge graph construction from generator extractions.

Entities are merged by normalized name, relation weights count co-occurrence
multiplicity, and relations are typed intra- vs inter-category by whether the
endpoints share a category.
"""

from __future__ import annotations

import csv
import enum
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path

from .clients.base import Generator
from .clients import prompts
from .corpus import Chunk
from .errors import EmptyGraph, ExtractionError, InvalidInput, IoError, UnknownEntity
from .taxonomy import Category, category_rank, normalize_name


class RelationType(enum.Enum):
    INTRA_CATEGORY = "intra_category"
    INTER_CATEGORY = "inter_category"


@dataclass
class Entity:
    entity_id: int
    name: str
    category: Category
    source_chunks: set[int] = field(default_factory=set)


@dataclass(frozen=True)
class Relation:
    src: int
    dst: int
    relation_type: RelationType
    label: str
    weight: float


@dataclass
class KnowledgeGraph:
    entities: list[Entity]
    relations: list[Relation]
    adjacency: dict[int, dict[int, float]]
    total_edge_weight: float  # 2m: twice the sum of relation weights

    def entity_by_name(self, name: str) -> Entity | None:
        norm = normalize_name(name)
        return self._name_index().get(norm)

    def _name_index(self) -> dict[str, Entity]:
        if not hasattr(self, "_names"):
            self._names = {normalize_name(e.name): e for e in self.entities}
        return self._names

    def degree(self, entity_id: int) -> float:
        return sum(self.adjacency.get(entity_id, {}).values())

    def refresh_relation_types(self) -> None:
        """Recompute intra/inter typing after entity categories change."""
        cat = {e.entity_id: e.category for e in self.entities}
        self.relations = [
            Relation(
                r.src,
                r.dst,
                _relation_type(cat[r.src], cat[r.dst]),
                r.label,
                r.weight,
            )
            for r in self.relations
        ]


@dataclass(frozen=True)
class Subgraph:
    parent: KnowledgeGraph
    entity_ids: frozenset[int]
    relations: tuple[Relation, ...]


@dataclass(frozen=True)
class ExtractedEntity:
    name: str
    category: Category


@dataclass(frozen=True)
class ExtractedRelation:
    src: str
    dst: str
    label: str


Extraction = tuple[list[ExtractedEntity], list[ExtractedRelation]]


def extract(chunk: Chunk, generator: Generator) -> Extraction:
    """Ask the generator for entities/relations in one chunk and normalize them.

    The generator reply is parsed as JSON with up to 2 repair attempts; relation
    endpoints missing from the entity list are auto-added with category unknown.
    """
    if not chunk.text.strip():
        raise InvalidInput("chunk text is empty")
    prompt = prompts.extract_prompt(chunk.text)
    reply = generator.generate(prompt)
    parsed = None
    for attempt in range(3):  # initial parse + 2 repair attempts
        try:
            parsed = prompts.parse_json_reply(reply)
            break
        except (ValueError, TypeError):
            if attempt == 2:
                break
            reply = generator.generate(
                prompt + "\nYour previous reply was not valid JSON. Reply with JSON only."
            )
    if parsed is None:
        raise ExtractionError(chunk.chunk_id)

    entities: dict[str, ExtractedEntity] = {}
    for item in parsed.get("entities", []):
        name = normalize_name(str(item.get("name", "")))
        if not name:
            continue
        try:
            category = Category(item.get("category", "unknown"))
        except ValueError:
            category = Category.UNKNOWN
        if name not in entities:
            entities[name] = ExtractedEntity(name, category)

    relations: list[ExtractedRelation] = []
    for item in parsed.get("relations", []):
        src = normalize_name(str(item.get("src", "")))
        dst = normalize_name(str(item.get("dst", "")))
        label = str(item.get("label", "related_to")).strip() or "related_to"
        if not src or not dst or src == dst:
            continue
        for endpoint in (src, dst):
            if endpoint not in entities:
                entities[endpoint] = ExtractedEntity(endpoint, Category.UNKNOWN)
        relations.append(ExtractedRelation(src, dst, label))
    return list(entities.values()), relations


def _relation_type(a: Category, b: Category) -> RelationType:
    return RelationType.INTRA_CATEGORY if a == b else RelationType.INTER_CATEGORY


def build_graph(extractions: list[tuple[int, Extraction]] | list[Extraction]) -> KnowledgeGraph:
    """Merge per-chunk extractions into one graph.

    Accepts either ``(chunk_id, extraction)`` pairs or bare extractions (chunk
    ids then default to the list position). Entity ids are assigned in sorted
    name order, so the result is independent of extraction order.
    """
    tagged: list[tuple[int, Extraction]] = []
    for i, item in enumerate(extractions):
        if isinstance(item, tuple) and len(item) == 2 and isinstance(item[0], int):
            tagged.append(item)  # type: ignore[arg-type]
        else:
            tagged.append((i, item))  # type: ignore[arg-type]
    if all(not ents and not rels for _, (ents, rels) in tagged):
        raise EmptyGraph("all extractions are empty")

    votes: dict[str, Counter] = defaultdict(Counter)
    chunks_of: dict[str, set[int]] = defaultdict(set)
    for chunk_id, (ents, _) in tagged:
        for ent in ents:
            votes[ent.name][ent.category] += 1
            chunks_of[ent.name].add(chunk_id)

    def majority_category(counter: Counter) -> Category:
        known = {c: n for c, n in counter.items() if c is not Category.UNKNOWN}
        if not known:
            return Category.UNKNOWN
        best = max(known.values())
        return min((c for c, n in known.items() if n == best), key=category_rank)

    names = sorted(votes)
    entities = [
        Entity(i, name, majority_category(votes[name]), set(chunks_of[name]))
        for i, name in enumerate(names)
    ]
    ids = {name: i for i, name in enumerate(names)}

    weights: Counter = Counter()
    for _, (_, rels) in tagged:
        for rel in rels:
            weights[(ids[rel.src], ids[rel.dst], rel.label)] += 1

    adjacency: dict[int, dict[int, float]] = {e.entity_id: {} for e in entities}
    relations = []
    for (src, dst, label), count in sorted(weights.items()):
        relations.append(
            Relation(
                src,
                dst,
                _relation_type(entities[src].category, entities[dst].category),
                label,
                float(count),
            )
        )
        adjacency[src][dst] = adjacency[src].get(dst, 0.0) + count
        adjacency[dst][src] = adjacency[dst].get(src, 0.0) + count

    total = 2.0 * sum(r.weight for r in relations)
    return KnowledgeGraph(entities, relations, adjacency, total)


def subgraph_for_query(
    graph: KnowledgeGraph, query_entities: set[int], hops: int = 1
) -> Subgraph:
    """Entities within ``hops`` edges of the query set, with induced relations."""
    known = {e.entity_id for e in graph.entities}
    unknown = set(query_entities) - known
    if unknown:
        raise UnknownEntity(f"unknown entity ids: {sorted(unknown)}")
    frontier = set(query_entities)
    ball = set(query_entities)
    for _ in range(hops):
        frontier = {
            nbr for v in frontier for nbr in graph.adjacency.get(v, {})
        } - ball
        if not frontier:
            break
        ball |= frontier
    induced = tuple(r for r in graph.relations if r.src in ball and r.dst in ball)
    return Subgraph(parent=graph, entity_ids=frozenset(ball), relations=induced)


def export_graph(graph: KnowledgeGraph, directory: str | Path) -> None:
    """Write ``nodes.csv`` and ``edges.csv`` (RFC-4180, UTF-8) for bulk import."""
    if not graph.entities:
        raise EmptyGraph("cannot export an empty graph")
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        with open(directory / "nodes.csv", "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["id", "name", "category"])
            for e in graph.entities:
                writer.writerow([e.entity_id, e.name, e.category.value])
        with open(directory / "edges.csv", "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["src", "dst", "type", "label", "weight"])
            for r in graph.relations:
                writer.writerow([r.src, r.dst, r.relation_type.value, r.label, r.weight])
    except OSError as exc:
        raise IoError(f"graph export failed: {exc}")


def import_graph(directory: str | Path) -> KnowledgeGraph:
    """Rebuild a graph from the CSV export; inverse of :func:`export_graph`."""
    directory = Path(directory)
    try:
        with open(directory / "nodes.csv", newline="", encoding="utf-8") as f:
            rows = list(csv.DictReader(f))
            entities = [
                Entity(int(r["id"]), r["name"], Category(r["category"])) for r in rows
            ]
        with open(directory / "edges.csv", newline="", encoding="utf-8") as f:
            relations = [
                Relation(
                    int(r["src"]),
                    int(r["dst"]),
                    RelationType(r["type"]),
                    r["label"],
                    float(r["weight"]),
                )
                for r in csv.DictReader(f)
            ]
    except OSError as exc:
        raise IoError(f"graph import failed: {exc}")
    adjacency: dict[int, dict[int, float]] = {e.entity_id: {} for e in entities}
    for r in relations:
        adjacency[r.src][r.dst] = adjacency[r.src].get(r.dst, 0.0) + r.weight
        adjacency[r.dst][r.src] = adjacency[r.dst].get(r.src, 0.0) + r.weight
    total = 2.0 * sum(r.weight for r in relations)
    return KnowledgeGraph(entities, relations, adjacency, total)
