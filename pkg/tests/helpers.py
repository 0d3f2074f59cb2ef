"""Shared test utilities: graph builders and independent brute-force oracles.

The oracles here deliberately re-derive quantities from first principles
(double loops over the adjacency, exhaustive partition enumeration) so they
stay independent of the code paths they check.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

from zfdt.kg import Entity, KnowledgeGraph, Relation, RelationType
from zfdt.taxonomy import Category


def make_graph(n: int, edges: list[tuple[int, int, float]]) -> KnowledgeGraph:
    """Knowledge graph over n nodes with the given undirected weighted edges."""
    entities = [Entity(i, f"node {i}", Category.UNKNOWN, {0}) for i in range(n)]
    relations = []
    adjacency: dict[int, dict[int, float]] = {i: {} for i in range(n)}
    for src, dst, weight in edges:
        relations.append(
            Relation(src, dst, RelationType.INTRA_CATEGORY, "edge", float(weight))
        )
        adjacency[src][dst] = adjacency[src].get(dst, 0.0) + weight
        adjacency[dst][src] = adjacency[dst].get(src, 0.0) + weight
    total = 2.0 * sum(w for _, _, w in edges)
    return KnowledgeGraph(entities, relations, adjacency, total)


def random_connected_graph(
    rng: random.Random, n: int, extra_edge_prob: float = 0.4, max_weight: int = 4
) -> KnowledgeGraph:
    """Random connected weighted graph: a random spanning tree plus extras."""
    edges: dict[tuple[int, int], float] = {}
    nodes = list(range(n))
    rng.shuffle(nodes)
    for i in range(1, n):
        a, b = nodes[rng.randrange(i)], nodes[i]
        edges[(min(a, b), max(a, b))] = float(rng.randint(1, max_weight))
    for a in range(n):
        for b in range(a + 1, n):
            if (a, b) not in edges and rng.random() < extra_edge_prob:
                edges[(a, b)] = float(rng.randint(1, max_weight))
    return make_graph(n, [(a, b, w) for (a, b), w in edges.items()])


def modularity_oracle(
    graph: KnowledgeGraph, assignment: dict[int, int], resolution: float = 1.0
) -> float:
    """Q = (1/2m) sum_ij (A_ij - g k_i k_j / 2m) [same community], from scratch."""
    nodes = [e.entity_id for e in graph.entities]
    adj = {v: dict(graph.adjacency.get(v, {})) for v in nodes}
    degree = {v: sum(adj[v].values()) for v in nodes}
    two_m = sum(degree.values())
    if two_m == 0:
        return 0.0
    q = 0.0
    for i in nodes:
        for j in nodes:
            if assignment[i] != assignment[j]:
                continue
            a_ij = adj[i].get(j, 0.0)
            q += a_ij - resolution * degree[i] * degree[j] / two_m
    return q / two_m


def iter_set_partitions(items: list[int]):
    """Every set partition of items, as a list of blocks."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for partition in iter_set_partitions(rest):
        for i in range(len(partition)):
            yield partition[:i] + [[first] + partition[i]] + partition[i + 1 :]
        yield [[first]] + partition


def best_partition_oracle(
    graph: KnowledgeGraph, resolution: float = 1.0
) -> tuple[float, dict[int, int]]:
    """Exhaustive maximum-modularity partition (feasible for <= 10 nodes)."""
    nodes = [e.entity_id for e in graph.entities]
    best_q, best_assignment = float("-inf"), {}
    for blocks in iter_set_partitions(nodes):
        assignment = {}
        for idx, block in enumerate(blocks):
            for node in block:
                assignment[node] = idx
        q = modularity_oracle(graph, assignment, resolution)
        if q > best_q:
            best_q, best_assignment = q, dict(assignment)
    return best_q, best_assignment


def bfs_ball_oracle(graph: KnowledgeGraph, sources: set[int], hops: int) -> set[int]:
    """Plain breadth-first h-hop ball, independent of the library traversal."""
    dist = {v: 0 for v in sources}
    queue = sorted(sources)
    while queue:
        v = queue.pop(0)
        if dist[v] == hops:
            continue
        for u in sorted(graph.adjacency.get(v, {})):
            if u not in dist:
                dist[u] = dist[v] + 1
                queue.append(u)
    return set(dist)


#: Category-marked name pools: the shared stem gives queries a strong
#: affinity signal for their category's community summary.
PLANT_POOLS = {
    "diseases": "morbus",
    "recommended_formulas": "remedi",
    "herbal_ingredients": "herba",
    "symptoms_population": "signum",
    "pulse_tongue": "pulsus",
    "contraindications": "cavete",
    "preparation_methods": "praxis",
}


def write_planted_corpus(path: Path, rng: random.Random, n_records: int = 18) -> None:
    """Synthetic corpus whose communities align with category name pools.

    Every section lists at least two pool members (the disease and formula
    fields carry a comma-separated pair), so intra-category co-occurrence
    edges keep each category's entities clustered together.
    """
    pools = {
        kind: [f"{stem}{i:02d}" for i in range(12)]
        for kind, stem in PLANT_POOLS.items()
    }
    lines = []
    for i in range(n_records):
        disease_trio = [pools["diseases"][(i + k) % 12] for k in (0, 5, 9)]
        formula_trio = [pools["recommended_formulas"][(i + k) % 12] for k in (0, 7, 3)]
        record = {
            "disease": ", ".join(disease_trio),
            "formula": ", ".join(formula_trio),
            "ingredients": [
                {"name": name, "role": role}
                for name, role in zip(
                    rng.sample(pools["herbal_ingredients"], 4),
                    ("sovereign", "minister", "assistant", "courier"),
                )
            ],
            "symptoms": ", ".join(rng.sample(pools["symptoms_population"], 3)),
            "pulse_tongue": ", ".join(rng.sample(pools["pulse_tongue"], 3)),
            "contraindications": ", ".join(rng.sample(pools["contraindications"], 3)),
            "preparation": ", ".join(rng.sample(pools["preparation_methods"], 3)),
        }
        lines.append(json.dumps(record))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
