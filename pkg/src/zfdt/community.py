"""Hierarchical community detection, category assignment, and summaries."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .clients import prompts
from .clients.base import Generator
from .errors import EmptyGraph, InvalidInput, SummarizeError, ZfdtError
from .kg import KnowledgeGraph
from .leiden import LeidenConfig, leiden_assignment
from .taxonomy import CATEGORY_ORDER, Category, category_rank


@dataclass
class Community:
    community_id: int
    entity_ids: set[int]
    category: Category = Category.UNKNOWN
    description: str = ""
    level: int = 0
    parent_id: int | None = None
    is_leaf: bool = False


@dataclass
class CommunityHierarchy:
    communities: list[Community] = field(default_factory=list)

    def leaves(self) -> list[Community]:
        return [c for c in self.communities if c.is_leaf]

    def by_id(self, community_id: int) -> Community:
        return self.communities[community_id]


def hierarchical_leiden(graph: KnowledgeGraph, config: LeidenConfig | None = None) -> CommunityHierarchy:
    """Recursively split communities until no further split is possible.

    Recursion on a community stops when it has at most 2 entities or when the
    partitioner leaves it whole; leaves always partition the entity set.
    """
    config = config or LeidenConfig()
    if not graph.entities:
        raise EmptyGraph("cannot build a hierarchy over an empty graph")
    hierarchy = CommunityHierarchy()

    def induced_adjacency(members: set[int]) -> dict[int, dict[int, float]]:
        return {
            v: {u: w for u, w in graph.adjacency.get(v, {}).items() if u in members}
            for v in members
        }

    def add_community(members: set[int], level: int, parent: int | None) -> Community:
        community = Community(
            community_id=len(hierarchy.communities),
            entity_ids=set(members),
            level=level,
            parent_id=parent,
        )
        hierarchy.communities.append(community)
        return community

    def split(community: Community) -> None:
        members = community.entity_ids
        if len(members) <= 2:
            community.is_leaf = True
            return
        assignment = leiden_assignment(sorted(members), induced_adjacency(members), config)
        n_parts = len(set(assignment.values()))
        if n_parts <= 1:
            community.is_leaf = True
            return
        groups: dict[int, set[int]] = {}
        for node, comm in assignment.items():
            groups.setdefault(comm, set()).add(node)
        for comm in sorted(groups):
            child = add_community(groups[comm], community.level + 1, community.community_id)
            split(child)

    root_members = {e.entity_id for e in graph.entities}
    root_assignment = leiden_assignment(
        sorted(root_members), induced_adjacency(root_members), config
    )
    top_groups: dict[int, set[int]] = {}
    for node, comm in root_assignment.items():
        top_groups.setdefault(comm, set()).add(node)
    for comm in sorted(top_groups):
        top = add_community(top_groups[comm], 0, None)
        split(top)
    return hierarchy


def assign_categories(leaves: list[Community], graph: KnowledgeGraph) -> list[Community]:
    """Label each leaf with the majority category of its member entities.

    Ties break by the canonical category order; entities still categorized as
    unknown inherit their leaf's category afterwards.
    """
    entity_by_id = {e.entity_id: e for e in graph.entities}
    for leaf in leaves:
        counts: Counter = Counter()
        for entity_id in leaf.entity_ids:
            category = entity_by_id[entity_id].category
            if category is not Category.UNKNOWN:
                counts[category] += 1
        if counts:
            best = max(counts.values())
            leaf.category = min(
                (c for c, n in counts.items() if n == best), key=category_rank
            )
        else:
            leaf.category = CATEGORY_ORDER[0]
        for entity_id in leaf.entity_ids:
            if entity_by_id[entity_id].category is Category.UNKNOWN:
                entity_by_id[entity_id].category = leaf.category
    return leaves


def category_communities(
    leaves: list[Community], next_id: int
) -> list[Community]:
    """Merged view: exactly seven category-level communities (possibly empty).

    Ids are assigned in canonical category order starting at ``next_id`` so
    that sorting by id reproduces the category order downstream.
    """
    merged = []
    for offset, category in enumerate(CATEGORY_ORDER):
        members: set[int] = set()
        for leaf in leaves:
            if leaf.category is category:
                members |= leaf.entity_ids
        merged.append(
            Community(
                community_id=next_id + offset,
                entity_ids=members,
                category=category,
                level=-1,
            )
        )
    return merged


def summarize(community: Community, graph: KnowledgeGraph, generator: Generator) -> str:
    """Generate the community description naming its member entities."""
    if not community.entity_ids:
        raise InvalidInput("cannot summarize an empty community")
    entity_by_id = {e.entity_id: e for e in graph.entities}
    names = sorted(entity_by_id[i].name for i in community.entity_ids)
    prompt = prompts.summarize_prompt(community.category.value, names)
    try:
        description = generator.generate(prompt)
    except ZfdtError as exc:
        raise SummarizeError(community.community_id, str(exc))
    if not description.strip():
        raise SummarizeError(community.community_id, "empty description")
    return description
