import random

import pytest

from zfdt.clients import StubGenerator
from zfdt.community import (
    Community,
    assign_categories,
    category_communities,
    hierarchical_leiden,
    summarize,
)
from zfdt.errors import InvalidInput, SummarizeError, ZfdtError
from zfdt.leiden import LeidenConfig
from zfdt.taxonomy import CATEGORY_ORDER, Category

from helpers import make_graph, random_connected_graph


def _clique(offset: int, size: int, weight: float = 1.0):
    return [
        (offset + i, offset + j, weight)
        for i in range(size)
        for j in range(i + 1, size)
    ]


class TestHierarchy:
    def test_single_clique_is_one_leaf(self):
        graph = make_graph(5, _clique(0, 5))
        hierarchy = hierarchical_leiden(graph)
        leaves = hierarchy.leaves()
        assert len(leaves) == 1
        assert leaves[0].entity_ids == {0, 1, 2, 3, 4}
        assert leaves[0].is_leaf

    def test_two_bridged_cliques_split_once(self):
        edges = _clique(0, 4) + _clique(4, 4) + [(3, 4, 1.0)]
        graph = make_graph(8, edges)
        hierarchy = hierarchical_leiden(graph)
        leaves = hierarchy.leaves()
        assert {frozenset(l.entity_ids) for l in leaves} == {
            frozenset({0, 1, 2, 3}),
            frozenset({4, 5, 6, 7}),
        }
        assert all(l.level == 0 for l in leaves)

    def test_leaves_partition_entities_over_random_seeds(self):
        for seed in range(100):
            rng = random.Random(seed)
            graph = random_connected_graph(rng, rng.randint(2, 12))
            hierarchy = hierarchical_leiden(graph, LeidenConfig(rng_seed=seed))
            leaves = hierarchy.leaves()
            assert all(leaf.entity_ids for leaf in leaves)  # never empty
            seen: set[int] = set()
            for leaf in leaves:
                assert not (seen & leaf.entity_ids)
                seen |= leaf.entity_ids
            assert seen == {e.entity_id for e in graph.entities}


class TestAssignCategories:
    def _graph_with_categories(self, categories):
        graph = make_graph(len(categories), [])
        for entity, category in zip(graph.entities, categories):
            entity.category = category
        return graph

    def test_majority_rule(self):
        graph = self._graph_with_categories(
            [
                Category.HERBAL_INGREDIENTS,
                Category.HERBAL_INGREDIENTS,
                Category.HERBAL_INGREDIENTS,
                Category.UNKNOWN,
            ]
        )
        leaves = [Community(0, {0, 1, 2, 3})]
        assign_categories(leaves, graph)
        assert leaves[0].category is Category.HERBAL_INGREDIENTS
        assert graph.entities[3].category is Category.HERBAL_INGREDIENTS  # backfilled

    def test_tie_breaks_by_taxonomy_order(self):
        graph = self._graph_with_categories(
            [Category.RECOMMENDED_FORMULAS, Category.DISEASES]
        )
        leaves = [Community(0, {0, 1})]
        assign_categories(leaves, graph)
        assert leaves[0].category is Category.DISEASES

    def test_all_unknown_defaults_to_first_category(self):
        graph = self._graph_with_categories([Category.UNKNOWN, Category.UNKNOWN])
        leaves = [Community(0, {0, 1})]
        assign_categories(leaves, graph)
        assert leaves[0].category is CATEGORY_ORDER[0]

    def test_partition_preserved_in_category_view(self):
        graph = self._graph_with_categories(
            [Category.DISEASES, Category.HERBAL_INGREDIENTS, Category.HERBAL_INGREDIENTS]
        )
        leaves = [Community(0, {0}), Community(1, {1, 2})]
        assign_categories(leaves, graph)
        merged = category_communities(leaves, next_id=2)
        assert len(merged) == 7
        assert [c.category for c in merged] == list(CATEGORY_ORDER)
        assert [c.community_id for c in merged] == list(range(2, 9))
        union = set()
        for community in merged:
            union |= community.entity_ids
        assert union == {0, 1, 2}


class TestSummarize:
    def test_stub_template_names_members(self):
        graph = make_graph(3, [(0, 1, 1.0)])
        for e, name in zip(graph.entities, ["ginseng", "poria", "jujube"]):
            e.name = name
        community = Community(0, {0, 1, 2}, category=Category.HERBAL_INGREDIENTS)
        text = summarize(community, graph, StubGenerator())
        assert text.startswith("[herbal_ingredients] members: ")
        for name in ("ginseng", "poria", "jujube"):
            assert name in text

    def test_herbal_description_lists_composition_roles(self):
        graph = make_graph(2, [(0, 1, 1.0)])
        community = Community(0, {0, 1}, category=Category.HERBAL_INGREDIENTS)
        text = summarize(community, graph, StubGenerator())
        for role in ("sovereign", "minister", "assistant", "courier"):
            assert role in text

    def test_singleton_contains_its_entity(self):
        graph = make_graph(1, [])
        graph.entities[0].name = "forsythia fruit"
        community = Community(0, {0}, category=Category.HERBAL_INGREDIENTS)
        assert "forsythia fruit" in summarize(community, graph, StubGenerator())

    def test_empty_community_rejected(self):
        graph = make_graph(1, [])
        with pytest.raises(InvalidInput):
            summarize(Community(0, set()), graph, StubGenerator())

    def test_generator_failure_becomes_summarize_error(self):
        class Failing:
            name = "fail"
            max_output_tokens = 1
            temperature = 0.0

            def generate(self, prompt, params=None):
                raise ZfdtError("backend down")

            def generate_scored_pair(self, prompt):
                raise NotImplementedError

        graph = make_graph(1, [])
        with pytest.raises(SummarizeError):
            summarize(Community(7, {0}), graph, Failing())


def test_summary_mentions_at_least_five_names_of_a_large_community():
    graph = make_graph(10, [(i, i + 1, 1.0) for i in range(9)])
    for i, e in enumerate(graph.entities):
        e.name = f"entity number {i}"
    community = Community(0, set(range(10)), category=Category.SYMPTOMS_POPULATION)
    text = summarize(community, graph, StubGenerator())
    mentioned = sum(1 for e in graph.entities if e.name in text)
    assert mentioned >= min(5, len(community.entity_ids))
