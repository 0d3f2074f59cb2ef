"""End-to-end query answering: expansion, per-community map, beam, reduce.

Local candidate answers are scored with one softmax across the pooled
candidate set of all communities, so scores are comparable across communities
(and the beam's joint ranking is invariant to that normalization choice).
A failed community is skipped rather than failing the query; the trace
records every community consulted and every client call made.
"""

from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass, field

from .clients import prompts
from .clients.base import Encoder, Generator
from .community import Community
from .errors import ClientError, InvalidInput, NoLocalAnswers, PipelineError, ZfdtError
from .index import CommunityIndex, score_candidates
from .kg import KnowledgeGraph, Subgraph, subgraph_for_query
from .taxonomy import Category, normalize_name

SAFETY_DISCLAIMER = prompts.SAFETY_DISCLAIMER


@dataclass(frozen=True)
class Query:
    original: str
    expanded: str
    entity_mentions: frozenset[int] = frozenset()
    expansion_warning: str | None = None

    def concatenated(self) -> str:
        return f"{self.original}\n{self.expanded}"


@dataclass(frozen=True)
class LocalAnswer:
    community_id: int
    category: Category
    text: str
    score: float


@dataclass(frozen=True)
class GlobalAnswer:
    text: str
    contributing: tuple[LocalAnswer, ...]
    subgraph_ref: Subgraph | None
    joint_score: float = 0.0


@dataclass(frozen=True)
class BeamConfig:
    k: int = 2
    beam_width: int = 3

    def __post_init__(self):
        if self.k < 1:
            raise InvalidInput("k must be at least 1")
        if self.beam_width < self.k:
            raise InvalidInput("beam_width must be at least k")


class Trace:
    """Ordered stage/client-call log attached to every answer."""

    def __init__(self, deterministic: bool = True):
        self.events: list[dict] = []
        self.deterministic = deterministic
        self._calls = itertools.count()
        self._t0 = time.perf_counter()

    def next_call_id(self) -> int:
        return next(self._calls)

    def record(self, stage: str, **extra) -> None:
        duration = 0.0 if self.deterministic else round(
            (time.perf_counter() - self._t0) * 1000.0, 3
        )
        self.events.append({"stage": stage, "duration_ms": duration, **extra})


def expand_query(
    x: str, generator: Generator, graph: KnowledgeGraph | None = None,
    trace: Trace | None = None,
) -> Query:
    """Augment the query text; falls back to the original on generator failure."""
    if not x.strip():
        raise InvalidInput("empty query")
    warning = None
    try:
        if trace:
            trace.record("expand", client_call_id=trace.next_call_id())
        expanded = generator.generate(prompts.expand_prompt(x)).strip() or x
    except ZfdtError as exc:
        expanded = x
        warning = f"query expansion failed: {exc}"
        if trace:
            trace.record("expand_fallback")
    mentions: set[int] = set()
    if graph is not None:
        norm = normalize_name(x)
        mentions = {
            e.entity_id for e in graph.entities if normalize_name(e.name) in norm
        }
    return Query(x, expanded, frozenset(mentions), warning)


def map_local(
    query: Query,
    community: Community,
    index: CommunityIndex,
    encoder: Encoder,
    generator: Generator,
    beam_width: int = 1,
    trace: Trace | None = None,
) -> list[LocalAnswer]:
    """Candidate local answers for one community, scored against E(x || x')."""
    entry = index.entry_for(community.community_id)
    if entry is None:
        raise InvalidInput(f"community {community.community_id} is not indexed")
    query_vector = encoder.encode(query.concatenated())
    texts = []
    for variant in range(1, beam_width + 1):
        prompt = prompts.map_prompt(
            community.category.value, entry.summary_text, query.original, query.expanded, variant
        )
        if trace:
            trace.record(
                "map", community_id=community.community_id, client_call_id=trace.next_call_id()
            )
        texts.append(generator.generate(prompt))
    vectors = [encoder.encode(t) for t in texts]
    scores = score_candidates(index, query_vector, vectors)
    return [
        LocalAnswer(community.community_id, community.category, text, score)
        for text, score in zip(texts, scores)
    ]


def reduce_global(
    query: Query,
    locals_: list[LocalAnswer],
    generator: Generator,
    graph: KnowledgeGraph | None = None,
    communities_by_id: dict[int, Community] | None = None,
    joint_score: float = 0.0,
    trace: Trace | None = None,
) -> GlobalAnswer:
    """Synthesize local answers into one global answer (ordered by community)."""
    if not locals_:
        raise NoLocalAnswers("reduce requires at least one local answer")
    ordered = tuple(sorted(locals_, key=lambda a: a.community_id))
    sections = [(a.category.value, a.text) for a in ordered]
    if trace:
        trace.record("reduce", client_call_id=trace.next_call_id())
    text = generator.generate(prompts.reduce_prompt(sections))
    subgraph = None
    if graph is not None and communities_by_id is not None:
        entity_ids: set[int] = set()
        for answer in ordered:
            community = communities_by_id.get(answer.community_id)
            if community:
                entity_ids |= community.entity_ids
        if entity_ids:
            subgraph = subgraph_for_query(graph, entity_ids, hops=1)
    return GlobalAnswer(text, ordered, subgraph, joint_score)


def _top_k_selections(
    candidate_scores: list[list[float]], k: int
) -> list[tuple[int, ...]]:
    """Indices of the k best one-per-group selections by summed log score.

    Lazy best-first search over the product space; each group's candidates are
    pre-sorted descending so neighbors of a selection only get worse.
    """
    order = [
        sorted(range(len(scores)), key=lambda i: (-scores[i], i))
        for scores in candidate_scores
    ]
    logs = [
        [math.log(max(scores[i], 1e-300)) for i in ranked]
        for scores, ranked in zip(candidate_scores, order)
    ]
    start = tuple(0 for _ in candidate_scores)
    heap = [(-sum(l[0] for l in logs), start)]
    seen = {start}
    out: list[tuple[int, ...]] = []
    while heap and len(out) < k:
        neg_score, sel = heapq.heappop(heap)
        out.append(tuple(order[g][i] for g, i in enumerate(sel)))
        for g in range(len(sel)):
            if sel[g] + 1 < len(logs[g]):
                nxt = sel[:g] + (sel[g] + 1,) + sel[g + 1 :]
                if nxt not in seen:
                    seen.add(nxt)
                    score = -neg_score - logs[g][sel[g]] + logs[g][sel[g] + 1]
                    heapq.heappush(heap, (-score, nxt))
    return out


def beam_retrieve(
    query: Query,
    index: CommunityIndex,
    communities: list[Community],
    config: BeamConfig,
    encoder: Encoder,
    generator: Generator,
    graph: KnowledgeGraph | None = None,
    trace: Trace | None = None,
) -> tuple[list[GlobalAnswer], list[LocalAnswer]]:
    """Top-k global answers plus the pooled top-k local answers.

    Keeps ``beam_width`` candidates per community, rescales all candidates with
    one softmax, then selects the k best one-candidate-per-community joint
    selections (joint score = sum of log local scores).
    """
    ordered = sorted(communities, key=lambda c: c.community_id)
    per_community: list[list[LocalAnswer]] = []
    last_client_error: ClientError | None = None
    for community in ordered:
        if not community.entity_ids:
            continue
        try:
            per_community.append(
                map_local(query, community, index, encoder, generator, config.beam_width, trace)
            )
        except ZfdtError as exc:
            if isinstance(exc, ClientError):
                last_client_error = exc
            if trace:
                trace.record("map_skipped", community_id=community.community_id, error=str(exc))
    if not per_community:
        if last_client_error is not None:
            raise last_client_error  # systemic backend failure, not a data gap
        raise NoLocalAnswers("every community failed during the map phase")

    # one softmax across the pooled candidate set
    pooled = [answer for group in per_community for answer in group]
    query_vector = encoder.encode(query.concatenated())
    vectors = [encoder.encode(a.text) for a in pooled]
    scores = score_candidates(index, query_vector, vectors)
    rescored = iter(
        LocalAnswer(a.community_id, a.category, a.text, s) for a, s in zip(pooled, scores)
    )
    per_community = [[next(rescored) for _ in group] for group in per_community]

    communities_by_id = {c.community_id: c for c in ordered}
    selections = _top_k_selections(
        [[a.score for a in group] for group in per_community], config.k
    )
    globals_: list[GlobalAnswer] = []
    for selection in selections:
        chosen = [group[i] for group, i in zip(per_community, selection)]
        joint = sum(math.log(max(a.score, 1e-300)) for a in chosen)
        globals_.append(
            reduce_global(query, chosen, generator, graph, communities_by_id, joint, trace)
        )
    best_per_community = [
        max(group, key=lambda a: a.score) for group in per_community
    ]
    top_locals = sorted(best_per_community, key=lambda a: (-a.score, a.community_id))[
        : config.k
    ]
    return globals_, top_locals


@dataclass
class QueryResult:
    answer: str
    global_answers: list[GlobalAnswer]
    local_answers: list[LocalAnswer]
    query: Query
    trace: list[dict] = field(default_factory=list)


def run_query(
    x: str,
    *,
    graph: KnowledgeGraph,
    communities: list[Community],
    index: CommunityIndex,
    encoder: Encoder,
    generator: Generator,
    beam: BeamConfig,
    deterministic_trace: bool = True,
) -> QueryResult:
    """Full pipeline for one query; returns the answer with full provenance."""
    trace = Trace(deterministic=deterministic_trace)
    stage = "expand"
    try:
        query = expand_query(x, generator, graph, trace)
        stage = "beam"
        globals_, top_locals = beam_retrieve(
            query, index, communities, beam, encoder, generator, graph, trace
        )
        stage = "answer"
        best = globals_[0]
        trace.record("answer", client_call_id=trace.next_call_id())
        text = generator.generate(
            prompts.answer_prompt(query.original, query.expanded, best.text)
        )
    except (InvalidInput, NoLocalAnswers):
        raise
    except ZfdtError as exc:
        raise PipelineError(stage, str(exc), trace.events, cause=exc)
    if not text.rstrip().endswith(SAFETY_DISCLAIMER):
        text = text.rstrip() + "\n\n" + SAFETY_DISCLAIMER
    return QueryResult(text, globals_, top_locals, query, trace.events)


def answer(x: str, engine_state, config: BeamConfig | None = None) -> str:
    """Answer one query against a built engine state (duck-typed)."""
    result = run_query(
        x,
        graph=engine_state.graph,
        communities=engine_state.category_communities,
        index=engine_state.index,
        encoder=engine_state.encoder,
        generator=engine_state.generator,
        beam=config or BeamConfig(),
        deterministic_trace=getattr(engine_state, "deterministic_trace", True),
    )
    return result.answer
