"""Seeded hierarchical-ready Leiden partitioning over weighted graphs.

Three phases per level: local moving (sweep until no move improves the
partition quality by more than ``min_gain_epsilon``), refinement (rebuild each
community from singletons by positive-gain merges, which guarantees connected
communities), and aggregation (collapse refined communities into super-nodes).
A final flat polish re-sweeps the original graph and splits any disconnected
community, so the returned partition always satisfies the local-optimality
and connectivity postconditions.

Two gain functions coexist on purpose. ``delta_q`` is the documented
single-node scoring formula (see :func:`delta_q`); ``join_gain`` is the exact
change of partition quality when a detached node enters a community, which is
what the optimization itself uses and what the move/quality bookkeeping
identity is stated against.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .errors import EmptyGraph, InvalidInput
from .kg import KnowledgeGraph


@dataclass(frozen=True)
class LeidenConfig:
    resolution: float = 1.0
    max_iterations: int = 50
    min_gain_epsilon: float = 1e-7
    rng_seed: int = 42
    restarts: int = 16  # independent seeded runs; the best partition wins

    def __post_init__(self):
        if self.resolution <= 0:
            raise InvalidInput("resolution must be positive")
        if self.min_gain_epsilon <= 0:
            raise InvalidInput("min_gain_epsilon must be positive")
        if self.restarts < 1:
            raise InvalidInput("at least one run is required")


@dataclass
class Partition:
    assignment: dict[int, int]  # entity id -> dense community index
    sigma_in: list[float]  # internal edge weight per community
    sigma_tot: list[float]  # total incident weight per community
    modularity: float

    @property
    def communities(self) -> list[set[int]]:
        out: list[set[int]] = [set() for _ in range(len(self.sigma_in))]
        for node, comm in self.assignment.items():
            out[comm].add(node)
        return out


def delta_q(
    sigma_in: float,
    sigma_tot: float,
    k_v: float,
    k_v_in: float,
    two_m: float,
    resolution: float = 1.0,
) -> float:
    """Single-node community-joining score.

    ``(sigma_in + k_v_in) / 2m - resolution * (sigma_tot + k_v) * k_v / (2m)^2``
    over the target community's internal weight ``sigma_in``, incident weight
    ``sigma_tot``, the node degree ``k_v`` and its weight ``k_v_in`` into the
    target. Note this scores the joined community in isolation; it is not the
    exact partition-quality delta (see :func:`join_gain` for that).
    """
    if two_m == 0:
        return 0.0
    return (sigma_in + k_v_in) / two_m - resolution * ((sigma_tot + k_v) * k_v) / (two_m**2)


def join_gain(
    sigma_tot: float, k_v: float, k_v_in: float, two_m: float, resolution: float = 1.0
) -> float:
    """Exact modularity change when a currently detached node joins a community.

    Moving a node from community A to community B changes global modularity by
    exactly ``join_gain(B) - join_gain(A')`` where A' is A without the node.
    """
    if two_m == 0:
        return 0.0
    return 2.0 * k_v_in / two_m - resolution * 2.0 * sigma_tot * k_v / (two_m**2)


def modularity_gain(
    graph: KnowledgeGraph,
    partition: Partition,
    node: int,
    target_community: int,
    config: LeidenConfig,
) -> float:
    """:func:`delta_q` evaluated from a graph partition's cached quantities."""
    if partition.assignment.get(node) == target_community:
        raise InvalidInput("node already belongs to the target community")
    members = {v for v, c in partition.assignment.items() if c == target_community}
    k_v = graph.degree(node)
    k_v_in = sum(w for u, w in graph.adjacency.get(node, {}).items() if u in members)
    return delta_q(
        partition.sigma_in[target_community],
        partition.sigma_tot[target_community],
        k_v,
        k_v_in,
        graph.total_edge_weight,
        config.resolution,
    )


def modularity_of(
    adj: dict[int, dict[int, float]], assignment: dict[int, int], resolution: float = 1.0
) -> float:
    """Standard resolution-scaled modularity of a partition of ``adj``."""
    two_m = sum(sum(nbrs.values()) for nbrs in adj.values())
    if two_m == 0:
        return 0.0
    internal: dict[int, float] = {}
    incident: dict[int, float] = {}
    for v, nbrs in adj.items():
        comm = assignment[v]
        k_v = sum(nbrs.values())
        incident[comm] = incident.get(comm, 0.0) + k_v
        internal[comm] = internal.get(comm, 0.0) + sum(
            w for u, w in nbrs.items() if assignment[u] == comm
        )
    q = 0.0
    for comm, tot in incident.items():
        q += internal.get(comm, 0.0) / two_m - resolution * (tot / two_m) ** 2
    return q


class _WorkGraph:
    """Symmetric weighted graph with self-loop weights from aggregation.

    ``self_w[v]`` stores the ordered-pair internal weight of a collapsed
    community (twice its plain internal edge weight), so quality is preserved
    exactly across aggregation levels.
    """

    def __init__(self, n: int):
        self.n = n
        self.adj: list[dict[int, float]] = [dict() for _ in range(n)]
        self.self_w = [0.0] * n
        self.degree = [0.0] * n
        self.two_m = 0.0

    def finalize(self):
        for v in range(self.n):
            self.degree[v] = sum(self.adj[v].values()) + self.self_w[v]
        self.two_m = sum(self.degree)
        return self


class _State:
    """Mutable community assignment with cached incident weights."""

    def __init__(self, graph: _WorkGraph, assignment: list[int]):
        self.g = graph
        self.comm = list(assignment)
        n_comm = max(assignment) + 1 if assignment else 0
        self.sigma_tot = [0.0] * n_comm
        self.size = [0] * n_comm
        for v, c in enumerate(assignment):
            self.sigma_tot[c] += graph.degree[v]
            self.size[c] += 1

    def weight_to(self, v: int) -> dict[int, float]:
        out: dict[int, float] = {}
        for u, w in self.g.adj[v].items():
            c = self.comm[u]
            out[c] = out.get(c, 0.0) + w
        return out

    def detach(self, v: int) -> int:
        c = self.comm[v]
        self.sigma_tot[c] -= self.g.degree[v]
        self.size[c] -= 1
        self.comm[v] = -1
        return c

    def attach(self, v: int, c: int):
        if c == len(self.sigma_tot):
            self.sigma_tot.append(0.0)
            self.size.append(0)
        self.sigma_tot[c] += self.g.degree[v]
        self.size[c] += 1
        self.comm[v] = c

    def community_count(self) -> int:
        return sum(1 for s in self.size if s > 0)


def _local_move(g: _WorkGraph, state: _State, config: LeidenConfig, rng: random.Random) -> bool:
    """Sweep nodes in seeded random order until no move beats the epsilon."""
    moved_any = False
    for _ in range(config.max_iterations):
        order = list(range(g.n))
        rng.shuffle(order)
        moved = False
        for v in order:
            old = state.detach(v)
            links = state.weight_to(v)
            k_v = g.degree[v]
            candidates = sorted(links) + ([old] if old not in links else [])
            best_comm, best_gain = old, join_gain(
                state.sigma_tot[old], k_v, links.get(old, 0.0), g.two_m, config.resolution
            )
            for c in candidates:
                gain = join_gain(
                    state.sigma_tot[c], k_v, links.get(c, 0.0), g.two_m, config.resolution
                )
                if gain > best_gain + 1e-15:
                    best_comm, best_gain = c, gain
            # detaching into a fresh singleton community has gain 0
            if 0.0 > best_gain + 1e-15:
                best_comm = len(state.sigma_tot)
                best_gain = 0.0
            rejoin = join_gain(
                state.sigma_tot[old], k_v, links.get(old, 0.0), g.two_m, config.resolution
            )
            if best_comm != old and best_gain - rejoin > config.min_gain_epsilon:
                state.attach(v, best_comm)
                moved = True
                moved_any = True
            else:
                state.attach(v, old)
        if not moved:
            break
    return moved_any


def _refine(g: _WorkGraph, state: _State, config: LeidenConfig, rng: random.Random) -> list[int]:
    """Rebuild each community from singletons by positive-gain neighbor merges."""
    refined = _State(g, list(range(g.n)))
    order = list(range(g.n))
    rng.shuffle(order)
    for v in order:
        if refined.size[refined.comm[v]] > 1:
            continue
        old = refined.detach(v)
        k_v = g.degree[v]
        links: dict[int, float] = {}
        for u, w in g.adj[v].items():
            if state.comm[u] == state.comm[v]:
                links[refined.comm[u]] = links.get(refined.comm[u], 0.0) + w
        best_comm, best_gain = old, 0.0
        for c in sorted(links):
            if c == old:
                continue
            gain = join_gain(
                refined.sigma_tot[c], k_v, links[c], g.two_m, config.resolution
            )
            if gain > best_gain + 1e-15:
                best_comm, best_gain = c, gain
        refined.attach(v, best_comm)
    return refined.comm


def _compact(assignment: list[int]) -> tuple[list[int], int]:
    remap: dict[int, int] = {}
    out = []
    for c in assignment:
        if c not in remap:
            remap[c] = len(remap)
        out.append(remap[c])
    return out, len(remap)


def _aggregate(
    g: _WorkGraph, refined: list[int], state: _State, groups: list[list[int]]
) -> tuple[_WorkGraph, list[int], list[list[int]]]:
    refined, n_new = _compact(refined)
    new_groups: list[list[int]] = [[] for _ in range(n_new)]
    parent: list[int] = [0] * n_new
    for v, c in enumerate(refined):
        new_groups[c].extend(groups[v])
        parent[c] = state.comm[v]
    agg = _WorkGraph(n_new)
    for v in range(g.n):
        cv = refined[v]
        agg.self_w[cv] += g.self_w[v]
        for u, w in g.adj[v].items():
            cu = refined[u]
            if cu == cv:
                agg.self_w[cv] += w  # ordered pairs: each internal edge seen twice
            else:
                agg.adj[cv][cu] = agg.adj[cv].get(cu, 0.0) + w
    agg.finalize()
    parent_assignment, _ = _compact(parent)
    return agg, parent_assignment, new_groups


def _split_disconnected(adj_of, members_by_comm: list[set[int]]) -> tuple[list[set[int]], bool]:
    out: list[set[int]] = []
    changed = False
    for members in members_by_comm:
        remaining = set(members)
        while remaining:
            seed = min(remaining)
            component = {seed}
            frontier = [seed]
            while frontier:
                v = frontier.pop()
                for u in adj_of(v):
                    if u in remaining and u not in component:
                        component.add(u)
                        frontier.append(u)
            out.append(component)
            remaining -= component
            if len(component) != len(members):
                changed = True
    return out, changed


def _run_once(
    g: _WorkGraph, config: LeidenConfig, rng: random.Random, initial: list[int] | None = None
) -> list[int]:
    """One full local-move / refine / aggregate pass plus the flat polish."""
    work = g
    groups: list[list[int]] = [[v] for v in range(g.n)]
    state = _State(work, list(initial) if initial else list(range(work.n)))
    while True:
        _local_move(work, state, config, rng)
        refined = _refine(work, state, config, rng)
        if len(set(refined)) == work.n:
            break
        work, parent_assignment, groups = _aggregate(work, refined, state, groups)
        state = _State(work, parent_assignment)

    flat = [0] * g.n
    for agg_node, comm in enumerate(state.comm):
        for v in groups[agg_node]:
            flat[v] = comm
    flat, _ = _compact(flat)

    # flat polish: enforce single-node local optimality and connectivity
    flat_state = _State(g, flat)
    for _ in range(8):
        _local_move(g, flat_state, config, rng)
        members: dict[int, set[int]] = {}
        for v, c in enumerate(flat_state.comm):
            members.setdefault(c, set()).add(v)
        comps, changed = _split_disconnected(
            lambda v: g.adj[v].keys(), list(members.values())
        )
        if not changed:
            break
        relabeled = [0] * g.n
        for idx, comp in enumerate(comps):
            for v in comp:
                relabeled[v] = idx
        flat_state = _State(g, relabeled)
    final, _ = _compact(flat_state.comm)
    return final


def _flat_modularity(g: _WorkGraph, comm: list[int], resolution: float) -> float:
    if g.two_m == 0:
        return 0.0
    internal: dict[int, float] = {}
    incident: dict[int, float] = {}
    for v in range(g.n):
        incident[comm[v]] = incident.get(comm[v], 0.0) + g.degree[v]
        internal[comm[v]] = internal.get(comm[v], 0.0) + g.self_w[v] + sum(
            w for u, w in g.adj[v].items() if comm[u] == comm[v]
        )
    return sum(
        internal.get(c, 0.0) / g.two_m - resolution * (tot / g.two_m) ** 2
        for c, tot in incident.items()
    )


def leiden_assignment(
    nodes: list[int], adj: dict[int, dict[int, float]], config: LeidenConfig
) -> dict[int, int]:
    """Run the full algorithm over an arbitrary-node-id adjacency map."""
    if not nodes:
        raise EmptyGraph("no nodes to partition")
    index = {node: i for i, node in enumerate(sorted(nodes))}
    g = _WorkGraph(len(nodes))
    for v, nbrs in adj.items():
        if v not in index:
            continue
        for u, w in nbrs.items():
            if u in index and u != v:
                g.adj[index[v]][index[u]] = g.adj[index[v]].get(index[u], 0.0) + w
    # symmetrize defensively; callers normally pass symmetric adjacency
    for v in range(g.n):
        for u, w in list(g.adj[v].items()):
            g.adj[u].setdefault(v, w)
    g.finalize()

    best: list[int] | None = None
    best_q = float("-inf")
    for restart in range(config.restarts):
        rng = random.Random(config.rng_seed + restart)
        # restart 0 starts from singletons; later restarts diversify with a
        # random coarse initial partition to escape shared greedy basins
        initial = None
        if restart > 0:
            groups = rng.randint(1, max(2, g.n // 2))
            initial, _ = _compact([rng.randrange(groups) for _ in range(g.n)])
        candidate = _run_once(g, config, rng, initial)
        q = _flat_modularity(g, candidate, config.resolution)
        if q > best_q + 1e-12:
            best, best_q = candidate, q
    assert best is not None
    rev = {i: node for node, i in index.items()}
    return {rev[v]: best[v] for v in range(g.n)}


def partition_from_assignment(
    graph: KnowledgeGraph, assignment: dict[int, int], resolution: float = 1.0
) -> Partition:
    n_comm = max(assignment.values()) + 1 if assignment else 0
    sigma_in = [0.0] * n_comm
    sigma_tot = [0.0] * n_comm
    for e in graph.entities:
        sigma_tot[assignment[e.entity_id]] += graph.degree(e.entity_id)
    for r in graph.relations:
        if assignment[r.src] == assignment[r.dst]:
            sigma_in[assignment[r.src]] += r.weight
    q = modularity_of(graph.adjacency, assignment, resolution)
    return Partition(dict(assignment), sigma_in, sigma_tot, q)


def leiden(graph: KnowledgeGraph, config: LeidenConfig | None = None) -> Partition:
    """Partition a knowledge graph into connected, locally optimal communities."""
    config = config or LeidenConfig()
    if not graph.entities:
        raise EmptyGraph("cannot partition an empty graph")
    nodes = [e.entity_id for e in graph.entities]
    assignment = leiden_assignment(nodes, graph.adjacency, config)
    return partition_from_assignment(graph, assignment, config.resolution)
