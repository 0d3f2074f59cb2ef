"""Acceptance criteria, one test per criterion, with a pass/fail line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the criterion lines.
"""

import json
import math
import random
import threading
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

import zfdt.bounds as bounds
from zfdt.cli import main
from zfdt.dataset import import_records
from zfdt.engine import build_workspace
from zfdt.index import score_candidates
from zfdt.kg import ExtractedEntity, ExtractedRelation, build_graph
from zfdt.leiden import LeidenConfig, delta_q, leiden
from zfdt.metrics import MetricWeights, RuleTable, evaluate_suite
from zfdt.retrieval import SAFETY_DISCLAIMER
from zfdt.service import create_app
from zfdt.taxonomy import Category

from helpers import best_partition_oracle, random_connected_graph
from test_index import _plain_index

INSTRUCTION = "Recommend a TCM formula and provide detailed explanations based on the symptoms"


def report(number: int, description: str, ok: bool) -> None:
    print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {description}")
    assert ok, f"criterion {number} failed: {description}"


def test_criterion_01_leiden_optimality():
    rng = random.Random(20240810)
    started = time.monotonic()
    worst_ratio = 1.0
    all_connected = True
    for _ in range(100):
        graph = random_connected_graph(rng, rng.randint(3, 8))
        partition = leiden(graph)
        best_q, _ = best_partition_oracle(graph)
        if best_q > 1e-12:
            worst_ratio = min(worst_ratio, partition.modularity / best_q)
        else:
            all_connected &= partition.modularity >= best_q - 1e-9
        for members in partition.communities:
            if not members:
                continue
            seen = {min(members)}
            frontier = [min(members)]
            while frontier:
                v = frontier.pop()
                for u in graph.adjacency[v]:
                    if u in members and u not in seen:
                        seen.add(u)
                        frontier.append(u)
            all_connected &= seen == members
    elapsed = time.monotonic() - started
    ok = worst_ratio >= 0.95 and all_connected and elapsed < 60.0
    report(
        1,
        f"partition quality >= 0.95 x optimum over 100 graphs "
        f"(worst ratio {worst_ratio:.4f}, connected={all_connected}, {elapsed:.1f}s)",
        ok,
    )


def test_criterion_02_gain_formula_and_determinism():
    cases_ok = (
        abs(delta_q(4, 6, 2, 2, 20, 1.0) - 0.26) <= 1e-12
        and abs(delta_q(4, 6, 0, 0, 20, 1.0) - 0.2) <= 1e-12
        and abs(delta_q(4, 6, 2, 2, 20, 0.0) - 0.3) <= 1e-12
        and abs(delta_q(10, 9, 3, 1.5, 30, 0.5) - (11.5 / 30 - 0.5 * 36 / 900)) <= 1e-12
    )
    rng = random.Random(77)
    deterministic = True
    for _ in range(5):
        graph = random_connected_graph(rng, rng.randint(4, 10))
        config = LeidenConfig(rng_seed=rng.randrange(10_000))
        deterministic &= leiden(graph, config).assignment == leiden(graph, config).assignment
    report(
        2,
        f"gain formula matches hand cases to 1e-12 and seeds reproduce partitions "
        f"(cases={cases_ok}, deterministic={deterministic})",
        cases_ok and deterministic,
    )


def test_criterion_03_retrieval_softmax():
    rng = np.random.default_rng(5)
    sums_ok = shift_ok = True
    for _ in range(20):
        dim = int(rng.integers(2, 8))
        index = _plain_index([rng.normal(size=dim) for _ in range(5)], dim)
        query = rng.normal(size=dim)
        vecs = [e.vector for e in index.entries]
        scores = score_candidates(index, query, vecs)
        sums_ok &= abs(sum(scores) - 1.0) <= 1e-12
        shifted = score_candidates(index, query, [v + rng.normal() * 0 for v in vecs])
        sums_ok &= abs(sum(shifted) - 1.0) <= 1e-12
        # shift the dot products by adding a constant vector component along the query
        constant = rng.normal()
        norm = float(query @ query)
        shifted_vecs = [v + constant * query / norm for v in vecs]
        shifted_scores = score_candidates(index, query, shifted_vecs)
        shift_ok &= all(abs(a - b) <= 1e-9 for a, b in zip(scores, shifted_scores))
    index = _plain_index([[1.0, 0.0], [0.0, 1.0]], 2)
    derived = score_candidates(index, np.array([1.0, 0.0]), [e.vector for e in index.entries])
    e = math.e
    derived_ok = (
        abs(derived[0] - e / (e + 1)) <= 1e-4
        and abs(derived[1] - 1 / (e + 1)) <= 1e-4
        and abs(derived[0] - 0.7311) <= 1e-4
        and abs(derived[1] - 0.2689) <= 1e-4
    )
    report(
        3,
        f"softmax sums to 1, is shift-invariant, and matches (0.7311, 0.2689) "
        f"(sums={sums_ok}, shift={shift_ok}, derived={derived_ok})",
        sums_ok and shift_ok and derived_ok,
    )


def test_criterion_04_map_reduce_determinism(engine, capsys):
    args = ["query", str(engine.workspace), "stabbing chest pain worse at night"]
    outputs = set()
    for _ in range(20):
        assert main(list(args)) == 0
        outputs.add(capsys.readouterr().out)
    cli_ok = len(outputs) == 1

    client = TestClient(create_app(state=engine))
    payload = {"symptoms": "stabbing chest pain worse at night"}
    bodies: list[bytes] = [b""] * 8
    threads = [
        threading.Thread(
            target=lambda slot: bodies.__setitem__(
                slot, client.post("/v1/query", json=payload).content
            ),
            args=(i,),
        )
        for i in range(8)
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    service_ok = len(set(bodies)) == 1
    report(
        4,
        f"query output bitwise-stable over 20 CLI runs and 8 concurrent service "
        f"requests (cli={cli_ok}, service={service_ok})",
        cli_ok and service_ok,
    )


def test_criterion_05_top_k_trend(planted_engine):
    state = planted_engine
    home_of = {}
    for community in state.category_communities:
        for entity_id in community.entity_ids:
            home_of[entity_id] = community.community_id
    rng = random.Random(123)
    entities = state.graph.entities
    started = time.monotonic()
    hits = {1: 0, 2: 0, 3: 0}
    prefix_ok = True
    for trial in range(100):
        entity = entities[rng.randrange(len(entities))]
        query = f"{entity.name} guidance please"
        ranked = [a.community_id for a in state.query(query, top_k=3).local_answers]
        for k in (1, 2, 3):
            if home_of[entity.entity_id] in ranked[:k]:
                hits[k] += 1
        if trial < 5:  # spot-check that smaller k really is a prefix of larger k
            ranked_k1 = [a.community_id for a in state.query(query, top_k=1).local_answers]
            prefix_ok &= ranked_k1 == ranked[:1]
    elapsed = time.monotonic() - started
    recall = {k: hits[k] / 100 for k in hits}
    ok = (
        recall[1] >= 0.95
        and recall[1] <= recall[2] <= recall[3]
        and prefix_ok
        and elapsed < 30.0
    )
    report(
        5,
        f"planted recall@1 {recall[1]:.2f} >= 0.95, non-decreasing in k "
        f"({recall[1]:.2f}/{recall[2]:.2f}/{recall[3]:.2f}), {elapsed:.1f}s",
        ok,
    )


def _metric_fixture_graph():
    entities = [
        ExtractedEntity("four gentlemen decoction", Category.RECOMMENDED_FORMULAS),
        ExtractedEntity("ginseng", Category.HERBAL_INGREDIENTS),
        ExtractedEntity("poria", Category.HERBAL_INGREDIENTS),
        ExtractedEntity("qi deficiency fatigue", Category.DISEASES),
        ExtractedEntity("decoct with water", Category.PREPARATION_METHODS),
    ]
    relations = [
        ExtractedRelation("four gentlemen decoction", "qi deficiency fatigue", "treats"),
        ExtractedRelation("four gentlemen decoction", "ginseng", "contains"),
        ExtractedRelation("four gentlemen decoction", "poria", "contains"),
        ExtractedRelation("four gentlemen decoction", "decoct with water", "prepared_by"),
        ExtractedRelation("ginseng", "qi deficiency fatigue", "treats"),
    ]
    return build_graph([(0, (entities, relations))])


# Ten-item fixture: 5 correct items, 3 hallucinating items with a forbidden
# herb pair, 2 items whose sole flaw is one wrong role token. Oracle values
# below were hand-derived from n-gram counts and per-metric definitions and
# verified with an independent standalone computation before freezing.
T1 = "\n".join(
    [
        "Recommended Formula: Four Gentlemen Decoction",
        "Herbal Ingredients: ginseng (sovereign); poria (assistant)",
        "ginseng treats qi deficiency fatigue. four gentlemen decoction contains ginseng.",
    ]
)
T2 = "\n".join(
    [
        "Recommended Formula: Dragon Pearl Elixir",
        "Herbal Ingredients: licorice root (minister); kansui (courier)",
        "poria treats insomnia. ginseng treats qi deficiency fatigue.",
    ]
)
T3_OUT = "\n".join(
    [
        "Herbal Ingredients: ginseng (minister); poria (assistant)",
        "ginseng treats qi deficiency fatigue. four gentlemen decoction contains poria.",
    ]
)
T3_REF = T3_OUT.replace("(minister)", "(sovereign)")

# T3 text-metric oracles from hand-enumerated token counts (16 tokens, one
# differs): matched n-grams 15/16, 13/15, 11/14, 9/13; LCS 15.
BLEU_T3 = (15 / 16 * 13 / 15 * 11 / 14 * 9 / 13) ** 0.25
ROUGE_T3 = (15 / 16 + 13 / 15 + 15 / 16) / 3

METRIC_ORACLE = {
    "bleu": (5 + 3 + 2 * BLEU_T3) / 10,
    "rouge_s": (5 + 3 + 2 * ROUGE_T3) / 10,
    "ccr": 0.7,  # T2's licorice/kansui pair violates its only herb pair
    "cscr": (5 + 3 + 2 * 0.75) / 10,
    "cchr": 0.7,  # the 3 T2 responses name an unknown formula
    "fs": (5 * 1.0 + 3 * 0.5 + 2 * 1.0) / 10,
    "scr": (5 * (2 / 3) + 3 * (2 / 3) + 2 * (7 / 12)) / 10,
    "lr": (5 * (2 / 3) + 3 * 0.0 + 2 * 0.5) / 10,
}


def test_criterion_06_metric_oracle_suite():
    graph = _metric_fixture_graph()
    outputs = [T1] * 5 + [T2] * 3 + [T3_OUT] * 2
    references = [T1] * 5 + [T2] * 3 + [T3_REF] * 2
    rules = RuleTable.from_pairs([("licorice root", "kansui")])
    result = evaluate_suite(outputs, references, graph, rules, MetricWeights())
    failures = []
    for name, expected in METRIC_ORACLE.items():
        tolerance = 1e-6 if name in ("bleu", "rouge_s") else 1e-9
        got = result.scores()[name]
        if abs(got - expected) > tolerance:
            failures.append(f"{name}: got {got!r} want {expected!r}")
    avg_ok = abs(result.avg - sum(result.scores().values()) / 8) <= 1e-12
    ok = not failures and avg_ok
    report(
        6,
        f"eight metrics match hand oracles on the 10-item fixture "
        f"(failures={failures or 'none'}, avg_ok={avg_ok})",
        ok,
    )


def test_criterion_07_proposition_1():
    worlds = bounds.worlds_with_information(20, 0.1, 1.0, start_seed=0)
    worst_identity = 0.0
    worst_runtime = 0.0
    all_ok = True
    for world in worlds:
        information = bounds.mutual_information(world)
        started = time.monotonic()
        result = bounds.verify_prop1(
            world, bounds.PROP1_CONFIG.with_overrides(gamma_threshold=information)
        )
        worst_runtime = max(worst_runtime, time.monotonic() - started)
        worst_identity = max(worst_identity, result.quantities["identity_error"])
        all_ok &= result.satisfied
    ok = all_ok and worst_identity <= 1e-3 and worst_runtime < 30.0
    report(
        7,
        f"identity and bound hold on 20 worlds (worst identity error "
        f"{worst_identity:.2e}, worst run {worst_runtime:.1f}s)",
        ok,
    )


def test_criterion_08_proposition_2():
    margins = []
    all_ok = True
    for seed in (0, 1, 2):
        instance = bounds.default_prop2_instance(seed=seed, beta=0.2)
        result = bounds.verify_prop2(instance.world, instance.prefs, instance.config)
        all_ok &= result.satisfied
        margins.append(result.bound_rhs + result.tolerance - result.bound_lhs)
    report(
        8,
        f"preference-training bound holds at beta=0.2 with 5e-2 tolerance "
        f"(margins {['%.3f' % m for m in margins]})",
        all_ok and all(m >= 0 for m in margins),
    )


def test_criterion_09_proposition_3():
    all_ok = True
    rates = []
    for epsilon, delta in bounds.DEFAULT_PROP3_CASES:
        world = bounds.default_prop3_world(epsilon, delta)
        result = bounds.verify_prop3(world, bounds.BoundsConfig(steps=25), trials=10_000)
        all_ok &= result.satisfied
        rates.append(
            f"eps={epsilon} delta={delta}: {result.quantities['empirical_rate']:.4f}"
            f" <= {result.bound_rhs:.4f}"
        )
    report(9, f"hallucination rates under the bound ({'; '.join(rates)})", all_ok)


def test_criterion_10_proposition_4():
    instance = bounds.default_prop4_instance(beta=0.2)
    result = bounds.verify_prop4(instance.prefs, instance.config)
    rows = result.quantities["pairs"]
    suppressed = [row["theta_l"] for row in rows]
    ok = (
        result.satisfied
        and result.quantities["monotone"]
        and all(row["qualifies"] for row in rows)
        and suppressed == sorted(suppressed, reverse=True)
    )
    report(
        10,
        f"rejected-answer suppression bounded and monotone over deltas "
        f"{[row['delta'] for row in rows]}",
        ok,
    )


def test_criterion_11_gradient_correctness():
    world = bounds.random_world(seed=21)
    config = bounds.BoundsConfig()
    sft_err = bounds.check_gradients(
        bounds.ToyModel.uniform(world, bounds.Conditioning.X_AND_C),
        bounds.Objective.SFT,
        world,
        config,
    )
    instance = bounds.default_prop2_instance(seed=3)
    dpo_err = bounds.check_gradients(
        instance.prefs.reference.clone(), bounds.Objective.DPO, instance.prefs, config
    )
    ok = sft_err < 1e-4 and dpo_err < 1e-4
    report(
        11,
        f"analytic gradients match central differences "
        f"(supervised {sft_err:.2e}, preference {dpo_err:.2e}, threshold 1e-4)",
        ok,
    )


def test_criterion_12_end_to_end_pipeline(tmp_path, fixture_corpus_path, capsys):
    started = time.monotonic()
    workspace = tmp_path / "ws"
    state = build_workspace(fixture_corpus_path, workspace)
    build_seconds = time.monotonic() - started
    build_ok = build_seconds < 10.0 and len(state.corpus.records) == 50

    sft_path = tmp_path / "sft.jsonl"
    code = main(
        ["dataset", str(workspace), "--kind", "sft", "--out", str(sft_path), "--limit", "8"]
    )
    capsys.readouterr()
    records = import_records(sft_path, "sft")
    instruction_ok = code == 0 and all(r.instruction == INSTRUCTION for r in records)
    round_trip = tmp_path / "sft2.jsonl"
    from zfdt.dataset import export

    export(records, round_trip, "sft")
    round_trip_ok = round_trip.read_bytes() == sft_path.read_bytes()

    disclaimer_ok = True
    for symptoms in ("night sweats and tinnitus", "productive cough", "pale complexion"):
        answer = state.query(symptoms).answer
        disclaimer_ok &= answer.rstrip().endswith(SAFETY_DISCLAIMER)
    ok = build_ok and instruction_ok and round_trip_ok and disclaimer_ok
    report(
        12,
        f"build {build_seconds:.1f}s < 10s, dataset exports round-trip, instruction "
        f"string exact, answers carry the safety disclaimer",
        ok,
    )
