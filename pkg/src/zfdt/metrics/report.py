"""Aggregate metric suite over (output, reference) pairs."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..errors import InvalidInput, UndefinedMetric
from ..kg import KnowledgeGraph
from .rules import RuleTable
from .tcm import (
    GlossaryProfessionalismJudge,
    KgHallucinationJudge,
    MetricWeights,
    SharedEntityCoherenceJudge,
    ccr,
    cchr,
    cscr,
    fact_score,
    kg_fact_oracle,
    lr,
    parse_herbs,
    parse_roles,
    scr,
)
from .text import bleu, rouge_s

#: Column order of the tabular report.
METRIC_COLUMNS = ("bleu", "rouge_s", "ccr", "cscr", "cchr", "fs", "scr", "lr")


@dataclass(frozen=True)
class MetricReport:
    bleu: float
    rouge_s: float
    ccr: float
    cscr: float
    cchr: float
    fs: float
    scr: float
    lr: float
    avg: float
    skipped: dict[str, int] = field(default_factory=dict)

    def scores(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in METRIC_COLUMNS}

    def to_json(self) -> str:
        return json.dumps({**self.scores(), "avg": self.avg, "skipped": self.skipped})

    def to_tsv(self) -> str:
        header = "BLEU\tROUGE-S\tCCR\tCSCR\tCCHR\tFS\tSCR\tLR\tAvg"
        values = [getattr(self, name) for name in METRIC_COLUMNS] + [self.avg]
        return header + "\n" + "\t".join(f"{v:.4f}" for v in values)


def evaluate_suite(
    outputs: list[str],
    references: list[str],
    graph: KnowledgeGraph,
    rules: RuleTable | None = None,
    weights: MetricWeights | None = None,
    include_text_metrics_in_avg: bool = True,
) -> MetricReport:
    """Per-metric corpus averages; per-item skips are excluded per metric."""
    if len(outputs) != len(references):
        raise InvalidInput("outputs and references must have equal length")
    if not outputs:
        raise InvalidInput("nothing to evaluate")
    rules = rules or RuleTable()
    weights = weights or MetricWeights()
    professionalism = GlossaryProfessionalismJudge(graph=graph)
    coherence = SharedEntityCoherenceJudge(graph)
    oracle = kg_fact_oracle(graph)

    sums: dict[str, float] = {name: 0.0 for name in METRIC_COLUMNS}
    counts: dict[str, int] = {name: 0 for name in METRIC_COLUMNS}
    skipped: dict[str, int] = {}

    def add(name: str, value: float) -> None:
        sums[name] += value
        counts[name] += 1

    def skip(name: str) -> None:
        skipped[name] = skipped.get(name, 0) + 1

    for output, reference in zip(outputs, references):
        add("bleu", bleu(output, [reference]))
        add("rouge_s", rouge_s(output, reference))
        herbs = parse_herbs(output)
        if herbs:
            add("ccr", ccr(herbs, rules))
        else:
            skip("ccr")
        try:
            add("cscr", cscr(parse_roles(output), parse_roles(reference), weights))
        except UndefinedMetric:
            skip("cscr")
        try:
            add("fs", fact_score(output, oracle))
        except UndefinedMetric:
            skip("fs")
        add("scr", scr(output, professionalism))
        try:
            add("lr", lr(output, coherence))
        except UndefinedMetric:
            skip("lr")

    add("cchr", cchr(outputs, KgHallucinationJudge(graph)))

    values = {
        name: (sums[name] / counts[name] if counts[name] else 0.0)
        for name in METRIC_COLUMNS
    }
    averaged = (
        METRIC_COLUMNS
        if include_text_metrics_in_avg
        else tuple(name for name in METRIC_COLUMNS if name not in ("bleu", "rouge_s"))
    )
    avg = sum(values[name] for name in averaged) / len(averaged)
    return MetricReport(**values, avg=avg, skipped=skipped)
