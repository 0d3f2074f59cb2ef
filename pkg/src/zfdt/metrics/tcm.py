"""The six domain metrics: CCR, CSCR, CCHR, FactScore, SCR, LR.

Judges are pluggable. The defaults are deterministic knowledge-graph and
glossary approximations; a generator-backed judge adapter exists for runs
where an LLM should do the judging instead.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Protocol

from ..corpus import Role, parse_sections
from ..errors import InvalidInput, InvalidWeights, UndefinedMetric
from ..kg import KnowledgeGraph
from ..taxonomy import CLARITY_COMPONENTS, Category, normalize_name
from .rules import RuleTable

# Sentence segmentation is part of the metric contract: split on CJK and
# ASCII terminal punctuation plus newlines.
_SENTENCE_SPLIT = re.compile(r"[。！？.!?\n]+")


def split_sentences(text: str) -> list[str]:
    return [s.strip() for s in _SENTENCE_SPLIT.split(text) if s.strip()]


_PAREN_RE = re.compile(r"\s*\([^)]*\)")


def parse_herbs(response: str) -> list[str]:
    """Herb names from the ingredients section, normalized and deduplicated."""
    section = parse_sections(response).get(Category.HERBAL_INGREDIENTS)
    if not section:
        return []
    out, seen = [], set()
    for raw in re.split(r"[;,]", section):
        name = normalize_name(_PAREN_RE.sub("", raw))
        if name and name not in seen:
            seen.add(name)
            out.append(name)
    return out


@dataclass(frozen=True)
class RoleAssignment:
    sovereign: frozenset[str] = frozenset()
    minister: frozenset[str] = frozenset()
    assistant: frozenset[str] = frozenset()
    courier: frozenset[str] = frozenset()

    def __post_init__(self):
        sets = [self.sovereign, self.minister, self.assistant, self.courier]
        for i, a in enumerate(sets):
            for b in sets[i + 1 :]:
                if a & b:
                    raise InvalidInput("role sets must be pairwise disjoint")

    def as_dict(self) -> dict[str, frozenset[str]]:
        return {
            "sovereign": self.sovereign,
            "minister": self.minister,
            "assistant": self.assistant,
            "courier": self.courier,
        }


_ROLE_RE = re.compile(r"^(?P<name>.*?)\s*\((?P<role>[a-z]+)(?:,[^)]*)?\)\s*$")


def parse_roles(response: str) -> RoleAssignment:
    """Role assignment from ``name (role[, dose])`` entries in the ingredients."""
    section = parse_sections(response).get(Category.HERBAL_INGREDIENTS, "")
    roles: dict[str, set[str]] = {r.value: set() for r in Role if r is not Role.UNASSIGNED}
    for raw in section.split(";"):
        m = _ROLE_RE.match(raw.strip())
        if m and m.group("role") in roles:
            roles[m.group("role")].add(normalize_name(m.group("name")))
    return RoleAssignment(
        frozenset(roles["sovereign"]),
        frozenset(roles["minister"]),
        frozenset(roles["assistant"]),
        frozenset(roles["courier"]),
    )


@dataclass(frozen=True)
class MetricWeights:
    w_s: float = 0.25
    w_mi: float = 0.25
    w_a: float = 0.25
    w_me: float = 0.25

    def validate(self) -> None:
        weights = (self.w_s, self.w_mi, self.w_a, self.w_me)
        if any(w < 0 or w > 1 for w in weights):
            raise InvalidWeights("weights must lie in [0, 1]")
        if abs(sum(weights) - 1.0) > 1e-12:
            raise InvalidWeights("weights must sum to 1")


def ccr(herbs: list[str], rules: RuleTable) -> float:
    """1 - (non-compliant herb pairs / all unordered herb pairs)."""
    names = []
    seen = set()
    for herb in herbs:
        norm = normalize_name(herb)
        if norm and norm not in seen:
            seen.add(norm)
            names.append(norm)
    if not names:
        raise InvalidInput("no herbs after normalization")
    n = len(names)
    total_pairs = n * (n - 1) // 2
    if total_pairs == 0:
        return 1.0  # a single herb is vacuously compliant
    violations = sum(
        1
        for i in range(n)
        for j in range(i + 1, n)
        if rules.forbidden(names[i], names[j])
    )
    return 1.0 - violations / total_pairs


def cscr(
    predicted: RoleAssignment, reference: RoleAssignment, weights: MetricWeights | None = None
) -> float:
    """Weighted per-role recall; an empty reference role counts as fully correct."""
    weights = weights or MetricWeights()
    weights.validate()
    ref = reference.as_dict()
    if all(not members for members in ref.values()):
        raise UndefinedMetric("reference assigns no roles")
    pred = predicted.as_dict()
    rates = {}
    for role, members in ref.items():
        rates[role] = 1.0 if not members else len(pred[role] & members) / len(members)
    return (
        weights.w_s * rates["sovereign"]
        + weights.w_mi * rates["minister"]
        + weights.w_a * rates["assistant"]
        + weights.w_me * rates["courier"]
    )


class HallucinationJudge(Protocol):
    def __call__(self, response: str) -> bool:
        """True when the response is judged hallucinated."""
        ...


@dataclass
class KgHallucinationJudge:
    """Flags a response naming any formula or herb absent from the graph."""

    graph: KnowledgeGraph

    def __call__(self, response: str) -> bool:
        known = {normalize_name(e.name) for e in self.graph.entities}
        sections = parse_sections(response)
        claimed: list[str] = []
        formulas = sections.get(Category.RECOMMENDED_FORMULAS, "")
        claimed += [normalize_name(_PAREN_RE.sub("", p)) for p in re.split(r"[;,]", formulas)]
        claimed += parse_herbs(response)
        return any(name and name not in known for name in claimed)


def cchr(responses: list[str], judge: HallucinationJudge) -> float:
    if not responses:
        raise InvalidInput("no responses to judge")
    hallucinated = sum(1 for r in responses if judge(r))
    return 1.0 - hallucinated / len(responses)


_FACT_VERBS = {
    " treats ": "treats",
    " contains ": "contains",
    " indicated for ": "indicated_for",
    " diagnosed by ": "diagnosed_by",
    " contraindicated for ": "contraindicated_for",
    " prepared by ": "prepared_by",
}


def extract_fact_triples(response: str) -> list[tuple[str, str, str]]:
    """Sentence-level (subject, relation, object) assertions."""
    triples = []
    for sentence in split_sentences(response):
        lowered = sentence.casefold()
        for phrase, label in _FACT_VERBS.items():
            idx = lowered.find(phrase)
            if idx < 0:
                continue
            src = normalize_name(sentence[:idx].split(":")[-1])
            dst = normalize_name(sentence[idx + len(phrase) :])
            if src and dst and src != dst:
                triples.append((src, label, dst))
    return triples


FactOracle = Callable[[tuple[str, str, str]], bool]


def kg_fact_oracle(graph: KnowledgeGraph) -> FactOracle:
    known = {
        (
            normalize_name(graph.entities[r.src].name),
            r.label,
            normalize_name(graph.entities[r.dst].name),
        )
        for r in graph.relations
    }
    entity_ids = {e.entity_id: e for e in graph.entities}
    assert all(r.src in entity_ids and r.dst in entity_ids for r in graph.relations)
    return lambda triple: triple in known


def fact_score(response: str, oracle: FactOracle) -> float:
    """Supported assertions / total assertions; no assertions is undefined."""
    triples = extract_fact_triples(response)
    if not triples:
        raise UndefinedMetric("response asserts no checkable facts")
    supported = sum(1 for t in triples if oracle(t))
    return supported / len(triples)


#: Terms whose presence marks a sentence as professionally phrased.
DEFAULT_GLOSSARY = frozenset(
    {
        "decoction", "decoctions", "formula", "formulas", "herb", "herbs",
        "herbal", "sovereign", "minister", "assistant", "courier", "monarch",
        "qi", "yin", "yang", "pulse", "tongue", "contraindication",
        "contraindications", "contraindicated", "dose", "doses", "symptom",
        "symptoms", "diagnosis", "preparation", "preparations", "ingredients",
        "treats", "indicated", "patients", "deficiency", "syndrome", "coating",
        "prepared", "members",
    }
)


@dataclass
class GlossaryProfessionalismJudge:
    glossary: frozenset[str] = DEFAULT_GLOSSARY
    graph: KnowledgeGraph | None = None

    def __call__(self, sentence: str) -> bool:
        words = {normalize_name(w) for w in re.findall(r"[\w-]+", sentence)}
        if words & self.glossary:
            return True
        if self.graph is not None:
            lowered = normalize_name(sentence)
            return any(normalize_name(e.name) in lowered for e in self.graph.entities)
        return False


def scr(
    response: str, professionalism_judge: Callable[[str], bool] | None = None
) -> float:
    """0.5 * clarity rate + 0.5 * professional-sentence rate.

    Clarity counts which of the six key components appear, detected by their
    section headers.
    """
    if not response.strip():
        raise InvalidInput("empty response")
    judge = professionalism_judge or GlossaryProfessionalismJudge()
    sections = parse_sections(response)
    present = sum(1 for cat in CLARITY_COMPONENTS if sections.get(cat))
    cr = present / len(CLARITY_COMPONENTS)
    sentences = split_sentences(response)
    cpr = (
        sum(1 for s in sentences if judge(s)) / len(sentences) if sentences else 0.0
    )
    return 0.5 * cr + 0.5 * cpr


@dataclass
class SharedEntityCoherenceJudge:
    """Adjacent sentences cohere when they mention a common graph entity."""

    graph: KnowledgeGraph

    def __call__(self, first: str, second: str) -> bool:
        a, b = normalize_name(first), normalize_name(second)
        return any(
            normalize_name(e.name) in a and normalize_name(e.name) in b
            for e in self.graph.entities
        )


def lr(response: str, coherence_judge: Callable[[str, str], bool]) -> float:
    """Coherent adjacent sentence pairs / all adjacent pairs."""
    sentences = split_sentences(response)
    if len(sentences) < 2:
        raise UndefinedMetric("logical rate needs at least two sentences")
    pairs = list(zip(sentences, sentences[1:]))
    coherent = sum(1 for a, b in pairs if coherence_judge(a, b))
    return coherent / len(pairs)


@dataclass
class GeneratorJudge:
    """LLM-backed yes/no judge adapter for fidelity runs."""

    generator: object  # any Generator
    question: str  # template with a {payload} slot

    def ask(self, payload: str) -> bool:
        reply = self.generator.generate(self.question.format(payload=payload))
        return reply.strip().casefold().startswith("yes")

    def __call__(self, *texts: str) -> bool:
        return self.ask("\n---\n".join(texts))
