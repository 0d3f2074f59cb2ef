"""Deterministic offline clients.

The stub encoder hashes character 3-grams into signed buckets, which is
collision-resistant enough for retrieval tests without any model download.
The stub generator is a pure function of the prompt: it dispatches on the
``[ROLE:...]`` tag and fills a fixed template per role, so the entire
pipeline is testable bit-exactly offline.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field

import numpy as np

from ..errors import DegeneratePair, InvalidInput
from ..taxonomy import CATEGORY_ORDER, SECTION_HEADERS, Category, normalize_name
from . import prompts
from .base import GenerationParams


def _hash64(key: bytes, data: str) -> int:
    digest = hashlib.blake2b(data.encode("utf-8"), digest_size=8, key=key).digest()
    return int.from_bytes(digest, "little")


@dataclass
class StubEncoder:
    name: str = "stub-3gram"
    dimension: int = 128
    seed: int = 0

    def encode(self, text: str) -> np.ndarray:
        if not text.strip():
            raise InvalidInput("cannot encode empty text")
        key = f"{self.name}:{self.seed}".encode("utf-8")[:16]
        vec = np.zeros(self.dimension, dtype=np.float64)
        grams = (
            [text[i : i + 3] for i in range(len(text) - 2)] if len(text) >= 3 else [text]
        )
        for gram in grams:
            h = _hash64(key, gram)
            bucket = (h & 0xFFFFFFFF) % self.dimension
            sign = 1.0 if (h >> 63) & 1 else -1.0
            vec[bucket] += sign
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            vec[_hash64(key, text) % self.dimension] = 1.0
            norm = 1.0
        return vec / norm


# Free-text relation pattern recognized by the stub extraction grammar.
_TREATS_RE = re.compile(r"(?P<src>[^.\n。]+?) treats (?P<dst>[^.\n。]+)")

# Rendered-record section headers mapped back to their category.
_HEADER_TO_CATEGORY = {header: cat for cat, header in SECTION_HEADERS.items()}

# Relation label used for an edge from the record's formula to each element.
_FORMULA_LINK_LABEL = {
    Category.DISEASES: "treats",
    Category.HERBAL_INGREDIENTS: "contains",
    Category.SYMPTOMS_POPULATION: "indicated_for",
    Category.PULSE_TONGUE: "diagnosed_by",
    Category.CONTRAINDICATIONS: "contraindicated_for",
    Category.PREPARATION_METHODS: "prepared_by",
}

_PAREN_RE = re.compile(r"\s*\([^)]*\)\s*$")


def _split_names(content: str) -> list[str]:
    parts = re.split(r"[;,]", content)
    return [p.strip() for p in parts if p.strip()]


def _section_names(category: Category, content: str) -> list[str]:
    """Entity names in one rendered section.

    Ingredients are semicolon-separated with a trailing ``(role, dose)``
    parenthetical; other sections are plain comma/semicolon lists.
    """
    if category is Category.HERBAL_INGREDIENTS:
        parts = [_PAREN_RE.sub("", p).strip() for p in content.split(";")]
    else:
        parts = [_PAREN_RE.sub("", p).strip() for p in _split_names(content)]
    return [p for p in parts if p]


def _stub_extract(chunk_text: str) -> str:
    """Rule-based extraction over rendered-record sections and verb patterns."""
    entities: dict[str, str] = {}
    relations: list[dict[str, str]] = []

    def add_entity(name: str, category: Category) -> str:
        name = name.strip()
        norm = normalize_name(name)
        if norm and norm not in entities:
            entities[norm] = json.dumps({"name": name, "category": category.value})
        return name

    by_category: dict[Category, list[str]] = {}
    for line in chunk_text.splitlines():
        header, sep, content = line.partition(":")
        cat = _HEADER_TO_CATEGORY.get(header.strip())
        if not sep or cat is None:
            continue
        for name in _section_names(cat, content):
            add_entity(name, cat)
            by_category.setdefault(cat, []).append(name)

    hub = (by_category.get(Category.RECOMMENDED_FORMULAS) or [None])[0]
    if hub:
        for cat, label in _FORMULA_LINK_LABEL.items():
            for name in by_category.get(cat, []):
                relations.append({"src": hub, "dst": name, "label": label})

    # entities listed together in one section co-occur (intra-category ties)
    for names in by_category.values():
        for i in range(len(names)):
            for j in range(i + 1, len(names)):
                relations.append(
                    {"src": names[i], "dst": names[j], "label": "co_occurs_with"}
                )

    for m in _TREATS_RE.finditer(chunk_text):
        src = _PAREN_RE.sub("", m.group("src").split(":")[-1]).strip()
        dst = m.group("dst").strip().rstrip(".")
        if not src or not dst or normalize_name(src) == normalize_name(dst):
            continue
        add_entity(src, Category.HERBAL_INGREDIENTS)
        add_entity(dst, Category.DISEASES)
        relations.append({"src": src, "dst": dst, "label": "treats"})

    uniq = []
    seen = set()
    for rel in relations:
        key = (normalize_name(rel["src"]), normalize_name(rel["dst"]), rel["label"])
        if key not in seen and key[0] != key[1]:
            seen.add(key)
            uniq.append(rel)
    return json.dumps(
        {"entities": [json.loads(e) for e in entities.values()], "relations": uniq},
        ensure_ascii=False,
    )


def _answer_sections(retrieved: str) -> list[tuple[str, str]]:
    """Split a reduced global answer into per-category section contents."""
    blocks: dict[str, str] = {}
    for line in retrieved.splitlines():
        m = re.match(r"\[([a-z_]+)\]\s*(.*)", line)
        if m:
            blocks.setdefault(m.group(1), m.group(2))
    sections = []
    for cat in CATEGORY_ORDER:
        content = blocks.get(cat.value, "").strip()
        sections.append((SECTION_HEADERS[cat], content or "not covered by retrieval"))
    return sections


def _render_answer(sections: list[tuple[str, str]]) -> str:
    return "\n".join(f"{header}: {content}" for header, content in sections)


@dataclass
class StubGenerator:
    name: str = "stub-template"
    max_output_tokens: int = 2048
    temperature: float = 0.0
    seed: int = 0
    force_identical_pair: bool = False  # test hook for the degenerate-pair path

    def generate(self, prompt: str, params: GenerationParams | None = None) -> str:
        if not prompt.strip():
            raise InvalidInput("empty prompt")
        role = prompts.role_of(prompt)
        payload = prompts.payload_of(prompt)
        if role == prompts.EXTRACT:
            passage = payload.partition("PASSAGE:\n")[2]
            return _stub_extract(passage)
        if role == prompts.SUMMARIZE:
            category = prompts.payload_field(payload, "CATEGORY")
            members = _split_names(prompts.payload_field(payload, "MEMBERS"))
            text = f"[{category}] members: " + ", ".join(members)
            if category == Category.HERBAL_INGREDIENTS.value:
                text += (
                    ". Composition of sovereign (monarch), minister, assistant, "
                    "courier herbs and their synergies."
                )
            return text
        if role == prompts.MAP:
            variant = prompts.payload_field(payload, "VARIANT")
            summary = prompts.payload_field(payload, "SUMMARY")
            return f"{summary} (focus {variant})"
        if role == prompts.REDUCE:
            lines = [l for l in payload.splitlines() if l.startswith("[")]
            return "\n".join(lines)
        if role == prompts.EXPAND:
            return prompts.payload_field(payload, "QUERY")
        if role == prompts.ANSWER:
            retrieved = payload.partition("RETRIEVED: ")[2]
            return _render_answer(_answer_sections(retrieved))
        if role == prompts.PAIR:
            return self._pair_reply(payload)
        head = " ".join(payload.split())[:200]
        return f"[UNTAGGED] {head}"

    def _pair_reply(self, payload: str) -> str:
        retrieved = payload.partition("RETRIEVED: ")[2].partition("\nProduce two")[0]
        sections = _answer_sections(retrieved)
        full = _render_answer(sections)
        partial = full if self.force_identical_pair else _render_answer(sections[:2])
        return json.dumps(
            {
                "answers": [
                    {"text": full, "score": float(len(sections))},
                    {"text": partial, "score": float(2 if not self.force_identical_pair else len(sections))},
                ]
            },
            ensure_ascii=False,
        )

    def generate_scored_pair(self, prompt: str) -> tuple[str, str, float, float]:
        if not prompt.strip():
            raise InvalidInput("empty prompt")
        reply = prompts.parse_json_reply(self.generate(prompt))
        answers = sorted(reply["answers"], key=lambda a: -float(a["score"]))
        text_w, text_l = answers[0]["text"], answers[1]["text"]
        if text_w == text_l:
            raise DegeneratePair("generator returned identical texts")
        return text_w, text_l, float(answers[0]["score"]), float(answers[1]["score"])
