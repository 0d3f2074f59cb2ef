"""Structured formula records: ingestion, rendering, and token chunking.

Input format is UTF-8 JSONL, one record per line with keys ``disease``,
``formula``, ``ingredients`` (array of ``{name, role?, dose?}``), ``symptoms``,
``pulse_tongue``, ``contraindications``, ``preparation`` and an optional
``conflict_tag``. Records render to a fixed-order labeled-section document so
that chunk boundaries are reproducible.
"""

from __future__ import annotations

import enum
import hashlib
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .errors import EmptyCorpus, InvalidInput, ParseError, SchemaError
from .taxonomy import SECTION_HEADERS, Category


class Role(enum.Enum):
    SOVEREIGN = "sovereign"
    MINISTER = "minister"
    ASSISTANT = "assistant"
    COURIER = "courier"
    UNASSIGNED = "unassigned"


class ConflictTag(enum.Enum):
    THEORY_DIFFERENCE = "theory_difference"
    SOURCE_CONFLICT = "source_conflict"
    PRACTICAL_PROBLEM = "practical_problem"


@dataclass(frozen=True)
class Ingredient:
    name: str
    role: Role = Role.UNASSIGNED
    dose: str | None = None


@dataclass(frozen=True)
class FormulaRecord:
    disease: str
    recommended_formula: str
    herbal_ingredients: tuple[Ingredient, ...]
    symptoms_population: str = ""
    pulse_tongue: str = ""
    contraindications: str = ""
    preparation: str = ""
    conflict_tag: ConflictTag | None = None


@dataclass(frozen=True)
class Chunk:
    chunk_id: int
    source_record_id: int
    token_span: tuple[int, int]
    text: str
    token_count: int


@dataclass(frozen=True)
class Corpus:
    records: tuple[FormulaRecord, ...]
    provenance: str  # sha256 of the source bytes

    def __len__(self) -> int:
        return len(self.records)


_JSON_KEYS = {
    "disease": str,
    "formula": str,
    "ingredients": list,
    "symptoms": str,
    "pulse_tongue": str,
    "contraindications": str,
    "preparation": str,
}


def _record_from_json(obj: dict, line_no: int) -> FormulaRecord:
    for key, typ in _JSON_KEYS.items():
        if key in ("symptoms", "pulse_tongue", "contraindications", "preparation"):
            continue  # optional free-text elements may be absent or empty
        if key not in obj or not isinstance(obj[key], typ) or not obj[key]:
            raise SchemaError(key, line_no)
    ingredients = []
    for item in obj["ingredients"]:
        if not isinstance(item, dict) or not item.get("name"):
            raise SchemaError("ingredients", line_no)
        try:
            role = Role(item.get("role", "unassigned"))
        except ValueError:
            raise SchemaError("ingredients.role", line_no)
        ingredients.append(Ingredient(item["name"], role, item.get("dose")))
    tag = None
    if obj.get("conflict_tag") is not None:
        try:
            tag = ConflictTag(obj["conflict_tag"])
        except ValueError:
            raise SchemaError("conflict_tag", line_no)
    return FormulaRecord(
        disease=obj["disease"],
        recommended_formula=obj["formula"],
        herbal_ingredients=tuple(ingredients),
        symptoms_population=obj.get("symptoms", "") or "",
        pulse_tongue=obj.get("pulse_tongue", "") or "",
        contraindications=obj.get("contraindications", "") or "",
        preparation=obj.get("preparation", "") or "",
        conflict_tag=tag,
    )


def record_to_json(record: FormulaRecord) -> dict:
    obj = {
        "disease": record.disease,
        "formula": record.recommended_formula,
        "ingredients": [
            {
                "name": ing.name,
                **({"role": ing.role.value} if ing.role is not Role.UNASSIGNED else {}),
                **({"dose": ing.dose} if ing.dose else {}),
            }
            for ing in record.herbal_ingredients
        ],
        "symptoms": record.symptoms_population,
        "pulse_tongue": record.pulse_tongue,
        "contraindications": record.contraindications,
        "preparation": record.preparation,
    }
    if record.conflict_tag is not None:
        obj["conflict_tag"] = record.conflict_tag.value
    return obj


def ingest(path: str | Path) -> Corpus:
    """Load and validate a JSONL corpus; invalid records abort with line numbers."""
    path = Path(path)
    data = path.read_bytes()
    records = []
    for line_no, raw in enumerate(data.decode("utf-8").splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed JSON ({exc.msg})", line_no)
        if not isinstance(obj, dict):
            raise ParseError("record is not an object", line_no)
        records.append(_record_from_json(obj, line_no))
    return Corpus(records=tuple(records), provenance=hashlib.sha256(data).hexdigest())


def _render_ingredient(ing: Ingredient) -> str:
    if ing.dose:
        return f"{ing.name} ({ing.role.value}, {ing.dose})"
    if ing.role is not Role.UNASSIGNED:
        return f"{ing.name} ({ing.role.value})"
    return ing.name


_ING_RE = re.compile(r"^(?P<name>.*?)(?:\s*\((?P<role>[a-z]+)(?:,\s*(?P<dose>[^)]*))?\))?$")


def _parse_ingredient(text: str) -> Ingredient:
    m = _ING_RE.match(text.strip())
    name = m.group("name").strip()
    role = Role(m.group("role")) if m.group("role") else Role.UNASSIGNED
    return Ingredient(name, role, m.group("dose"))


def render_record(record: FormulaRecord) -> str:
    """Concatenate the seven elements in fixed order with labeled headers."""
    lines = [
        f"{SECTION_HEADERS[Category.DISEASES]}: {record.disease}",
        f"{SECTION_HEADERS[Category.RECOMMENDED_FORMULAS]}: {record.recommended_formula}",
        f"{SECTION_HEADERS[Category.HERBAL_INGREDIENTS]}: "
        + "; ".join(_render_ingredient(i) for i in record.herbal_ingredients),
        f"{SECTION_HEADERS[Category.SYMPTOMS_POPULATION]}: {record.symptoms_population}",
        f"{SECTION_HEADERS[Category.PULSE_TONGUE]}: {record.pulse_tongue}",
        f"{SECTION_HEADERS[Category.CONTRAINDICATIONS]}: {record.contraindications}",
        f"{SECTION_HEADERS[Category.PREPARATION_METHODS]}: {record.preparation}",
    ]
    if record.conflict_tag is not None:
        lines.append(f"Conflict Tag: {record.conflict_tag.value}")
    return "\n".join(lines)


def parse_rendered(text: str) -> FormulaRecord:
    """Inverse of :func:`render_record` for canonical rendered documents."""
    sections = parse_sections(text)
    missing = [c for c in (Category.DISEASES, Category.RECOMMENDED_FORMULAS) if c not in sections]
    if missing:
        raise InvalidInput(f"rendered record lacks section {missing[0].value}")
    ingredients = tuple(
        _parse_ingredient(part)
        for part in sections.get(Category.HERBAL_INGREDIENTS, "").split(";")
        if part.strip()
    )
    if not ingredients:
        raise InvalidInput("rendered record lacks ingredients")
    tag = None
    for line in text.splitlines():
        if line.startswith("Conflict Tag: "):
            tag = ConflictTag(line[len("Conflict Tag: ") :].strip())
    return FormulaRecord(
        disease=sections[Category.DISEASES],
        recommended_formula=sections[Category.RECOMMENDED_FORMULAS],
        herbal_ingredients=ingredients,
        symptoms_population=sections.get(Category.SYMPTOMS_POPULATION, ""),
        pulse_tongue=sections.get(Category.PULSE_TONGUE, ""),
        contraindications=sections.get(Category.CONTRAINDICATIONS, ""),
        preparation=sections.get(Category.PREPARATION_METHODS, ""),
        conflict_tag=tag,
    )


_HEADER_TO_CATEGORY = {header: cat for cat, header in SECTION_HEADERS.items()}


def parse_sections(text: str) -> dict[Category, str]:
    """Map labeled sections of a rendered document or answer to categories."""
    out: dict[Category, str] = {}
    for line in text.splitlines():
        header, sep, content = line.partition(":")
        cat = _HEADER_TO_CATEGORY.get(header.strip())
        if sep and cat is not None and cat not in out:
            out[cat] = content.strip()
    return out


def _is_cjk(ch: str) -> bool:
    code = ord(ch)
    return (
        0x4E00 <= code <= 0x9FFF
        or 0x3400 <= code <= 0x4DBF
        or 0xF900 <= code <= 0xFAFF
        or 0x3040 <= code <= 0x30FF
    )


def _default_token_spans(text: str) -> list[tuple[int, int]]:
    """Spans of tokens: whitespace-delimited runs, CJK codepoints singled out."""
    spans = []
    start = None
    for i, ch in enumerate(text):
        if ch.isspace():
            if start is not None:
                spans.append((start, i))
                start = None
        elif _is_cjk(ch):
            if start is not None:
                spans.append((start, i))
                start = None
            spans.append((i, i + 1))
        elif start is None:
            start = i
    if start is not None:
        spans.append((start, len(text)))
    return spans


Tokenizer = Callable[[str], list[tuple[int, int]]]

TOKENIZERS: dict[str, Tokenizer] = {"default": _default_token_spans}


def tokenize(text: str, tokenizer_id: str = "default") -> list[str]:
    return [text[a:b] for a, b in TOKENIZERS[tokenizer_id](text)]


def chunk(
    corpus: Corpus, chunk_size: int = 512, tokenizer_id: str = "default"
) -> list[Chunk]:
    """Split each rendered record into contiguous chunks of ``chunk_size`` tokens.

    Chunk texts of one record concatenate back to the rendered text exactly;
    every chunk except possibly the last per record holds ``chunk_size`` tokens.
    """
    if chunk_size < 16:
        raise InvalidInput("chunk_size must be at least 16")
    if not corpus.records:
        raise EmptyCorpus("corpus has no records")
    spans_of = TOKENIZERS[tokenizer_id]
    chunks: list[Chunk] = []
    for record_id, record in enumerate(corpus.records):
        text = render_record(record)
        spans = spans_of(text)
        if not spans:
            continue
        cuts = [0]
        for t in range(chunk_size, len(spans), chunk_size):
            cuts.append(spans[t][0])
        cuts.append(len(text))
        for i in range(len(cuts) - 1):
            lo, hi = i * chunk_size, min((i + 1) * chunk_size, len(spans))
            chunks.append(
                Chunk(
                    chunk_id=len(chunks),
                    source_record_id=record_id,
                    token_span=(lo, hi),
                    text=text[cuts[i] : cuts[i + 1]],
                    token_count=hi - lo,
                )
            )
    return chunks
