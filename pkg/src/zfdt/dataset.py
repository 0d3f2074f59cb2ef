"""Instruction-dataset construction and JSONL export.

SFT lines carry exactly the keys ``instruction``/``input``/``output``; DPO
lines carry ``instruction``/``input``/``chosen``/``rejected``. Pair scores are
build-time metadata and are not part of the canonical file format.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .clients import prompts
from .clients.base import Generator
from .corpus import ConflictTag
from .errors import InvalidInput, IoError

INSTRUCTION_TEXT = prompts.INSTRUCTION_TEXT

SYMPTOMS_DELIMITER = "[SYMPTOMS]"
RETRIEVED_DELIMITER = "[RETRIEVED]"

#: Warning template appended to the output of conflict-scenario records.
CONFLICT_WARNINGS: dict[ConflictTag, str] = {
    ConflictTag.THEORY_DIFFERENCE: (
        "Warning: medical theories differ on this case (for example classical "
        "versus modern schools, or TCM versus Western practice); present the "
        "alternatives rather than a single authoritative answer."
    ),
    ConflictTag.SOURCE_CONFLICT: (
        "Warning: information sources conflict for this formula (for example "
        "older texts versus current safety findings, or regional practice "
        "differences); verify against up-to-date references."
    ),
    ConflictTag.PRACTICAL_PROBLEM: (
        "Warning: practical constraints apply (for example individual "
        "constitution or local regulations may rule out this recommendation); "
        "individualized professional assessment is required."
    ),
}


@dataclass(frozen=True)
class SftRecord:
    instruction: str
    input: str
    output: str


@dataclass(frozen=True)
class DpoRecord:
    instruction: str
    input: str
    chosen: str
    rejected: str
    score_w: float = 0.0
    score_l: float = 0.0


@dataclass(frozen=True)
class ConflictRecord:
    base: SftRecord
    conflict_type: ConflictTag
    warning_text: str


def format_input(x: str, c: str) -> str:
    return f"{SYMPTOMS_DELIMITER}\n{x}\n{RETRIEVED_DELIMITER}\n{c}"


def split_input(text: str) -> tuple[str, str]:
    """Recover (x, c) from a record input; inverse of :func:`format_input`."""
    if not text.startswith(SYMPTOMS_DELIMITER + "\n"):
        raise InvalidInput("input does not start with the symptoms delimiter")
    rest = text[len(SYMPTOMS_DELIMITER) + 1 :]
    x, sep, c = rest.partition("\n" + RETRIEVED_DELIMITER + "\n")
    if not sep:
        raise InvalidInput("input lacks the retrieved delimiter")
    return x, c


def build_sft_record(x: str, c: str, y: str) -> SftRecord:
    if not x.strip() or not c.strip() or not y.strip():
        raise InvalidInput("x, c, and y must all be non-empty")
    return SftRecord(INSTRUCTION_TEXT, format_input(x, c), y)


def build_conflict_record(x: str, c: str, y: str, conflict_type: ConflictTag) -> ConflictRecord:
    warning = CONFLICT_WARNINGS[conflict_type]
    base = build_sft_record(x, c, y.rstrip() + "\n" + warning)
    return ConflictRecord(base, conflict_type, warning)


def build_dpo_record(x: str, c: str, generator: Generator) -> DpoRecord:
    if not x.strip() or not c.strip():
        raise InvalidInput("x and c must be non-empty")
    text_w, text_l, score_w, score_l = generator.generate_scored_pair(
        prompts.pair_prompt(x, c)
    )
    return DpoRecord(INSTRUCTION_TEXT, format_input(x, c), text_w, text_l, score_w, score_l)


def _to_line(record: SftRecord | DpoRecord | ConflictRecord) -> dict:
    if isinstance(record, ConflictRecord):
        record = record.base
    if isinstance(record, SftRecord):
        return {
            "instruction": record.instruction,
            "input": record.input,
            "output": record.output,
        }
    return {
        "instruction": record.instruction,
        "input": record.input,
        "chosen": record.chosen,
        "rejected": record.rejected,
    }


def export(records: list, path: str | Path, kind: str) -> None:
    """Write homogeneous records as UTF-8 JSONL."""
    if kind not in ("sft", "dpo"):
        raise InvalidInput(f"unknown dataset kind {kind!r}")
    if not records:
        raise InvalidInput("no records to export")
    expected = SftRecord if kind == "sft" else DpoRecord
    lines = []
    for record in records:
        base = record.base if isinstance(record, ConflictRecord) else record
        if not isinstance(base, expected):
            raise InvalidInput(f"record {base!r} does not match kind {kind!r}")
        lines.append(json.dumps(_to_line(record), ensure_ascii=False))
    try:
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"dataset export failed: {exc}")


def import_records(path: str | Path, kind: str) -> list[SftRecord | DpoRecord]:
    if kind not in ("sft", "dpo"):
        raise InvalidInput(f"unknown dataset kind {kind!r}")
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"dataset import failed: {exc}")
    out: list[SftRecord | DpoRecord] = []
    for line in text.splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        if kind == "sft":
            out.append(SftRecord(obj["instruction"], obj["input"], obj["output"]))
        else:
            out.append(
                DpoRecord(obj["instruction"], obj["input"], obj["chosen"], obj["rejected"])
            )
    return out
