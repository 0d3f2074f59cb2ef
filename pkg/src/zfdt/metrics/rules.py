"""Herb-pair compatibility rule tables (incompatible / antagonistic sets)."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from ..errors import InvalidInput, IoError
from ..taxonomy import normalize_name


def _norm_pair(a: str, b: str) -> tuple[str, str]:
    a, b = normalize_name(a), normalize_name(b)
    if not a or not b:
        raise InvalidInput("rule pair has an empty herb name")
    if a == b:
        raise InvalidInput(f"self-pair {a!r} is not a valid rule")
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class RuleTable:
    incompatible_pairs: frozenset[tuple[str, str]] = frozenset()
    antagonistic_pairs: frozenset[tuple[str, str]] = frozenset()

    @classmethod
    def from_pairs(
        cls,
        incompatible: list[tuple[str, str]] = (),
        antagonistic: list[tuple[str, str]] = (),
    ) -> "RuleTable":
        return cls(
            frozenset(_norm_pair(a, b) for a, b in incompatible),
            frozenset(_norm_pair(a, b) for a, b in antagonistic),
        )

    def forbidden(self, a: str, b: str) -> bool:
        pair = _norm_pair(a, b)
        return pair in self.incompatible_pairs or pair in self.antagonistic_pairs


def load_rule_table(path: str | Path) -> RuleTable:
    """Parse a tab-separated pair file.

    Each non-comment line is ``herbA<TAB>herbB`` with an optional third field
    ``incompatible`` (default) or ``antagonistic``.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"rule table load failed: {exc}")
    incompatible, antagonistic = [], []
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = stripped.split("\t")
        if len(fields) < 2:
            raise InvalidInput(f"rule table line {line_no}: expected herbA<TAB>herbB")
        kind = fields[2].strip() if len(fields) > 2 else "incompatible"
        if kind == "antagonistic":
            antagonistic.append((fields[0], fields[1]))
        else:
            incompatible.append((fields[0], fields[1]))
    return RuleTable.from_pairs(incompatible, antagonistic)
