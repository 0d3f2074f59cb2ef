"""Role-tagged prompt construction and response parsing.

Every prompt starts with a ``[ROLE:<TAG>]`` header line so that deterministic
stub generators can dispatch on the task without natural-language parsing.
Remote models simply see the tag as part of the instruction text.
"""

from __future__ import annotations

import json
import re

from ..errors import InvalidInput

ROLE_RE = re.compile(r"^\[ROLE:([A-Z]+)\]")

EXTRACT = "EXTRACT"
SUMMARIZE = "SUMMARIZE"
MAP = "MAP"
REDUCE = "REDUCE"
EXPAND = "EXPAND"
ANSWER = "ANSWER"
PAIR = "PAIR"

#: Instruction line used for supervised fine-tuning records and final answers.
INSTRUCTION_TEXT = (
    "Recommend a TCM formula and provide detailed explanations based on the symptoms"
)

#: Fixed advisory appended to every generated answer.
SAFETY_DISCLAIMER = (
    "Important Note: The prescription recommendations provided are intended for "
    "reference purposes only and should not be used without professional "
    "supervision. Proper Traditional Chinese Medicine practice requires "
    "individualized syndrome differentiation and treatment. For optimal safety "
    "and efficacy, please consult a qualified TCM practitioner when using this "
    "software."
)


def role_of(prompt: str) -> str | None:
    m = ROLE_RE.match(prompt)
    return m.group(1) if m else None


def payload_of(prompt: str) -> str:
    header, _, rest = prompt.partition("\n")
    if not ROLE_RE.match(header):
        return prompt
    return rest


def _tagged(tag: str, body: str) -> str:
    return f"[ROLE:{tag}]\n{body}"


def extract_prompt(chunk_text: str) -> str:
    if not chunk_text.strip():
        raise InvalidInput("empty chunk text")
    body = (
        "Extract every entity and the relations between them from the passage "
        "below. Label each entity with one of: diseases, recommended_formulas, "
        "herbal_ingredients, symptoms_population, pulse_tongue, "
        "contraindications, preparation_methods, unknown. Reply with JSON "
        '{"entities": [{"name", "category"}], '
        '"relations": [{"src", "dst", "label"}]}.\n'
        "PASSAGE:\n" + chunk_text
    )
    return _tagged(EXTRACT, body)


def summarize_prompt(category: str, member_names: list[str]) -> str:
    body = (
        f"CATEGORY: {category}\n"
        "MEMBERS: " + "; ".join(member_names) + "\n"
        "Write a short description of this community naming its members."
    )
    return _tagged(SUMMARIZE, body)


def map_prompt(category: str, summary: str, original: str, expanded: str, variant: int) -> str:
    body = (
        f"CATEGORY: {category}\n"
        f"VARIANT: {variant}\n"
        f"QUERY: {original}\n"
        f"EXPANDED: {expanded}\n"
        f"SUMMARY: {summary}\n"
        "Answer the query using only this community summary."
    )
    return _tagged(MAP, body)


def reduce_prompt(sections: list[tuple[str, str]]) -> str:
    blocks = "\n".join(f"[{cat}] {text}" for cat, text in sections)
    body = "Synthesize the local answers below into one global answer.\n" + blocks
    return _tagged(REDUCE, body)


def expand_prompt(query: str) -> str:
    body = f"QUERY: {query}\nParaphrase and augment the query for retrieval."
    return _tagged(EXPAND, body)


def answer_prompt(original: str, expanded: str, global_answer: str) -> str:
    body = (
        f"{INSTRUCTION_TEXT}\n"
        f"SYMPTOMS: {original}\n"
        f"EXPANDED: {expanded}\n"
        f"RETRIEVED: {global_answer}"
    )
    return _tagged(ANSWER, body)


def pair_prompt(original: str, global_answer: str) -> str:
    body = (
        f"SYMPTOMS: {original}\n"
        f"RETRIEVED: {global_answer}\n"
        "Produce two candidate answers and score each for quality. Reply with "
        'JSON {"answers": [{"text", "score"}, {"text", "score"}]}.'
    )
    return _tagged(PAIR, body)


def payload_field(payload: str, key: str) -> str:
    """Pull a single ``KEY: value`` line out of a prompt payload."""
    for line in payload.splitlines():
        if line.startswith(key + ":"):
            return line[len(key) + 1 :].strip()
    return ""


_FENCE_RE = re.compile(r"^```[a-z]*\n|\n?```$", re.MULTILINE)


def parse_json_reply(text: str) -> dict:
    """Parse a JSON object out of a model reply, tolerating code fences."""
    cleaned = _FENCE_RE.sub("", text.strip())
    start = cleaned.find("{")
    end = cleaned.rfind("}")
    if start < 0 or end <= start:
        raise ValueError("no JSON object in reply")
    return json.loads(cleaned[start : end + 1])
