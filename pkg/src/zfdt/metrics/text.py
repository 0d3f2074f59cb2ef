"""Corpus-free text overlap metrics: smoothed BLEU-4 and averaged ROUGE."""

from __future__ import annotations

import math
from collections import Counter

from ..corpus import tokenize
from ..errors import InvalidInput


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidate: str, references: list[str]) -> float:
    """BLEU-4, uniform n-gram weights, brevity penalty, add-one smoothing.

    A zero n-gram match count is smoothed to ``1 / (total + 1)``; orders longer
    than the candidate are skipped as vacuously satisfied.
    """
    if not candidate.strip():
        raise InvalidInput("empty candidate")
    if not references:
        raise InvalidInput("at least one reference required")
    cand = tokenize(candidate)
    refs = [tokenize(r) for r in references]
    log_sum = 0.0
    for n in range(1, 5):
        total = len(cand) - n + 1
        if total <= 0:
            continue
        cand_counts = _ngrams(cand, n)
        max_ref: Counter = Counter()
        for ref in refs:
            for gram, count in _ngrams(ref, n).items():
                max_ref[gram] = max(max_ref[gram], count)
        matched = sum(min(count, max_ref[gram]) for gram, count in cand_counts.items())
        p = matched / total if matched > 0 else 1.0 / (total + 1)
        log_sum += 0.25 * math.log(p)
    c = len(cand)
    r = min((len(ref) for ref in refs), key=lambda L: (abs(L - c), L))
    brevity = 1.0 if c >= r else math.exp(1.0 - r / c)
    return brevity * math.exp(log_sum)


def _f1(matched: float, len_candidate: int, len_reference: int) -> float:
    if matched == 0 or len_candidate == 0 or len_reference == 0:
        return 0.0
    precision = matched / len_candidate
    recall = matched / len_reference
    return 2.0 * precision * recall / (precision + recall)


def _lcs_length(a: list[str], b: list[str]) -> int:
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_s(candidate: str, reference: str) -> float:
    """Arithmetic mean of ROUGE-1, ROUGE-2 and ROUGE-L F1 scores."""
    if not candidate.strip() or not reference.strip():
        raise InvalidInput("candidate and reference must be non-empty")
    cand, ref = tokenize(candidate), tokenize(reference)
    scores = []
    for n in (1, 2):
        overlap = sum((_ngrams(cand, n) & _ngrams(ref, n)).values())
        scores.append(_f1(overlap, max(len(cand) - n + 1, 0), max(len(ref) - n + 1, 0)))
    scores.append(_f1(_lcs_length(cand, ref), len(cand), len(ref)))
    return sum(scores) / 3.0
