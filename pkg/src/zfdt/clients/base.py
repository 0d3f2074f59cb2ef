"""Encoder and generator abstractions shared by every pipeline stage."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np


@dataclass(frozen=True)
class GenerationParams:
    temperature: float = 0.0
    seed: int = 0
    max_output_tokens: int = 1024


@runtime_checkable
class Encoder(Protocol):
    """Maps text to a fixed-dimension vector, deterministically per input."""

    name: str
    dimension: int

    def encode(self, text: str) -> np.ndarray: ...


@runtime_checkable
class Generator(Protocol):
    """Produces text from a role-tagged prompt."""

    name: str
    max_output_tokens: int
    temperature: float

    def generate(self, prompt: str, params: GenerationParams | None = None) -> str: ...

    def generate_scored_pair(self, prompt: str) -> tuple[str, str, float, float]:
        """Return (text_w, text_l, score_w, score_l) with score_w >= score_l."""
        ...
