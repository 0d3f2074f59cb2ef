"""Engine configuration with paper-stated defaults where they exist."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .errors import ConfigError


@dataclass(frozen=True)
class Config:
    chunk_size: int = 512
    top_k: int = 2
    beam_width: int = 3
    resolution: float = 1.0
    max_iterations: int = 50
    min_gain_epsilon: float = 1e-7
    seed: int = 42
    encoder_dimension: int = 128
    endpoint: str | None = None  # base URL of a remote client; None means stub
    model: str = "stub"
    api_key_env: str = "ZFDT_API_KEY"
    stub: bool = True  # force deterministic clients
    judge: str = "deterministic"  # or "generator"
    beta: float = 0.2

    def __post_init__(self):
        if self.chunk_size < 16:
            raise ConfigError("chunk_size must be at least 16")
        if self.top_k < 1:
            raise ConfigError("top_k must be at least 1")
        if self.beam_width < 1:
            raise ConfigError("beam_width must be at least 1")

    def to_dict(self) -> dict:
        return asdict(self)

    def with_overrides(self, **kwargs) -> "Config":
        kwargs = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **kwargs) if kwargs else self


def load_config(path: str | Path | None) -> Config:
    if path is None:
        return Config()
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    known = {f for f in Config.__dataclass_fields__}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return Config(**data)
