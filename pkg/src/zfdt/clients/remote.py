"""HTTP clients speaking a chat-completion shaped wire protocol.

The endpoints are ``<base_url>/chat/completions`` and ``<base_url>/embeddings``
with bearer auth read from the environment variable named by ``api_key_env``.
Vendor-neutral: any host exposing this shape works.
"""

from __future__ import annotations

import os
import threading
import time
from dataclasses import dataclass
from typing import Callable

import httpx
import numpy as np

from ..errors import ClientError, DegeneratePair, DimensionError, InvalidInput, RetryableError
from . import prompts
from .base import GenerationParams

RETRY_STATUS = {500, 502, 503, 504}


@dataclass
class RemoteConfig:
    base_url: str
    model: str
    api_key_env: str = "ZFDT_API_KEY"
    max_retries: int = 3
    backoff_seconds: float = 0.25
    max_in_flight: int = 4
    timeout_seconds: float = 30.0


class _HttpBase:
    def __init__(
        self,
        config: RemoteConfig,
        transport: httpx.BaseTransport | None = None,
        sleeper: Callable[[float], None] = time.sleep,
    ):
        self._config = config
        self._client = httpx.Client(
            base_url=config.base_url,
            timeout=config.timeout_seconds,
            transport=transport,
        )
        self._sleep = sleeper
        self._gate = threading.BoundedSemaphore(config.max_in_flight)

    def _headers(self) -> dict[str, str]:
        key = os.environ.get(self._config.api_key_env, "")
        return {"Authorization": f"Bearer {key}"} if key else {}

    def _post(self, path: str, body: dict) -> dict:
        """POST with bounded retries; exponential backoff between attempts."""
        attempts = 0
        rate_limited = False
        last_error = "request failed"
        while attempts < self._config.max_retries:
            attempts += 1
            try:
                with self._gate:
                    resp = self._client.post(path, json=body, headers=self._headers())
            except httpx.HTTPError as exc:
                last_error = f"transport failure: {exc}"
            else:
                if resp.status_code == 200:
                    return resp.json()
                if resp.status_code == 429:
                    rate_limited = True
                    last_error = "rate limited"
                elif resp.status_code in RETRY_STATUS:
                    last_error = f"server error {resp.status_code}"
                else:
                    raise ClientError(
                        f"request rejected with status {resp.status_code}", attempts
                    )
            if attempts < self._config.max_retries:
                self._sleep(self._config.backoff_seconds * (2 ** (attempts - 1)))
        if rate_limited:
            raise RetryableError(f"{last_error} after {attempts} attempts", attempts)
        raise ClientError(f"{last_error} after {attempts} attempts", attempts)


class RemoteGenerator(_HttpBase):
    def __init__(
        self,
        config: RemoteConfig,
        max_output_tokens: int = 2048,
        temperature: float = 0.0,
        transport: httpx.BaseTransport | None = None,
        sleeper: Callable[[float], None] = time.sleep,
    ):
        super().__init__(config, transport, sleeper)
        self.name = config.model
        self.max_output_tokens = max_output_tokens
        self.temperature = temperature

    def generate(self, prompt: str, params: GenerationParams | None = None) -> str:
        if not prompt.strip():
            raise InvalidInput("empty prompt")
        body = {
            "model": self._config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature if params else self.temperature,
            "max_tokens": params.max_output_tokens if params else self.max_output_tokens,
        }
        data = self._post("/chat/completions", body)
        try:
            text = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise ClientError("malformed completion response", 1)
        if not text:
            raise ClientError("empty completion", 1)
        return text

    def generate_scored_pair(self, prompt: str) -> tuple[str, str, float, float]:
        reply = self.generate(prompt)
        try:
            parsed = prompts.parse_json_reply(reply)
            answers = sorted(parsed["answers"], key=lambda a: -float(a["score"]))[:2]
            text_w, text_l = answers[0]["text"], answers[1]["text"]
            score_w, score_l = float(answers[0]["score"]), float(answers[1]["score"])
        except (ValueError, KeyError, IndexError, TypeError):
            raise ClientError("unparseable scored-pair reply", 1)
        if text_w == text_l:
            raise DegeneratePair("generator returned identical texts")
        return text_w, text_l, score_w, score_l


class RemoteEncoder(_HttpBase):
    def __init__(
        self,
        config: RemoteConfig,
        dimension: int,
        transport: httpx.BaseTransport | None = None,
        sleeper: Callable[[float], None] = time.sleep,
    ):
        super().__init__(config, transport, sleeper)
        self.name = config.model
        self.dimension = dimension

    def encode(self, text: str) -> np.ndarray:
        if not text.strip():
            raise InvalidInput("cannot encode empty text")
        data = self._post("/embeddings", {"model": self._config.model, "input": text})
        try:
            vec = np.asarray(data["data"][0]["embedding"], dtype=np.float64)
        except (KeyError, IndexError, TypeError):
            raise ClientError("malformed embedding response", 1)
        if vec.shape != (self.dimension,):
            raise DimensionError(
                f"embedding has dimension {vec.shape[0]}, expected {self.dimension}"
            )
        return vec
