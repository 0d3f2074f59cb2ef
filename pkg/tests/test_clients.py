import json

import httpx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zfdt.clients import (
    GenerationParams,
    RemoteConfig,
    RemoteEncoder,
    RemoteGenerator,
    StubEncoder,
    StubGenerator,
)
from zfdt.clients import prompts
from zfdt.errors import ClientError, DegeneratePair, DimensionError, InvalidInput, RetryableError


class TestStubEncoder:
    def test_deterministic_and_unit_norm(self):
        enc = StubEncoder(dimension=8)
        first = enc.encode("a")
        second = enc.encode("a")
        assert first.shape == (8,)
        assert np.array_equal(first, second)
        assert abs(np.linalg.norm(first) - 1.0) <= 1e-9

    def test_empty_text_rejected(self):
        with pytest.raises(InvalidInput):
            StubEncoder().encode("   ")

    def test_disjoint_trigram_strings_are_dissimilar(self):
        # regression pin: recorded from the hash-3-gram embedding of this pair
        enc = StubEncoder(dimension=64)
        a = enc.encode("halloysite decoction with coptis")
        b = enc.encode("wind-heat common cold symptoms")
        cosine = float(a @ b)
        assert cosine < 0.99
        assert cosine == pytest.approx(0.29814239699997197, abs=1e-12)

    @given(st.text(min_size=1).filter(lambda t: t.strip()))
    @settings(max_examples=60, deadline=None)
    def test_encode_is_a_pure_function(self, text):
        enc = StubEncoder(dimension=16)
        assert np.array_equal(enc.encode(text), enc.encode(text))


class TestStubGenerator:
    def test_equal_prompt_and_seed_give_identical_output(self):
        gen = StubGenerator(seed=3)
        prompt = prompts.expand_prompt("night sweats")
        assert gen.generate(prompt) == gen.generate(prompt)

    def test_empty_prompt_rejected(self):
        with pytest.raises(InvalidInput):
            StubGenerator().generate("")

    def test_extract_grammar_on_treats_sentence(self):
        reply = StubGenerator().generate(
            prompts.extract_prompt("Halloysite treats intestinal wind bleeding")
        )
        parsed = json.loads(reply)
        names = {e["name"].lower(): e["category"] for e in parsed["entities"]}
        assert names["halloysite"] == "herbal_ingredients"
        assert names["intestinal wind bleeding"] == "diseases"
        assert {
            (r["src"].lower(), r["dst"].lower(), r["label"]) for r in parsed["relations"]
        } == {("halloysite", "intestinal wind bleeding", "treats")}

    def test_reduce_is_ordered_concatenation(self):
        gen = StubGenerator()
        prompt = prompts.reduce_prompt(
            [("diseases", "first local answer"), ("preparation_methods", "second one")]
        )
        out = gen.generate(prompt)
        assert out == "[diseases] first local answer\n[preparation_methods] second one"

    def test_scored_pair_orders_by_score(self):
        gen = StubGenerator()
        text_w, text_l, score_w, score_l = gen.generate_scored_pair(
            prompts.pair_prompt("fatigue", "[diseases] something")
        )
        assert score_w >= score_l
        assert text_w != text_l
        assert text_w.count("\n") > text_l.count("\n")  # fuller answer wins

    def test_identical_pair_raises(self):
        gen = StubGenerator(force_identical_pair=True)
        with pytest.raises(DegeneratePair):
            gen.generate_scored_pair(prompts.pair_prompt("fatigue", "[diseases] x"))


def _transport(handler):
    return httpx.MockTransport(handler)


def _completion(text: str) -> dict:
    return {"choices": [{"message": {"content": text}}]}


class TestRemoteGenerator:
    def _gen(self, handler, **kwargs) -> RemoteGenerator:
        config = RemoteConfig(base_url="http://llm.test", model="m1", backoff_seconds=0.0)
        return RemoteGenerator(config, transport=_transport(handler), sleeper=lambda s: None, **kwargs)

    def test_success_round_trip(self):
        def handler(request):
            body = json.loads(request.content)
            assert body["model"] == "m1"
            assert body["messages"][0]["content"] == "hello"
            return httpx.Response(200, json=_completion("world"))

        assert self._gen(handler).generate("hello") == "world"

    def test_unreachable_raises_client_error_after_retries(self):
        calls = []

        def handler(request):
            calls.append(1)
            raise httpx.ConnectError("refused")

        with pytest.raises(ClientError) as excinfo:
            self._gen(handler).generate("hello")
        assert excinfo.value.attempts == 3
        assert len(calls) == 3

    def test_rate_limit_raises_retryable(self):
        def handler(request):
            return httpx.Response(429, json={})

        with pytest.raises(RetryableError):
            self._gen(handler).generate("hello")

    def test_rejection_is_immediate(self):
        calls = []

        def handler(request):
            calls.append(1)
            return httpx.Response(401, json={})

        with pytest.raises(ClientError):
            self._gen(handler).generate("hello")
        assert len(calls) == 1

    def test_empty_completion_is_an_error(self):
        def handler(request):
            return httpx.Response(200, json=_completion(""))

        with pytest.raises(ClientError):
            self._gen(handler).generate("hello")

    def test_scored_pair_from_recorded_transcript(self):
        transcript = json.dumps(
            {
                "answers": [
                    {"text": "short answer", "score": 2.0},
                    {"text": "a much more complete answer", "score": 6.5},
                ]
            }
        )

        def handler(request):
            return httpx.Response(200, json=_completion(transcript))

        text_w, text_l, score_w, score_l = self._gen(handler).generate_scored_pair("PAIR?")
        assert (text_w, score_w) == ("a much more complete answer", 6.5)
        assert (text_l, score_l) == ("short answer", 2.0)


class TestRemoteEncoder:
    def _enc(self, handler, dimension=4) -> RemoteEncoder:
        config = RemoteConfig(base_url="http://emb.test", model="e1", backoff_seconds=0.0)
        return RemoteEncoder(config, dimension=dimension, transport=_transport(handler), sleeper=lambda s: None)

    def test_embedding_round_trip(self):
        def handler(request):
            return httpx.Response(200, json={"data": [{"embedding": [1.0, 0.0, 0.0, 0.5]}]})

        vec = self._enc(handler).encode("text")
        assert vec.tolist() == [1.0, 0.0, 0.0, 0.5]

    def test_dimension_mismatch(self):
        def handler(request):
            return httpx.Response(200, json={"data": [{"embedding": [1.0, 2.0]}]})

        with pytest.raises(DimensionError):
            self._enc(handler).encode("text")


def test_generation_params_defaults():
    params = GenerationParams()
    assert params.temperature == 0.0 and params.seed == 0


class TestRemoteAuthAndBackoff:
    def test_bearer_token_read_from_named_env_var(self, monkeypatch):
        monkeypatch.setenv("MY_CUSTOM_KEY", "secret-token")
        seen = {}

        def handler(request):
            seen["auth"] = request.headers.get("authorization")
            return httpx.Response(200, json=_completion("ok"))

        config = RemoteConfig(
            base_url="http://llm.test", model="m1", api_key_env="MY_CUSTOM_KEY",
            backoff_seconds=0.0,
        )
        gen = RemoteGenerator(config, transport=_transport(handler), sleeper=lambda s: None)
        gen.generate("hello")
        assert seen["auth"] == "Bearer secret-token"

    def test_exponential_backoff_sequence(self):
        sleeps = []

        def handler(request):
            raise httpx.ConnectError("refused")

        config = RemoteConfig(base_url="http://llm.test", model="m1", backoff_seconds=0.25)
        gen = RemoteGenerator(config, transport=_transport(handler), sleeper=sleeps.append)
        with pytest.raises(ClientError):
            gen.generate("hello")
        assert sleeps == [0.25, 0.5]  # doubling, no sleep after the last attempt


class TestRemoteExpansionTranscript:
    def test_expand_query_with_recorded_paraphrase(self):
        from zfdt.retrieval import expand_query

        def handler(request):
            return httpx.Response(
                200, json=_completion("night sweats; also called sleep hyperhidrosis")
            )

        config = RemoteConfig(base_url="http://llm.test", model="m1", backoff_seconds=0.0)
        gen = RemoteGenerator(config, transport=_transport(handler), sleeper=lambda s: None)
        query = expand_query("night sweats", gen)
        assert query.original == "night sweats"
        assert query.expanded == "night sweats; also called sleep hyperhidrosis"
        assert query.expansion_warning is None
