import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from zfdt.clients import StubEncoder, StubGenerator
from zfdt.cli import FIXTURE_CORPUS
from zfdt.config import Config
from zfdt.engine import EngineState, build_workspace

from helpers import write_planted_corpus


@pytest.fixture
def encoder() -> StubEncoder:
    return StubEncoder(dimension=64)


@pytest.fixture
def generator() -> StubGenerator:
    return StubGenerator()


@pytest.fixture(scope="session")
def fixture_corpus_path() -> Path:
    return FIXTURE_CORPUS


@pytest.fixture(scope="session")
def engine(tmp_path_factory) -> EngineState:
    """Fixture-corpus workspace built once per test session."""
    workspace = tmp_path_factory.mktemp("workspace") / "ws"
    return build_workspace(FIXTURE_CORPUS, workspace, Config())


@pytest.fixture(scope="session")
def planted_engine(tmp_path_factory) -> EngineState:
    """Engine over the synthetic planted-entity corpus."""
    base = tmp_path_factory.mktemp("planted")
    corpus_path = base / "corpus.jsonl"
    write_planted_corpus(corpus_path, random.Random(7))
    return build_workspace(corpus_path, base / "ws", Config())
