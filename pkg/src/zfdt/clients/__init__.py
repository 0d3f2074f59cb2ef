from .base import Encoder, GenerationParams, Generator
from .remote import RemoteConfig, RemoteEncoder, RemoteGenerator
from .stub import StubEncoder, StubGenerator

__all__ = [
    "Encoder",
    "Generator",
    "GenerationParams",
    "RemoteConfig",
    "RemoteEncoder",
    "RemoteGenerator",
    "StubEncoder",
    "StubGenerator",
]
