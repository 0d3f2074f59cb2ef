"""Graph-based retrieval-augmented generation engine for formula corpora."""

__version__ = "0.1.0"
