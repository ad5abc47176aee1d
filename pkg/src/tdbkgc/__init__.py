"""Block-term tensor-decomposition models for knowledge graph completion."""

__version__ = "0.1.0"
