"""OPLEX: network parameter-space extraction and comparison from YANG models.

The pipeline has four stages: parse YANG sources into statement trees,
resolve them into expanded schema trees, extract countable parameter
records into a catalog, and compute dimension scores for architecture
profiles.  A second frontend ingests RFC 8340 tree diagrams and feeds the
same record stream, which lets the two paths cross-validate each other.
"""

from .errors import OplexError, SourceError

__all__ = ["OplexError", "SourceError"]

__version__ = "0.1.0"
