"""Retriever evaluation via pooled relevance judgments."""

from ._pooleval import (
    Chunk,
    HashedBowEmbedder,
    Span,
    bm25_search,
    cosine,
    covers_text,
    dense_search,
    evaluate,
    f_beta,
    normalize_text,
    pr_auc,
    rrf_fuse,
    segment_document,
    verify,
)

__all__ = [
    "Chunk",
    "HashedBowEmbedder",
    "Span",
    "bm25_search",
    "cosine",
    "covers_text",
    "dense_search",
    "evaluate",
    "f_beta",
    "normalize_text",
    "pr_auc",
    "rrf_fuse",
    "segment_document",
    "verify",
]

__version__ = "0.1.0"
