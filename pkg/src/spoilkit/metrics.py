"""Tokenization and overlap metrics for spoiler evaluation.

Implements ROUGE-1/2 (clipped n-gram multiset overlap), ROUGE-L (longest
common subsequence) and an embedding-based semantic score (greedy maximum
cosine matching), each reported as a precision/recall/F1 triple.

Scores are stored as raw reals in [0, 1]; report rendering multiplies by
100 (see evalrun).
"""

from __future__ import annotations

import abc
import math
import unicodedata
from collections import Counter
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MetricTriple",
    "TokenSeq",
    "EmbeddingProvider",
    "tokenize",
    "ngram_counts",
    "rouge_n",
    "rouge_l",
    "lcs_length",
    "semantic_score",
    "aggregate",
]


@dataclass(frozen=True)
class MetricTriple:
    """Precision/recall/F1 triple, the score shape shared by all metrics."""

    precision: float
    recall: float
    f1: float

    @classmethod
    def from_pr(cls, precision: float, recall: float) -> "MetricTriple":
        """Build a triple with F1 as the harmonic mean of P and R."""
        if precision + recall > 0:
            f1 = 2.0 * precision * recall / (precision + recall)
        else:
            f1 = 0.0
        return cls(precision, recall, f1)

    @classmethod
    def zero(cls) -> "MetricTriple":
        return cls(0.0, 0.0, 0.0)

    def as_dict(self) -> dict:
        return {"p": self.precision, "r": self.recall, "f": self.f1}

    @classmethod
    def from_dict(cls, d: dict) -> "MetricTriple":
        return cls(float(d["p"]), float(d["r"]), float(d["f"]))


@dataclass(frozen=True)
class TokenSeq:
    """Normalized tokens plus the character range each one came from.

    Offsets index the NFKC-normalized form of the source text.  Corpus
    ingestion normalizes all text to NFKC, so for pipeline data the offsets
    are valid indices into the stored context/answer strings.
    """

    tokens: tuple[str, ...]
    offsets: tuple[tuple[int, int], ...]

    def __len__(self) -> int:
        return len(self.tokens)

    def __post_init__(self):
        if len(self.tokens) != len(self.offsets):
            raise ValueError("tokens and offsets must have equal length")


def tokenize(text: str) -> TokenSeq:
    """Split text into lowercase alphanumeric tokens with char offsets.

    NFKC-normalizes, lowercases, and splits on any run of non-alphanumeric
    characters.  No stemming, no stopword removal.  Empty or punctuation-only
    input yields an empty TokenSeq.
    """
    text = unicodedata.normalize("NFKC", text)
    tokens: list[str] = []
    offsets: list[tuple[int, int]] = []
    start = None
    for i, ch in enumerate(text):
        if ch.isalnum():
            if start is None:
                start = i
        elif start is not None:
            tokens.append(text[start:i].lower())
            offsets.append((start, i))
            start = None
    if start is not None:
        tokens.append(text[start:].lower())
        offsets.append((start, len(text)))
    return TokenSeq(tuple(tokens), tuple(offsets))


def ngram_counts(tokens: tuple[str, ...] | list[str], n: int) -> Counter:
    """Multiset of n-grams (as tuples) in a token sequence."""
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate: TokenSeq, reference: TokenSeq, n: int) -> MetricTriple:
    """ROUGE-N: clipped n-gram multiset overlap, n in {1, 2}.

    Precision divides by the candidate n-gram count, recall by the
    reference's.  A side with zero n-grams scores 0 on its ratio.
    """
    if n not in (1, 2):
        raise ValueError(f"n must be 1 or 2, got {n!r}")
    cand = ngram_counts(candidate.tokens, n)
    ref = ngram_counts(reference.tokens, n)
    overlap = sum((cand & ref).values())
    n_cand = sum(cand.values())
    n_ref = sum(ref.values())
    precision = overlap / n_cand if n_cand else 0.0
    recall = overlap / n_ref if n_ref else 0.0
    return MetricTriple.from_pr(precision, recall)


def lcs_length(a: tuple[str, ...] | list[str], b: tuple[str, ...] | list[str]) -> int:
    """Length of the longest common subsequence of two token sequences."""
    if not a or not b:
        return 0
    # Single rolling row keeps memory at O(min side).
    if len(b) > len(a):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0] * (len(b) + 1)
        for j, y in enumerate(b, start=1):
            if x == y:
                cur[j] = prev[j - 1] + 1
            else:
                cur[j] = max(cur[j - 1], prev[j])
        prev = cur
    return prev[-1]


def rouge_l(candidate: TokenSeq, reference: TokenSeq) -> MetricTriple:
    """ROUGE-L: LCS-based overlap with plain harmonic F (beta = 1)."""
    lcs = lcs_length(candidate.tokens, reference.tokens)
    precision = lcs / len(candidate) if len(candidate) else 0.0
    recall = lcs / len(reference) if len(reference) else 0.0
    return MetricTriple.from_pr(precision, recall)


class EmbeddingProvider(abc.ABC):
    """Source of unit-norm token vectors for the semantic metric.

    Implementations must return one vector per token, each with L2 norm 1
    within 1e-6, and must tolerate concurrent embed() calls (or serialize
    internally).
    """

    @property
    @abc.abstractmethod
    def dimension(self) -> int:
        """Vector dimensionality, a positive integer."""

    @abc.abstractmethod
    def embed(self, tokens: TokenSeq) -> np.ndarray:
        """Return an array of shape (len(tokens), dimension), rows unit-norm."""


def _checked_embed(provider: EmbeddingProvider, tokens: TokenSeq) -> np.ndarray:
    vectors = np.asarray(provider.embed(tokens), dtype=float)
    if vectors.shape != (len(tokens), provider.dimension):
        raise ValueError(
            f"provider returned shape {vectors.shape}, "
            f"expected {(len(tokens), provider.dimension)}"
        )
    return vectors


def semantic_score(
    candidate: TokenSeq, reference: TokenSeq, provider: EmbeddingProvider
) -> MetricTriple:
    """Greedy max-cosine matching between candidate and reference tokens.

    Recall averages, over reference tokens, the best cosine similarity to
    any candidate token; precision swaps the roles.  No IDF weighting, no
    baseline rescaling.  Similarity means are clamped into [0, 1] (random
    embeddings can go negative).  Raises on empty input: semantic
    similarity of nothing is undefined.
    """
    if len(candidate) == 0 or len(reference) == 0:
        raise ValueError("semantic_score requires non-empty candidate and reference")
    if provider.dimension < 1:
        raise ValueError("provider dimension must be >= 1")
    cand_vecs = _checked_embed(provider, candidate)
    ref_vecs = _checked_embed(provider, reference)
    # Row-wise elementwise products instead of BLAS matmul: each cosine is
    # then reduced identically wherever the pair lands, which together with
    # fsum makes the means exactly permutation-invariant.
    sims = np.empty((len(candidate), len(reference)))
    for row, vec in enumerate(cand_vecs):
        sims[row] = (ref_vecs * vec).sum(axis=1)
    precision = math.fsum(sims.max(axis=1)) / len(candidate)
    recall = math.fsum(sims.max(axis=0)) / len(reference)
    precision = min(1.0, max(0.0, precision))
    recall = min(1.0, max(0.0, recall))
    return MetricTriple.from_pr(precision, recall)


def aggregate(scores: list[MetricTriple]) -> MetricTriple:
    """Macro-average: component-wise arithmetic mean of P, R and F.

    Note the averaged F is the mean of per-example F1s, not the harmonic
    mean of the averaged P and R.
    """
    if not scores:
        raise ValueError("cannot aggregate an empty score list")
    n = len(scores)
    return MetricTriple(
        math.fsum(s.precision for s in scores) / n,
        math.fsum(s.recall for s in scores) / n,
        math.fsum(s.f1 for s in scores) / n,
    )
