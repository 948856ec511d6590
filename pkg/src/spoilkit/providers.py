"""Embedding providers for the semantic metric.

Four implementations of :class:`spoilkit.metrics.EmbeddingProvider`:

* :class:`OneHotProvider` — each distinct token gets its own basis vector;
  deterministic, exercises the type-overlap reduction of the greedy metric.
* :class:`HashedRandomProvider` — seeded random unit vectors per token
  type; deterministic across processes, no external state.
* :class:`LookupFileProvider` — precomputed vectors from a JSONL file of
  ``{"token": ..., "vector": [...]}`` records.
* :class:`HttpProvider` — remote service speaking ``POST /embed`` with
  body ``{"tokens": [...]}`` and response ``{"vectors": [[...]]}``.

Vectors must arrive L2-normalized; the file and HTTP providers reject
non-unit vectors rather than silently renormalizing.
"""

from __future__ import annotations

import hashlib
import json
import threading

import numpy as np
import requests

from .metrics import EmbeddingProvider, TokenSeq

__all__ = [
    "OneHotProvider",
    "HashedRandomProvider",
    "LookupFileProvider",
    "HttpProvider",
]

NORM_TOLERANCE = 1e-6


def _check_unit_norm(vector: np.ndarray, token: str) -> None:
    norm = float(np.linalg.norm(vector))
    if abs(norm - 1.0) > NORM_TOLERANCE:
        raise ValueError(f"vector for token {token!r} has L2 norm {norm}, expected 1")


class OneHotProvider(EmbeddingProvider):
    """Basis vector per distinct token, assigned on first sight.

    Two tokens are either identical (cosine 1) or orthogonal (cosine 0),
    so greedy-match recall reduces to unigram-type recall.  Raises once the
    vocabulary outgrows the configured dimension.
    """

    def __init__(self, dimension: int = 4096):
        if dimension < 1:
            raise ValueError("dimension must be >= 1")
        self._dimension = dimension
        self._index: dict[str, int] = {}
        self._lock = threading.Lock()

    @property
    def dimension(self) -> int:
        return self._dimension

    def _slot(self, token: str) -> int:
        with self._lock:
            if token not in self._index:
                if len(self._index) >= self._dimension:
                    raise ValueError(
                        f"one-hot vocabulary exceeded dimension {self._dimension}"
                    )
                self._index[token] = len(self._index)
            return self._index[token]

    def embed(self, tokens: TokenSeq) -> np.ndarray:
        vectors = np.zeros((len(tokens), self._dimension))
        for row, token in enumerate(tokens.tokens):
            vectors[row, self._slot(token)] = 1.0
        return vectors


class HashedRandomProvider(EmbeddingProvider):
    """Deterministic random unit vector per token type.

    The per-token RNG is seeded from sha256(seed, token), so vectors are
    stable across processes and runs regardless of hash randomization.
    """

    def __init__(self, dimension: int = 32, seed: int = 0):
        if dimension < 1:
            raise ValueError("dimension must be >= 1")
        self._dimension = dimension
        self._seed = seed

    @property
    def dimension(self) -> int:
        return self._dimension

    def _vector(self, token: str) -> np.ndarray:
        digest = hashlib.sha256(f"{self._seed}:{token}".encode("utf-8")).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
        v = rng.standard_normal(self._dimension)
        norm = np.linalg.norm(v)
        if norm == 0.0:  # astronomically unlikely; regenerate deterministically
            v = np.ones(self._dimension)
            norm = np.linalg.norm(v)
        return v / norm

    def embed(self, tokens: TokenSeq) -> np.ndarray:
        if not tokens.tokens:
            return np.zeros((0, self._dimension))
        return np.stack([self._vector(t) for t in tokens.tokens])


class LookupFileProvider(EmbeddingProvider):
    """Vectors preloaded from a JSONL file, one record per token type.

    Record schema: ``{"token": str, "vector": [float, ...]}``.  All vectors
    must share one dimension and be unit-norm.  Embedding an unknown token
    raises KeyError — precompute the vocabulary you intend to score.
    """

    def __init__(self, path):
        self._vectors: dict[str, np.ndarray] = {}
        dimension = None
        with open(path, "r", encoding="utf-8") as f:
            for line_no, line in enumerate(f, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                    token = record["token"]
                    vector = np.asarray(record["vector"], dtype=float)
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise ValueError(f"{path}: bad vector record on line {line_no}: {exc}")
                if vector.ndim != 1:
                    raise ValueError(f"{path}: vector on line {line_no} is not flat")
                if dimension is None:
                    dimension = len(vector)
                elif len(vector) != dimension:
                    raise ValueError(
                        f"{path}: line {line_no} has dimension {len(vector)}, "
                        f"expected {dimension}"
                    )
                _check_unit_norm(vector, token)
                self._vectors[token] = vector
        if dimension is None:
            raise ValueError(f"{path}: no vector records found")
        self._dimension = dimension

    @property
    def dimension(self) -> int:
        return self._dimension

    def embed(self, tokens: TokenSeq) -> np.ndarray:
        rows = []
        for token in tokens.tokens:
            if token not in self._vectors:
                raise KeyError(f"no precomputed vector for token {token!r}")
            rows.append(self._vectors[token])
        if not rows:
            return np.zeros((0, self._dimension))
        return np.stack(rows)


class HttpProvider(EmbeddingProvider):
    """Client for a remote embedding service.

    Each embed() issues one synchronous ``POST {base_url}/embed``; calls
    are independent, so concurrent use from multiple threads is safe.
    Responses with wrong counts, mixed dimensions or non-unit vectors are
    rejected client-side.
    """

    def __init__(self, base_url: str, dimension: int, timeout: float = 30.0):
        if dimension < 1:
            raise ValueError("dimension must be >= 1")
        self._base_url = base_url.rstrip("/")
        self._dimension = dimension
        self._timeout = timeout

    @property
    def dimension(self) -> int:
        return self._dimension

    def embed(self, tokens: TokenSeq) -> np.ndarray:
        if not tokens.tokens:
            return np.zeros((0, self._dimension))
        response = requests.post(
            f"{self._base_url}/embed",
            json={"tokens": list(tokens.tokens)},
            timeout=self._timeout,
        )
        response.raise_for_status()
        payload = response.json()
        vectors = np.asarray(payload["vectors"], dtype=float)
        if vectors.shape != (len(tokens), self._dimension):
            raise ValueError(
                f"embedding service returned shape {vectors.shape}, "
                f"expected {(len(tokens), self._dimension)}"
            )
        for token, row in zip(tokens.tokens, vectors):
            _check_unit_norm(row, token)
        return vectors
