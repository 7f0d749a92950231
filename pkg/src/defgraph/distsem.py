"""Word vectors and phrase similarity for distributional graph navigation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable

import numpy as np

from .textnorm import tokenize

__all__ = [
    "EmbeddingError",
    "ZeroVectorError",
    "EmbeddingTable",
    "default_stopwords",
    "load_stopwords",
    "load_embeddings",
    "cosine",
    "phrase_similarity",
]


class EmbeddingError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ZeroVectorError(ValueError):
    pass


def load_stopwords(path: str | Path) -> frozenset[str]:
    words = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line.lower())
    return frozenset(words)


def default_stopwords() -> frozenset[str]:
    text = resources.files("defgraph").joinpath("data/stopwords.txt").read_text(encoding="utf-8")
    return frozenset(w.strip().lower() for w in text.splitlines()
                     if w.strip() and not w.startswith("#"))


@dataclass(frozen=True, eq=False)
class EmbeddingTable:
    dim: int
    vectors: dict[str, np.ndarray]
    stopwords: frozenset[str] = field(default_factory=default_stopwords)

    def __post_init__(self):
        if self.dim <= 0:
            raise EmbeddingError("dimension must be positive")
        clean = {}
        for word, vec in self.vectors.items():
            arr = np.asarray(vec, dtype=np.float64)
            if arr.shape != (self.dim,):
                raise EmbeddingError(f"vector for {word!r} has shape {arr.shape}, expected ({self.dim},)")
            if not np.all(np.isfinite(arr)):
                raise EmbeddingError(f"vector for {word!r} has non-finite components")
            arr.setflags(write=False)
            clean[word] = arr
        object.__setattr__(self, "vectors", clean)

    def __contains__(self, word: str) -> bool:
        return word in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)

    def content_tokens(self, phrase: str) -> list[str]:
        return [t for t in tokenize(phrase) if t not in self.stopwords]

    def similarity(self, a: str, b: str) -> float:
        return phrase_similarity(a, b, self)

    def scaled(self, factor: float) -> EmbeddingTable:
        return EmbeddingTable(self.dim, {w: v * factor for w, v in self.vectors.items()}, self.stopwords)


def load_embeddings(path: str | Path, stopwords: Iterable[str] | None = None) -> EmbeddingTable:
    """Read ``word v1 ... vd`` lines, with an optional ``count dim`` header.

    Duplicate words keep their first vector.
    """
    vectors: dict[str, np.ndarray] = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if lineno == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                dim = int(parts[1])
                continue
            word, comps = parts[0], parts[1:]
            if not comps:
                raise EmbeddingError(f"no components for {word!r}", lineno)
            if dim is None:
                dim = len(comps)
            elif len(comps) != dim:
                raise EmbeddingError(f"expected {dim} components, found {len(comps)}", lineno)
            try:
                vec = np.array([float(c) for c in comps], dtype=np.float64)
            except ValueError:
                raise EmbeddingError("non-numeric component", lineno) from None
            if not np.all(np.isfinite(vec)):
                raise EmbeddingError("non-finite component", lineno)
            vectors.setdefault(word, vec)
    if dim is None:
        raise EmbeddingError("no vectors in file")
    sw = default_stopwords() if stopwords is None else frozenset(w.lower() for w in stopwords)
    return EmbeddingTable(dim, vectors, sw)


def cosine(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"length mismatch: {u.shape} vs {v.shape}")
    su = float(np.max(np.abs(u))) if u.size else 0.0
    sv = float(np.max(np.abs(v))) if v.size else 0.0
    if su == 0.0 or sv == 0.0:
        raise ZeroVectorError("similarity is undefined for a zero vector")
    # rescaling to a unit max component keeps the squared norms away from
    # overflow and underflow; cosine itself is unchanged by it
    u = u / su
    v = v / sv
    nu2 = float(np.dot(u, u))
    nv2 = float(np.dot(v, v))
    # one square root keeps cosine(v, v) exactly 1.0
    denom = math.sqrt(nu2 * nv2)
    value = float(np.dot(u, v)) / denom
    return max(-1.0, min(1.0, value))


def _mean_vector(tokens: list[str], table: EmbeddingTable) -> np.ndarray | None:
    known = [table.vectors[t] for t in tokens if t in table.vectors]
    if not known:
        return None
    return np.mean(np.stack(known), axis=0)


def phrase_similarity(a: str, b: str, table: EmbeddingTable) -> float:
    """Cosine of mean in-vocabulary vectors; exact case-folded match when
    either side has no known content word."""
    va = _mean_vector(table.content_tokens(a), table)
    vb = _mean_vector(table.content_tokens(b), table)
    if va is not None and vb is not None:
        try:
            return cosine(va, vb)
        except ZeroVectorError:
            pass
    return 1.0 if a.strip().casefold() == b.strip().casefold() else 0.0
