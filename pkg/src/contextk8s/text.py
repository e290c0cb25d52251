"""Model-free text primitives: token counting and hashed TF-IDF vectors."""

from __future__ import annotations

import math
import re
import zlib
from collections import Counter
from typing import Iterable

import numpy as np

VECTOR_DIM = 256

_WORD_RE = re.compile(r"[a-z0-9]+(?:[-'][a-z0-9]+)*")

STOPWORDS = frozenset(
    """a an and are as at be been but by can do does for from has have how i in is it
    its me my of on or our so than that the their them there these they this to
    us was we were what when where which who why will with you your""".split()
)


def token_count(text: str) -> int:
    """Approximate LLM tokens as ceil(characters / 4)."""
    return math.ceil(len(text) / 4)


def truncate_to_tokens(text: str, budget: int) -> str:
    return text[: budget * 4]


def words(text: str) -> list[str]:
    return _WORD_RE.findall(text.lower())


def terms(text: str) -> list[str]:
    return [w for w in words(text) if w not in STOPWORDS]


def _bucket(term: str, dim: int) -> int:
    return zlib.crc32(term.encode("utf-8")) % dim


class HashedTfidf:
    """Hashed bag-of-words with sublinear TF and optional fitted IDF.

    Unfitted, every bucket has IDF 1. Vectors are L2-normalised; text with no
    terms maps to the all-zero vector.
    """

    def __init__(self, dim: int = VECTOR_DIM):
        self.dim = dim
        self.idf = np.ones(dim)

    def fit(self, documents: Iterable[str]) -> "HashedTfidf":
        docs = list(documents)
        df = np.zeros(self.dim)
        for doc in docs:
            for b in {_bucket(t, self.dim) for t in terms(doc)}:
                df[b] += 1
        n = len(docs)
        self.idf = np.log((1 + n) / (1 + df)) + 1.0
        return self

    def transform(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim)
        for term, count in Counter(terms(text)).items():
            vec[_bucket(term, self.dim)] += 1.0 + math.log(count)
        vec *= self.idf
        norm = np.linalg.norm(vec)
        if norm == 0:
            return vec
        return vec / norm


def cosine(a: np.ndarray | tuple, b: np.ndarray | tuple) -> float:
    """Cosine similarity; zero if either side is the zero vector."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))
