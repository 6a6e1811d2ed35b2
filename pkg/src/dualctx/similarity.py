"""Lexical similarity functions over code text."""

from __future__ import annotations

import math
import re
from collections import Counter
from typing import Iterable, Sequence

from rapidfuzz.distance import Levenshtein

_TOKEN_RE = re.compile(
    r"""
    [^\W\d]\w*                      # identifiers
  | \d+(?:\.\d+)?                   # numbers
  | \*\*=?|//=?|>>=?|<<=?|->|:=     # multi-char operators
  | [=!<>+\-*/%&|^@]=
  | [^\w\s]                         # any other single symbol
    """,
    re.VERBOSE,
)


def tokenize_code(text: str) -> list[str]:
    """Split code into identifiers, numbers and operator/punctuation tokens."""
    return _TOKEN_RE.findall(text)


def jaccard(a: Iterable[str], b: Iterable[str]) -> float:
    a, b = set(a), set(b)
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def levenshtein(a: str, b: str) -> int:
    return Levenshtein.distance(a, b)


def edit_similarity(a: str, b: str) -> float:
    """``1 - levenshtein(a, b) / max(len(a), len(b))``; 1.0 for two empty strings."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(a, b) / longest


class BM25:
    """Okapi BM25 over a fixed document collection.

    Uses the non-negative idf ``log(1 + (N - n + 0.5) / (n + 0.5))`` so
    scores stay >= 0.
    """

    def __init__(self, documents: Sequence[Sequence[str]], k1: float = 1.2, b: float = 0.75):
        self.k1 = k1
        self.b = b
        self.term_freqs = [Counter(d) for d in documents]
        self.doc_lens = [len(d) for d in documents]
        self.n_docs = len(documents)
        self.avgdl = (sum(self.doc_lens) / self.n_docs) if self.n_docs else 0.0
        df: Counter = Counter()
        for tf in self.term_freqs:
            df.update(tf.keys())
        self.idf = {t: math.log(1.0 + (self.n_docs - n + 0.5) / (n + 0.5)) for t, n in df.items()}

    def score(self, query: Sequence[str], index: int) -> float:
        tf = self.term_freqs[index]
        if not tf:
            return 0.0
        norm = self.k1 * (1.0 - self.b + self.b * self.doc_lens[index] / self.avgdl)
        s = 0.0
        for term in query:
            f = tf.get(term)
            if f:
                s += self.idf[term] * f * (self.k1 + 1.0) / (f + norm)
        return s

    def scores(self, query: Sequence[str]) -> list[float]:
        return [self.score(query, i) for i in range(self.n_docs)]
