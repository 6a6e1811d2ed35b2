"""Rank-truncated selection of the fused candidate set under a token budget.

Candidates from the rationale and analogy contexts are scored against the
unfinished chunk, ordered by descending score, and the longest rank prefix
whose total token length fits the budget is kept. A high-ranked item that
does not fit ends the selection: no lower-ranked item may take its place.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Callable, Mapping, Protocol, Sequence

import numpy as np

from .analogy import AnalogyContext
from .prompt import render_block
from .rationale import CLASS, METHOD, PACKAGE, RationaleContext
from .similarity import edit_similarity, jaccard, tokenize_code

ANALOGY = "analogy"
SOURCE_PRIORITY = {METHOD: 0, CLASS: 1, PACKAGE: 2, ANALOGY: 3}
SCORER_KINDS = ("lexical-jaccard", "lexical-edit", "semantic", "random", "oracle")
PRESET_BUDGETS = (256, 512, 1024, 2048, 4096)

TokenCounter = Callable[[str], int]


class ScoringError(ValueError):
    pass


def token_count(text: str, counter: TokenCounter | None = None) -> int:
    """Token length of ``text``; the default counter is the code tokenizer."""
    if counter is not None:
        return counter(text)
    return len(tokenize_code(text))


@dataclass(frozen=True)
class Candidate:
    item_id: str
    source: str  # ANALOGY or one of the rationale buckets
    origin: str  # file the text comes from
    text: str


def candidates_from(rationale: RationaleContext | None, analogy: AnalogyContext | None) -> list[Candidate]:
    out = []
    if rationale is not None:
        for item in rationale.items():
            out.append(Candidate(item.node_id, item.source, item.path, item.text))
    if analogy is not None:
        for item in analogy:
            out.append(Candidate(item.item_id, ANALOGY, item.context_chunk.file, item.successor_text))
    return out


# ---------------------------------------------------------------------------
# Embedding providers
# ---------------------------------------------------------------------------


class EmbeddingProvider(Protocol):
    def embed(self, text: str) -> np.ndarray: ...


class HashingEmbedder:
    """Model-free provider: hashed bag of code tokens, fixed dimension."""

    def __init__(self, dim: int = 256):
        self.dim = dim

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim)
        for tok in tokenize_code(text):
            h = int.from_bytes(hashlib.blake2b(tok.encode(), digest_size=8).digest(), "little")
            vec[h % self.dim] += 1.0
        return vec


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = float(np.linalg.norm(u)), float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


# ---------------------------------------------------------------------------
# Scorers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Scorer:
    kind: str = "lexical-jaccard"
    seed: int = 0
    table: Mapping[str, float] | None = None
    provider: EmbeddingProvider | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in SCORER_KINDS:
            raise ScoringError(f"unknown scorer {self.kind!r}; expected one of {SCORER_KINDS}")
        if self.kind == "oracle" and self.table is None:
            raise ScoringError("oracle scorer needs a score table")
        if self.kind == "semantic" and self.provider is None:
            raise ScoringError("semantic scorer needs an embedding provider")

    @classmethod
    def semantic(cls, provider: EmbeddingProvider) -> "Scorer":
        return cls("semantic", provider=provider)

    @classmethod
    def oracle(cls, table: Mapping[str, float]) -> "Scorer":
        return cls("oracle", table=dict(table))

    @classmethod
    def random(cls, seed: int) -> "Scorer":
        return cls("random", seed=seed)


def _random_score(seed: int, item_id: str) -> float:
    digest = hashlib.sha256(item_id.encode("utf-8")).digest()
    rng = np.random.default_rng([seed, int.from_bytes(digest[:8], "little")])
    return float(rng.random())


@dataclass(frozen=True)
class ScoredItem:
    item_id: str
    source: str
    origin: str
    text: str
    score: float
    token_len: int

    def rank_key(self) -> tuple:
        return (-self.score, SOURCE_PRIORITY.get(self.source, len(SOURCE_PRIORITY)), self.item_id)

    def to_dict(self) -> dict:
        return {
            "id": self.item_id,
            "source": self.source,
            "origin": self.origin,
            "score": self.score,
            "tokens": self.token_len,
            "text": self.text,
        }


def score_candidates(
    candidates: Sequence[Candidate],
    ck_star: str,
    scorer: Scorer,
    counter: TokenCounter | None = None,
) -> list[ScoredItem]:
    """Score each candidate against ``ck_star``.

    ``token_len`` is measured on the item as it will be rendered in the
    prompt, so selected items never overrun the budget once rendered.
    """
    if scorer.kind == "oracle":
        missing = [c.item_id for c in candidates if c.item_id not in scorer.table]
        if missing:
            raise ScoringError(f"oracle table has no score for {missing[0]!r}" +
                               (f" (+{len(missing) - 1} more)" if len(missing) > 1 else ""))
    if scorer.kind == "lexical-jaccard":
        query_tokens = set(tokenize_code(ck_star))
    elif scorer.kind == "semantic":
        query_vec = scorer.provider.embed(ck_star)

    out = []
    for c in candidates:
        if scorer.kind == "lexical-jaccard":
            s = jaccard(tokenize_code(c.text), query_tokens)
        elif scorer.kind == "lexical-edit":
            s = edit_similarity(c.text, ck_star)
        elif scorer.kind == "semantic":
            s = cosine(scorer.provider.embed(c.text), query_vec)
        elif scorer.kind == "random":
            s = _random_score(scorer.seed, c.item_id)
        else:
            s = float(scorer.table[c.item_id])
        rendered = render_block(c.source, c.origin, c.text)
        out.append(ScoredItem(c.item_id, c.source, c.origin, c.text, s, token_count(rendered, counter)))
    return out


# ---------------------------------------------------------------------------
# Truncated dual context
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TruncatedDualContext:
    selected: tuple[ScoredItem, ...]
    budget: int
    used_tokens: int
    n_candidates: int = 0

    @property
    def ids(self) -> list[str]:
        return [s.item_id for s in self.selected]

    def count(self, source_prefix: str) -> int:
        return sum(1 for s in self.selected if s.source.startswith(source_prefix))

    @property
    def n_analogy(self) -> int:
        return self.count(ANALOGY)

    @property
    def n_rationale(self) -> int:
        return self.count("rationale")

    def to_dict(self) -> dict:
        return {
            "budget": self.budget,
            "used_tokens": self.used_tokens,
            "n_candidates": self.n_candidates,
            "selected": [s.to_dict() for s in self.selected],
        }


def rank_order(scored: Sequence[ScoredItem]) -> list[ScoredItem]:
    """Canonical ordering: score desc, rationale before analogy, then item ID."""
    return sorted(scored, key=ScoredItem.rank_key)


def build_tdc(scored: Sequence[ScoredItem], budget: int) -> TruncatedDualContext:
    if budget < 0:
        raise ValueError(f"budget must be >= 0, got {budget}")
    selected = []
    used = 0
    for item in rank_order(scored):
        if used + item.token_len > budget:
            break
        selected.append(item)
        used += item.token_len
    return TruncatedDualContext(tuple(selected), budget, used, len(scored))
