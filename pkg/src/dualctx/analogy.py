"""Analogy context: successors of repository chunks similar to the unfinished chunk."""

from __future__ import annotations

from dataclasses import dataclass

from .chunking import ChunkCover, CodeChunk, UnfinishedChunk, successor
from .similarity import BM25, edit_similarity, jaccard, tokenize_code

SIM_KINDS = ("jaccard", "edit", "bm25")
DEFAULT_THRESHOLD = 0.3
DEFAULT_TOP_K = 5


@dataclass(frozen=True)
class SimilarityFn:
    kind: str = "jaccard"
    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self):
        if self.kind not in SIM_KINDS:
            raise ValueError(f"unknown similarity {self.kind!r}; expected one of {SIM_KINDS}")


@dataclass(frozen=True)
class AnalogyItem:
    source_chunk: CodeChunk
    context_chunk: CodeChunk  # successor of source_chunk, or source_chunk itself at a file tail
    score: float

    @property
    def successor_text(self) -> str:
        return self.context_chunk.text

    @property
    def item_id(self) -> str:
        c = self.context_chunk
        return f"analogy@{c.file}:{c.start_line}-{c.end_line}"

    def to_dict(self) -> dict:
        return {
            "id": self.item_id,
            "file": self.context_chunk.file,
            "start_line": self.context_chunk.start_line,
            "end_line": self.context_chunk.end_line,
            "matched_start_line": self.source_chunk.start_line,
            "score": self.score,
            "text": self.successor_text,
        }


@dataclass(frozen=True)
class AnalogyContext:
    items: tuple[AnalogyItem, ...]

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)


def score_chunks(query: str, chunks: list[CodeChunk], sim: SimilarityFn) -> list[float]:
    if sim.kind == "jaccard":
        q = set(tokenize_code(query))
        return [jaccard(q, tokenize_code(c.text)) for c in chunks]
    if sim.kind == "edit":
        return [edit_similarity(query, c.text) for c in chunks]
    bm25 = BM25([tokenize_code(c.text) for c in chunks], k1=sim.k1, b=sim.b)
    return bm25.scores(tokenize_code(query))


def retrieve_analogy(
    ck_star: UnfinishedChunk | str,
    cover: ChunkCover,
    sim: SimilarityFn = SimilarityFn(),
    threshold: float = DEFAULT_THRESHOLD,
    top_k: int = DEFAULT_TOP_K,
    exclude_file: str | None = None,
) -> AnalogyContext:
    """Successors of chunks with ``sim(chunk, ck_star) >= threshold``, best first.

    Chunks from ``exclude_file`` never participate. A tail chunk without a
    successor contributes itself. When two admitted chunks yield the same
    context chunk only the better-scored one is kept.
    """
    query = ck_star.text if isinstance(ck_star, UnfinishedChunk) else ck_star
    candidates = [c for c in cover.chunks if c.file != exclude_file]
    if not candidates or top_k <= 0:
        return AnalogyContext(())
    scores = score_chunks(query, candidates, sim)
    admitted = [(s, c) for s, c in zip(scores, candidates) if s >= threshold]
    admitted.sort(key=lambda sc: (-sc[0], sc[1].file, sc[1].start_line))

    items = []
    used = set()
    for score, chunk in admitted:
        ctx = successor(cover, chunk) or chunk
        if ctx.key in used:
            continue
        used.add(ctx.key)
        items.append(AnalogyItem(chunk, ctx, score))
        if len(items) == top_k:
            break
    return AnalogyContext(tuple(items))
