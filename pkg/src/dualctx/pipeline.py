"""End-to-end composition: index a repository, query contexts, build prompts."""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .analogy import SIM_KINDS, AnalogyContext, SimilarityFn, retrieve_analogy
from .chunking import ChunkCover, UnfinishedChunk, build_cover, editable_lines, load_cover, save_cover, unfinished_chunk
from .graph import CodeKnowledgeGraph, build_graph, load_graph, save_graph
from .prompt import ORDERS, PromptBundle, assemble
from .rationale import RationaleContext, retrieve_rationale
from .rtg import (
    SCORER_KINDS,
    HashingEmbedder,
    ScoredItem,
    Scorer,
    TruncatedDualContext,
    build_tdc,
    candidates_from,
    rank_order,
    score_candidates,
)
from .source_model import SourceFile, extract_repo, scan_repo

INDEX_DIRNAME = ".dualctx"
GRAPH_FILE = "graph.json"
CHUNKS_FILE = "chunks.json"


class ConfigError(ValueError):
    pass


class NoFilesIndexed(RuntimeError):
    pass


class MissingIndexError(FileNotFoundError):
    pass


class QueryError(ValueError):
    """Invalid file or line in a context query; ``field`` names which."""

    def __init__(self, message: str, field: str = "file"):
        super().__init__(message)
        self.field = field


@dataclass(frozen=True)
class PipelineConfig:
    ell: int = 10
    eta: int = 5
    sim: str = "jaccard"
    epsilon: float = 0.3
    top_k: int = 5
    bm25_k1: float = 1.2
    bm25_b: float = 0.75
    scorer: str = "lexical-jaccard"
    seed: int = 0
    budget: int = 512
    infile_budget: int = 2048
    order: str = "HighToLow"
    include_globs: tuple[str, ...] = ("*.py",)
    graph_path: str | None = None
    chunks_path: str | None = None
    oracle_table: str | None = None

    def __post_init__(self):
        ints = ("ell", "eta", "top_k", "seed", "budget", "infile_budget")
        for name in ints:
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool):
                raise ConfigError(f"{name} must be an integer, got {v!r}")
        if self.ell < 1 or not 1 <= self.eta <= self.ell:
            raise ConfigError(f"need 1 <= eta <= ell, got ell={self.ell}, eta={self.eta}")
        if self.top_k < 0 or self.budget < 0 or self.infile_budget < 0:
            raise ConfigError("top_k, budget and infile_budget must be >= 0")
        if self.sim not in SIM_KINDS:
            raise ConfigError(f"sim must be one of {SIM_KINDS}, got {self.sim!r}")
        if self.scorer not in SCORER_KINDS:
            raise ConfigError(f"scorer must be one of {SCORER_KINDS}, got {self.scorer!r}")
        if self.order not in ORDERS:
            raise ConfigError(f"order must be one of {ORDERS}, got {self.order!r}")
        if self.scorer == "oracle" and not self.oracle_table:
            raise ConfigError("scorer 'oracle' needs oracle_table")
        if isinstance(self.include_globs, str) or not all(isinstance(g, str) for g in self.include_globs):
            raise ConfigError("include_globs must be a list of strings")
        object.__setattr__(self, "include_globs", tuple(self.include_globs))

    @classmethod
    def field_names(cls) -> set[str]:
        return {f.name for f in dataclasses.fields(cls)}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PipelineConfig":
        return cls().replace(**data)

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "PipelineConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        return cls.from_dict(data)

    def replace(self, **overrides) -> "PipelineConfig":
        unknown = sorted(set(overrides) - self.field_names())
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        try:
            return dataclasses.replace(self, **overrides)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["include_globs"] = list(self.include_globs)
        return d

    def similarity(self) -> SimilarityFn:
        return SimilarityFn(self.sim, self.bm25_k1, self.bm25_b)

    def build_scorer(self) -> Scorer:
        if self.scorer == "oracle":
            table = json.loads(Path(self.oracle_table).read_text(encoding="utf-8"))
            return Scorer.oracle({str(k): float(v) for k, v in table.items()})
        if self.scorer == "semantic":
            return Scorer.semantic(HashingEmbedder())
        return Scorer(self.scorer, seed=self.seed)


@dataclass
class RepoIndex:
    root: str
    files: list[SourceFile]
    graph: CodeKnowledgeGraph
    cover: ChunkCover
    diagnostics: list[str] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)

    def __post_init__(self):
        self._by_path = {f.path: f for f in self.files}

    def file(self, path: str) -> SourceFile | None:
        return self._by_path.get(path)

    def summary(self) -> dict:
        return {
            "n_files": len(self.files),
            "n_nodes": len(self.graph.nodes),
            "n_edges": len(self.graph.edges),
            "n_chunks": len(self.cover),
        }


def index_repo(root: str | os.PathLike, config: PipelineConfig = PipelineConfig()) -> RepoIndex:
    skipped: list[str] = []
    files = scan_repo(root, config.include_globs, skipped)
    if not files:
        raise NoFilesIndexed(f"no files indexed under {root}")
    facts = extract_repo(files)
    graph = build_graph(facts.entities, facts.relations)
    cover = build_cover(files, config.ell, config.eta)
    return RepoIndex(str(root), files, graph, cover, facts.diagnostics, skipped)


def default_artifact_paths(root: str | os.PathLike, config: PipelineConfig) -> tuple[Path, Path]:
    out = Path(root) / INDEX_DIRNAME
    graph = Path(config.graph_path) if config.graph_path else out / GRAPH_FILE
    chunks = Path(config.chunks_path) if config.chunks_path else out / CHUNKS_FILE
    return graph, chunks


def write_index(index: RepoIndex, config: PipelineConfig) -> tuple[Path, Path]:
    graph_path, chunks_path = default_artifact_paths(index.root, config)
    for p in (graph_path, chunks_path):
        p.parent.mkdir(parents=True, exist_ok=True)
    save_graph(index.graph, graph_path)
    save_cover(index.cover, chunks_path)
    return graph_path, chunks_path


def load_index(root: str | os.PathLike, config: PipelineConfig = PipelineConfig()) -> RepoIndex:
    """Load saved artifacts; chunk texts are rehydrated from the current sources."""
    graph_path, chunks_path = default_artifact_paths(root, config)
    for p in (graph_path, chunks_path):
        if not p.is_file():
            raise MissingIndexError(f"index artifact not found: {p}")
    files = scan_repo(root, config.include_globs)
    graph = load_graph(graph_path)
    cover = load_cover(chunks_path, files, config.ell, config.eta)
    return RepoIndex(str(root), files, graph, cover)


class RepoIndexCache:
    """Builds each repository's index once (used by evaluation over many examples)."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self._cache: dict[str, RepoIndex] = {}

    def get(self, root: str) -> RepoIndex:
        key = os.path.abspath(root)
        if key not in self._cache:
            self._cache[key] = index_repo(root, self.config)
        return self._cache[key]


@dataclass
class ContextResult:
    file: str
    line: int
    ck_star: UnfinishedChunk
    rationale: RationaleContext
    analogy: AnalogyContext
    scored: list[ScoredItem]
    tdc: TruncatedDualContext

    def to_dict(self) -> dict:
        return {
            "file": self.file,
            "line": self.line,
            "ck_star": {"start_line": self.ck_star.start_line, "end_line": self.ck_star.end_line,
                        "text": self.ck_star.text},
            "analogy": [i.to_dict() for i in self.analogy],
            "rationale": self.rationale.to_dict(),
            "candidates": [s.to_dict() for s in rank_order(self.scored)],
            "tdc": [s.to_dict() for s in self.tdc.selected],
            "tdc_stats": {
                "budget": self.tdc.budget,
                "used_tokens": self.tdc.used_tokens,
                "n_candidates": self.tdc.n_candidates,
                "n_ac": self.tdc.n_analogy,
                "n_rc": self.tdc.n_rationale,
            },
        }


def build_context(
    index: RepoIndex,
    file: str,
    line: int,
    config: PipelineConfig = PipelineConfig(),
    edited_text: str | None = None,
    scorer: Scorer | None = None,
) -> ContextResult:
    """Run rationale analysis, analogy retrieval and rank truncation for one cursor."""
    if not index.graph.has_path(file):
        raise QueryError(f"file not indexed: {file}")
    if edited_text is None:
        src = index.file(file)
        if src is None:
            raise QueryError(f"file not found in repository: {file}")
        edited_text = src.text
    n_lines = len(editable_lines(edited_text))
    if not isinstance(line, int) or isinstance(line, bool) or not 1 <= line <= n_lines:
        raise QueryError(f"line {line!r} outside 1..{n_lines} of {file}", "line")

    ck_star = unfinished_chunk(edited_text, line, config.ell)
    rationale = retrieve_rationale(index.graph, file, line)
    analogy = retrieve_analogy(ck_star, index.cover, config.similarity(), config.epsilon, config.top_k, exclude_file=file)
    scored = score_candidates(candidates_from(rationale, analogy), ck_star.text, scorer or config.build_scorer())
    tdc = build_tdc(scored, config.budget)
    return ContextResult(file, line, ck_star, rationale, analogy, scored, tdc)


def build_prompt(
    index: RepoIndex,
    file: str,
    line: int,
    config: PipelineConfig = PipelineConfig(),
    edited_text: str | None = None,
    scorer: Scorer | None = None,
) -> tuple[ContextResult, PromptBundle]:
    ctx = build_context(index, file, line, config, edited_text, scorer)
    text = edited_text if edited_text is not None else index.file(file).text
    bundle = assemble(ctx.tdc, text, line, config.order, config.infile_budget, seed=config.seed)
    return ctx, bundle
