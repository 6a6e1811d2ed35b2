"""Dual context retrieval for repository-level code completion.

Rationale context comes from a code knowledge graph (signatures of
cross-file constructs reachable from the edited file), analogy context from
similar code chunks elsewhere in the repository. Both are fused, ranked
against the unfinished chunk at the cursor and truncated to a token budget.
"""

from .analogy import AnalogyContext, SimilarityFn, retrieve_analogy
from .chunking import ChunkCover, CodeChunk, build_cover, successor, unfinished_chunk
from .graph import CodeKnowledgeGraph, Edge, EdgeRelation, Node, NodeType, build_graph, load_graph, save_graph
from .metrics import MetricsReport, code_em, code_es, identifier_metrics, run_eval
from .pipeline import PipelineConfig, build_context, build_prompt, index_repo, load_index
from .prompt import PromptBundle, assemble
from .rationale import RationaleContext, retrieve_rationale, signature_of
from .rtg import Scorer, ScoredItem, TruncatedDualContext, build_tdc, score_candidates, token_count
from .similarity import edit_similarity, jaccard, tokenize_code
from .source_model import (
    EntityFact,
    Location,
    RelationFact,
    SourceFile,
    extract_facts,
    extract_repo,
    load_external_facts,
    scan_repo,
)

__version__ = "0.1.0"
