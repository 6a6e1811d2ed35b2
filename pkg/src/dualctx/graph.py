"""Code knowledge graph: a multi-digraph of code entities and relations.

Node IDs follow ``name:KIND@path:start_line.start_col-end_line.end_col``;
edge IDs follow ``Relation@<location>`` (``Relation@-`` without a site).
Parallel edges are kept; storage disambiguates them by insertion index.
Edges point from the referencing entity to the referenced one.
"""

from __future__ import annotations

import json
import os
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .source_model import (
    EntityFact,
    EntityKind,
    Location,
    Relation,
    RelationFact,
    entity_id,
)

NodeType = EntityKind
EdgeRelation = Relation


class GraphError(ValueError):
    pass


class GraphFileError(GraphError):
    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message if offset is None else f"{message} (byte offset {offset})")
        self.offset = offset


@dataclass(frozen=True)
class Node:
    name: str
    kind: NodeType
    location: Location
    signature_text: str = ""
    body_text: str = ""

    @property
    def id(self) -> str:
        return entity_id(self.name, self.kind, self.location)

    @property
    def path(self) -> str:
        return self.location.path

    @classmethod
    def from_fact(cls, fact: EntityFact) -> "Node":
        return cls(fact.name, fact.kind, fact.location, fact.signature_text, fact.body_text)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "kind": self.kind.value,
            "location": self.location.to_dict(),
            "signature_text": self.signature_text,
            "body_text": self.body_text,
        }


@dataclass(frozen=True)
class Edge:
    relation: EdgeRelation
    from_id: str
    to_id: str
    site: Location | None = None
    index: int = 0  # storage key for parallel edges; not part of ``id``

    @property
    def id(self) -> str:
        return f"{self.relation.value}@{self.site.render() if self.site else '-'}"

    @property
    def start_line(self) -> int | None:
        return self.site.start_line if self.site else None

    def sort_key(self) -> tuple:
        site = self.site
        site_key = (0, site.path, site.start_line, site.start_col, site.end_line, site.end_col) if site else (1,)
        return (site_key, self.id, self.from_id, self.to_id, self.index)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "relation": self.relation.value,
            "from": self.from_id,
            "to": self.to_id,
            "site": self.site.to_dict() if self.site else None,
        }


class CodeKnowledgeGraph:
    """Immutable-after-build multi-digraph with per-node adjacency."""

    def __init__(self) -> None:
        self.nodes: dict[str, Node] = {}
        self.edges: list[Edge] = []
        self._out: dict[str, list[Edge]] = defaultdict(list)
        self._in: dict[str, list[Edge]] = defaultdict(list)
        self._modules: dict[str, Node] = {}
        self._by_path: dict[str, list[Node]] = defaultdict(list)

    # construction ---------------------------------------------------------

    def add_node(self, node: Node) -> Node:
        existing = self.nodes.get(node.id)
        if existing is not None:
            return existing
        self.nodes[node.id] = node
        self._by_path[node.path].append(node)
        if node.kind is NodeType.MODULE:
            if node.path in self._modules:
                raise GraphError(f"second MODULE node for {node.path}: {node.id}")
            self._modules[node.path] = node
        return node

    def add_edge(self, relation: EdgeRelation, from_id: str, to_id: str, site: Location | None = None) -> Edge:
        for end in (from_id, to_id):
            if end not in self.nodes:
                raise GraphError(f"{relation.value} edge {from_id} -> {to_id}: unknown endpoint {end}")
        edge = Edge(EdgeRelation(relation), from_id, to_id, site, len(self.edges))
        self.edges.append(edge)
        self._out[from_id].append(edge)
        self._in[to_id].append(edge)
        return edge

    # queries --------------------------------------------------------------

    def out_edges(self, node_id: str) -> list[Edge]:
        return list(self._out.get(node_id, ()))

    def in_edges(self, node_id: str) -> list[Edge]:
        return list(self._in.get(node_id, ()))

    def nodes_in(self, path: str) -> list[Node]:
        return list(self._by_path.get(path, ()))

    def paths(self) -> list[str]:
        return sorted(self._modules)

    def has_path(self, path: str) -> bool:
        return path in self._modules

    def module_node(self, path: str) -> Node:
        try:
            return self._modules[path]
        except KeyError:
            raise GraphError(f"path not indexed: {path}") from None

    def import_edges(self, module: Node) -> list[Edge]:
        edges = [e for e in self._out.get(module.id, ()) if e.relation is EdgeRelation.Imports]
        return sorted(edges, key=Edge.sort_key)

    def innermost_enclosing(self, path: str, line: int) -> Node:
        """Smallest-span node of ``path`` containing ``line``.

        Equal spans prefer the later-starting node; the MODULE node is the
        fallback when nothing narrower contains the line.
        """
        module = self.module_node(path)
        best = None
        best_key = None
        for node in self._by_path[path]:
            if node.kind is NodeType.MODULE or not node.location.contains_line(line):
                continue
            loc = node.location
            key = (loc.line_span, -loc.start_line, -loc.start_col, node.id)
            if best_key is None or key < best_key:
                best, best_key = node, key
        return best if best is not None else module

    def related_edges(self, node: Node, relations: Iterable[EdgeRelation]) -> list[Edge]:
        """Edges incident to ``node`` (either direction) whose relation is in ``relations``."""
        wanted = {EdgeRelation(r) for r in relations}
        if node.id not in self.nodes:
            raise GraphError(f"node not in graph: {node.id}")
        if not wanted:
            return []
        seen = set()
        out = []
        for e in (*self._out.get(node.id, ()), *self._in.get(node.id, ())):
            if e.relation in wanted and e.index not in seen:
                seen.add(e.index)
                out.append(e)
        return sorted(out, key=Edge.sort_key)

    def node_of(self, node_id: str) -> Node:
        return self.nodes[node_id]

    def children(self, node: Node) -> list[Node]:
        """Class/function nodes directly nested in ``node`` (source order)."""
        loc = node.location
        inside = [
            n for n in self._by_path[node.path]
            if n.id != node.id
            and n.kind in (NodeType.CLASS, NodeType.FUNCTION)
            and (loc.start_line, loc.start_col) <= (n.location.start_line, n.location.start_col)
            and (n.location.end_line, n.location.end_col) <= (loc.end_line, loc.end_col)
        ]

        def encloses(a: Node, b: Node) -> bool:
            la, lb = a.location, b.location
            return (
                a.id != b.id
                and (la.start_line, la.start_col) <= (lb.start_line, lb.start_col)
                and (lb.end_line, lb.end_col) <= (la.end_line, la.end_col)
            )

        direct = [n for n in inside if not any(encloses(m, n) for m in inside)]
        return sorted(direct, key=lambda n: (n.location.start_line, n.location.start_col, n.id))

    # canonical form -------------------------------------------------------

    def canonical(self) -> tuple[list[str], list[tuple]]:
        """Sorted node IDs and sorted edge multiset; equal iff graphs are equal."""
        edges = sorted(
            (e.relation.value, e.from_id, e.to_id, e.site.render() if e.site else "-")
            for e in self.edges
        )
        return sorted(self.nodes), edges

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CodeKnowledgeGraph):
            return NotImplemented
        if self.canonical() != other.canonical():
            return False
        return all(self.nodes[k] == other.nodes[k] for k in self.nodes)

    __hash__ = None  # mutable container

    def __repr__(self) -> str:
        return f"CodeKnowledgeGraph(nodes={len(self.nodes)}, edges={len(self.edges)})"

    def to_dict(self) -> dict:
        nodes = [self.nodes[k].to_dict() for k in sorted(self.nodes)]
        edges = sorted(self.edges, key=lambda e: (e.from_id, *e.sort_key()))
        return {"nodes": nodes, "edges": [e.to_dict() for e in edges]}


def build_graph(entities: Sequence[EntityFact], relations: Sequence[RelationFact]) -> CodeKnowledgeGraph:
    """Graph from fact streams; duplicate entities collapse, duplicate relations stay parallel."""
    graph = CodeKnowledgeGraph()
    for fact in sorted(entities, key=lambda f: (f.location.path, f.id)):
        graph.add_node(Node.from_fact(fact))
    dangling = [r for r in relations if r.source_id not in graph.nodes or r.target_id not in graph.nodes]
    if dangling:
        listing = "; ".join(f"{r.relation.value} {r.source_id} -> {r.target_id}" for r in dangling[:10])
        raise GraphError(f"{len(dangling)} relation(s) with dangling endpoints: {listing}")
    ordered = sorted(relations, key=lambda r: (r.site.path, r.site.start_line, r.site.start_col,
                                               r.site.end_line, r.site.end_col, r.relation.value,
                                               r.source_id, r.target_id))
    for r in ordered:
        graph.add_edge(r.relation, r.source_id, r.target_id, r.site)
    return graph


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def graph_to_json(graph: CodeKnowledgeGraph) -> str:
    return json.dumps(graph.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def save_graph(graph: CodeKnowledgeGraph, path: str | os.PathLike) -> None:
    Path(path).write_text(graph_to_json(graph), encoding="utf-8")


def graph_from_dict(doc: dict) -> CodeKnowledgeGraph:
    if not isinstance(doc, dict) or not isinstance(doc.get("nodes"), list) or not isinstance(doc.get("edges"), list):
        raise GraphFileError('graph document needs list-valued "nodes" and "edges"')
    graph = CodeKnowledgeGraph()
    try:
        for i, rec in enumerate(doc["nodes"]):
            node = Node(rec["name"], NodeType(rec["kind"]), Location.from_dict(rec["location"]),
                        rec.get("signature_text", ""), rec.get("body_text", ""))
            if rec.get("id", node.id) != node.id:
                raise GraphFileError(f"nodes[{i}]: id {rec['id']!r} does not match {node.id!r}")
            graph.add_node(node)
        for i, rec in enumerate(doc["edges"]):
            site = Location.from_dict(rec["site"]) if rec.get("site") else None
            graph.add_edge(EdgeRelation(rec["relation"]), rec["from"], rec["to"], site)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, GraphFileError):
            raise
        raise GraphFileError(f"malformed graph record: {exc!r}") from None
    return graph


def load_graph(path: str | os.PathLike) -> CodeKnowledgeGraph:
    raw = Path(path).read_bytes()
    try:
        doc = json.loads(raw.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise GraphFileError("graph file is not UTF-8", exc.start) from None
    except json.JSONDecodeError as exc:
        # JSONDecodeError.pos is a character index; convert to bytes
        offset = len(raw.decode("utf-8")[: exc.pos].encode("utf-8"))
        raise GraphFileError(f"corrupt graph file: {exc.msg}", offset) from None
    return graph_from_dict(doc)
