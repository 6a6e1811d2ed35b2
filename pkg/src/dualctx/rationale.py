"""Rationale context: signatures of cross-file constructs usable at the cursor."""

from __future__ import annotations

import ast
import textwrap
from dataclasses import dataclass

from .graph import CodeKnowledgeGraph, Edge, EdgeRelation, Node, NodeType

RELATED_RELATIONS = frozenset({
    EdgeRelation.Construct,
    EdgeRelation.BaseClassOf,
    EdgeRelation.Overrides,
    EdgeRelation.Calls,
    EdgeRelation.Instantiates,
    EdgeRelation.Uses,
})

METHOD, CLASS, PACKAGE = "rationale-method", "rationale-class", "rationale-package"

_BUCKET = {
    NodeType.FUNCTION: METHOD,
    NodeType.CLASS: CLASS,
    NodeType.MODULE: PACKAGE,
    NodeType.VARIABLE: PACKAGE,  # module-level names are offered by their package
}


@dataclass(frozen=True)
class RationaleItem:
    node_id: str
    source: str  # METHOD | CLASS | PACKAGE
    path: str
    text: str
    edge_id: str
    site_line: int

    @property
    def item_id(self) -> str:
        return self.node_id

    def to_dict(self) -> dict:
        return {
            "id": self.node_id,
            "path": self.path,
            "edge": self.edge_id,
            "site_line": self.site_line,
            "text": self.text,
        }


@dataclass(frozen=True)
class RationaleContext:
    methods: tuple[RationaleItem, ...] = ()
    classes: tuple[RationaleItem, ...] = ()
    packages: tuple[RationaleItem, ...] = ()

    def items(self) -> list[RationaleItem]:
        return [*self.methods, *self.classes, *self.packages]

    def ids(self) -> tuple[frozenset, frozenset, frozenset]:
        return tuple(frozenset(i.node_id for i in bucket) for bucket in (self.methods, self.classes, self.packages))

    def __len__(self) -> int:
        return len(self.methods) + len(self.classes) + len(self.packages)

    def to_dict(self) -> dict:
        return {
            "methods": [i.to_dict() for i in self.methods],
            "classes": [i.to_dict() for i in self.classes],
            "packages": [i.to_dict() for i in self.packages],
        }


def _reindent(text: str, col: int, indent: str) -> str:
    """Strip the source column offset from continuation lines, then indent."""
    lines = text.splitlines()
    if not lines:
        return ""
    out = [lines[0].strip()]
    pad = col - 1
    for line in lines[1:]:
        out.append(line[pad:] if line[:pad].strip() == "" else line.strip())
    return textwrap.indent("\n".join(out), indent)


def _class_field_lines(node: Node) -> list[tuple[int, str]]:
    """(line, text) of class-level assignments and ``self.x = ...`` in ``__init__``.

    Text keeps its indentation relative to the ``class`` keyword.
    """
    body = " " * (node.location.start_col - 1) + node.body_text
    try:
        tree = ast.parse(textwrap.dedent(body))
    except SyntaxError:
        return []
    cls = tree.body[0] if tree.body and isinstance(tree.body[0], ast.ClassDef) else None
    if cls is None:
        return []
    src_lines = textwrap.dedent(body).splitlines()
    base = node.location.start_line - 1
    fields = []
    seen = set()

    def add(stmt: ast.stmt, names: list[str]) -> None:
        fresh = [n for n in names if n not in seen]
        if not fresh:
            return
        seen.update(fresh)
        fields.append((base + stmt.lineno, src_lines[stmt.lineno - 1].rstrip()))

    for stmt in cls.body:
        if isinstance(stmt, ast.Assign):
            add(stmt, [t.id for t in stmt.targets if isinstance(t, ast.Name)])
        elif isinstance(stmt, ast.AnnAssign) and isinstance(stmt.target, ast.Name):
            add(stmt, [stmt.target.id])
    for stmt in cls.body:
        if isinstance(stmt, (ast.FunctionDef, ast.AsyncFunctionDef)) and stmt.name == "__init__":
            for sub in ast.walk(stmt):
                targets = []
                if isinstance(sub, ast.Assign):
                    targets = sub.targets
                elif isinstance(sub, ast.AnnAssign):
                    targets = [sub.target]
                names = [
                    t.attr for t in targets
                    if isinstance(t, ast.Attribute) and isinstance(t.value, ast.Name) and t.value.id == "self"
                ]
                if names:
                    add(sub, names)
    return fields


def signature_of(node: Node, graph: CodeKnowledgeGraph) -> str:
    """Signature text of a node.

    FUNCTION: its declaration header. CLASS: header plus the fields and
    method headers it offers, in source order. MODULE: the signatures of
    its top-level classes and functions. VARIABLE: its declaration line.
    """
    if node.kind in (NodeType.FUNCTION, NodeType.VARIABLE):
        return node.signature_text
    if node.kind is NodeType.CLASS:
        members = list(_class_field_lines(node))
        for child in graph.children(node):
            if child.kind is NodeType.FUNCTION:
                indent = " " * (child.location.start_col - node.location.start_col)
                members.append((child.location.start_line, _reindent(child.signature_text, child.location.start_col, indent)))
        members.sort(key=lambda m: m[0])
        parts = [_reindent(node.signature_text, node.location.start_col, "")]
        parts += [text for _, text in members]
        return "\n".join(parts)
    return "\n\n".join(signature_of(child, graph) for child in graph.children(node))


def innermost_nodes_upto(graph: CodeKnowledgeGraph, path: str, cursor_line: int) -> list[Node]:
    """Distinct innermost nodes of lines ``1..cursor_line``, in first-seen order."""
    seen: dict[str, Node] = {}
    for line in range(1, cursor_line + 1):
        node = graph.innermost_enclosing(path, line)
        seen.setdefault(node.id, node)
    return list(seen.values())


def retrieve_rationale(
    graph: CodeKnowledgeGraph,
    path: str,
    cursor_line: int,
    cumulative: bool = True,
) -> RationaleContext:
    """Rationale context for ``cursor_line`` of ``path``.

    Collects the reference edges (the six non-import relations) of the
    innermost node around the cursor plus the file's import edges, keeps
    those whose target lives in another file and whose site starts before
    the cursor line, and renders each distinct target once: full code for
    functions, signatures for everything else.

    With ``cumulative`` (the default) reference edges are gathered from the
    innermost node of every line up to the cursor, not only the cursor's
    own, so the context only grows as the cursor moves down. The two modes
    agree whenever cross-file references go through an import; they differ
    for targets reached without one, such as an overridden base method.
    """
    nodes = innermost_nodes_upto(graph, path, cursor_line) if cumulative else [graph.innermost_enclosing(path, cursor_line)]
    related = [e for node in nodes for e in graph.related_edges(node, RELATED_RELATIONS)]
    imports = graph.import_edges(graph.module_node(path))

    picked: dict[str, Edge] = {}
    for e in sorted({e.index: e for e in (*related, *imports)}.values(), key=Edge.sort_key):
        out = graph.nodes[e.to_id]
        if out.path == path or e.site is None or e.site.start_line >= cursor_line:
            continue
        picked.setdefault(out.id, e)

    buckets: dict[str, list[RationaleItem]] = {METHOD: [], CLASS: [], PACKAGE: []}
    for node_id, e in picked.items():
        out = graph.nodes[node_id]
        if out.kind is NodeType.FUNCTION:
            text = _reindent(out.body_text, out.location.start_col, "")
        else:
            text = signature_of(out, graph)
        bucket = _BUCKET[out.kind]
        buckets[bucket].append(RationaleItem(node_id, bucket, out.path, text, e.id, e.site.start_line))
    return RationaleContext(tuple(buckets[METHOD]), tuple(buckets[CLASS]), tuple(buckets[PACKAGE]))
