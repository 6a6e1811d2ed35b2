"""Repository scanning and static fact extraction.

The built-in analyzer handles a statically resolvable subset of Python:
top-level and nested ``class``/``def`` blocks, module-level variables,
absolute and relative imports, and direct (attribute-free) name references.
Anything outside that subset is skipped and reported as a diagnostic.
Facts produced by a stronger external analyzer can be loaded instead via
:func:`load_external_facts`.
"""

from __future__ import annotations

import ast
import builtins
import enum
import fnmatch
import io
import json
import logging
import os
import tokenize
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

logger = logging.getLogger(__name__)

DEFAULT_GLOBS = ("*.py",)

_BUILTIN_NAMES = frozenset(dir(builtins)) | {"__file__", "__name__", "__doc__", "__spec__", "__path__"}


class EntityKind(str, enum.Enum):
    MODULE = "MODULE"
    CLASS = "CLASS"
    FUNCTION = "FUNCTION"
    VARIABLE = "VARIABLE"

    def __str__(self) -> str:
        return self.value


class Relation(str, enum.Enum):
    Imports = "Imports"
    Calls = "Calls"
    Instantiates = "Instantiates"
    Uses = "Uses"
    Construct = "Construct"
    BaseClassOf = "BaseClassOf"
    Overrides = "Overrides"

    def __str__(self) -> str:
        return self.value


class RepoScanError(OSError):
    """The repository root cannot be read."""


class FactsSchemaError(ValueError):
    """A facts file record violates the schema.

    ``section`` is ``"entities"`` or ``"relations"`` and ``index`` the
    offending record position (``None`` for top-level problems).
    """

    def __init__(self, message: str, section: str | None = None, index: int | None = None):
        where = f"{section}[{index}]: " if section is not None and index is not None else ""
        super().__init__(where + message)
        self.section = section
        self.index = index


@dataclass(frozen=True, order=True)
class Location:
    path: str
    start_line: int
    start_col: int
    end_line: int
    end_col: int

    def __post_init__(self):
        if (self.start_line, self.start_col) > (self.end_line, self.end_col):
            raise ValueError(f"location starts after it ends: {self.render()}")

    def render(self) -> str:
        return f"{self.path}:{self.start_line}.{self.start_col}-{self.end_line}.{self.end_col}"

    @property
    def line_span(self) -> int:
        return self.end_line - self.start_line

    def contains_line(self, line: int) -> bool:
        return self.start_line <= line <= self.end_line

    def contains(self, line: int, col: int) -> bool:
        return (self.start_line, self.start_col) <= (line, col) <= (self.end_line, self.end_col)

    def to_dict(self) -> dict:
        return {
            "path": self.path,
            "start_line": self.start_line,
            "start_col": self.start_col,
            "end_line": self.end_line,
            "end_col": self.end_col,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Location":
        return cls(d["path"], d["start_line"], d["start_col"], d["end_line"], d["end_col"])


@dataclass(frozen=True)
class SourceFile:
    path: str
    text: str

    @property
    def line_count(self) -> int:
        return len(self.text.splitlines())

    @property
    def lines(self) -> list[str]:
        return self.text.splitlines()

    @property
    def module_name(self) -> str:
        return module_name_for(self.path)


@dataclass(frozen=True)
class EntityFact:
    name: str
    kind: EntityKind
    location: Location
    signature_text: str
    body_text: str

    @property
    def id(self) -> str:
        return entity_id(self.name, self.kind, self.location)

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
class RelationFact:
    relation: Relation
    source_id: str
    target_id: str
    site: Location

    def to_dict(self) -> dict:
        return {
            "relation": self.relation.value,
            "source_id": self.source_id,
            "target_id": self.target_id,
            "site": self.site.to_dict(),
        }


def entity_id(name: str, kind: EntityKind | str, location: Location) -> str:
    return f"{name}:{EntityKind(kind).value}@{location.render()}"


def module_name_for(path: str) -> str:
    parts = Path(path).with_suffix("").parts
    if parts and parts[-1] == "__init__":
        parts = parts[:-1]
    return ".".join(parts)


# ---------------------------------------------------------------------------
# Scanning
# ---------------------------------------------------------------------------


def scan_repo(
    root: str | os.PathLike,
    include_globs: Sequence[str] = DEFAULT_GLOBS,
    skipped: list[str] | None = None,
) -> list[SourceFile]:
    """Return all files under ``root`` whose repo-relative path matches a glob.

    Paths are POSIX-style and relative to ``root``; the result is sorted.
    Hidden directories (``.git``, index output dirs, ...) are not descended.
    Files that cannot be read or decoded are logged and, if ``skipped`` is
    given, appended to it as ``"<path>: <reason>"``.
    """
    root = Path(root)
    if not root.is_dir() or not os.access(root, os.R_OK | os.X_OK):
        raise RepoScanError(f"repository root is not a readable directory: {root}")

    found = []
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames[:] = sorted(d for d in dirnames if not d.startswith("."))
        for fname in filenames:
            rel = Path(dirpath, fname).relative_to(root).as_posix()
            if any(fnmatch.fnmatchcase(rel, g) for g in include_globs):
                found.append(rel)

    files = []
    for rel in sorted(found):
        try:
            text = (root / rel).read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            logger.warning("skipping %s: %s", rel, exc)
            if skipped is not None:
                skipped.append(f"{rel}: {exc}")
            continue
        files.append(SourceFile(rel, text))
    return files


# ---------------------------------------------------------------------------
# Pass 1: per-module symbols
# ---------------------------------------------------------------------------


@dataclass
class _ImportBinding:
    module: str  # absolute dotted module
    attr: str | None  # None for ``import module``


@dataclass
class ModuleSymbols:
    """Top-level definitions and import bindings of one module."""

    path: str
    module: str
    module_entity: EntityFact
    entities: list[EntityFact]
    toplevel: dict[str, EntityFact] = field(default_factory=dict)
    imports: dict[str, _ImportBinding] = field(default_factory=dict)
    class_methods: dict[str, dict[str, EntityFact]] = field(default_factory=dict)
    class_bases: dict[str, list[str]] = field(default_factory=dict)
    tree: ast.Module | None = None


class SymbolTable:
    """Repo-wide lookup used to resolve names across files."""

    def __init__(self, modules: Iterable[ModuleSymbols] = ()):
        self.modules: dict[str, ModuleSymbols] = {}
        for m in modules:
            self.modules[m.module] = m

    def resolve_attr(self, module: str, name: str, _seen: frozenset = frozenset()) -> EntityFact | None:
        """Entity bound to ``name`` inside ``module``, following re-exports."""
        key = (module, name)
        if key in _seen:
            return None
        mod = self.modules.get(module)
        if mod is not None:
            if name in mod.toplevel:
                return mod.toplevel[name]
            if name in mod.imports:
                return self.resolve_binding(mod.imports[name], _seen | {key})
        sub = self.modules.get(f"{module}.{name}" if module else name)
        if sub is not None:
            return sub.module_entity
        return None

    def resolve_binding(self, binding: _ImportBinding, _seen: frozenset = frozenset()) -> EntityFact | None:
        if binding.attr is None:
            mod = self.modules.get(binding.module)
            return mod.module_entity if mod else None
        return self.resolve_attr(binding.module, binding.attr, _seen)

    def methods_of(self, class_entity: EntityFact) -> dict[str, EntityFact]:
        mod = self.modules.get(module_name_for(class_entity.location.path))
        if mod is None:
            return {}
        return mod.class_methods.get(class_entity.id, {})

    def bases_of(self, class_entity: EntityFact) -> list[EntityFact]:
        mod = self.modules.get(module_name_for(class_entity.location.path))
        if mod is None:
            return []
        out = []
        for base_name in mod.class_bases.get(class_entity.id, []):
            ent = self._resolve_module_name(mod, base_name)
            if ent is not None and ent.kind is EntityKind.CLASS:
                out.append(ent)
        return out

    def _resolve_module_name(self, mod: ModuleSymbols, name: str) -> EntityFact | None:
        if name in mod.toplevel:
            return mod.toplevel[name]
        if name in mod.imports:
            return self.resolve_binding(mod.imports[name])
        return None


def _node_location(path: str, node: ast.AST) -> Location:
    # ast columns are 0-based; end_col_offset is exclusive, i.e. the 1-based inclusive end.
    return Location(path, node.lineno, node.col_offset + 1, node.end_lineno, max(node.end_col_offset, 1))


def _header_text(segment: str) -> str:
    """Prefix of a def/class segment up to and including the header colon."""
    depth = 0
    try:
        for tok in tokenize.generate_tokens(io.StringIO(segment).readline):
            if tok.type != tokenize.OP:
                continue
            if tok.string in "([{":
                depth += 1
            elif tok.string in ")]}":
                depth -= 1
            elif tok.string == ":" and depth == 0:
                lines = segment.splitlines(keepends=True)
                row, col = tok.end
                return "".join(lines[: row - 1]) + lines[row - 1][:col]
    except (tokenize.TokenError, IndentationError, SyntaxError):
        pass
    return segment.splitlines()[0] if segment else ""


def _module_entity(file: SourceFile) -> EntityFact:
    lines = file.lines
    end_line = max(len(lines), 1)
    end_col = max(len(lines[-1]), 1) if lines else 1
    loc = Location(file.path, 1, 1, end_line, end_col)
    return EntityFact(file.module_name or Path(file.path).stem, EntityKind.MODULE, loc, "", file.text)


def _absolute_module(current: str, is_package: bool, module: str | None, level: int) -> str:
    if level == 0:
        return module or ""
    parts = current.split(".") if current else []
    if not is_package:
        parts = parts[:-1]
    if level > 1:
        parts = parts[: len(parts) - (level - 1)] if level - 1 <= len(parts) else []
    if module:
        parts = parts + module.split(".")
    return ".".join(parts)


def collect_symbols(file: SourceFile, diagnostics: list[str] | None = None) -> ModuleSymbols:
    """First pass: entities, top-level bindings and class structure of one file."""
    module_ent = _module_entity(file)
    syms = ModuleSymbols(file.path, file.module_name, module_ent, [module_ent])
    try:
        tree = ast.parse(file.text, filename=file.path)
    except SyntaxError as exc:
        if diagnostics is not None:
            diagnostics.append(f"{file.path}:{exc.lineno or 0}: syntax error, file skipped: {exc.msg}")
        return syms
    syms.tree = tree
    is_package = Path(file.path).name == "__init__.py"

    def segment(node: ast.AST) -> str:
        return ast.get_source_segment(file.text, node) or ""

    def visit_block(body: list[ast.stmt], enclosing_class: EntityFact | None, toplevel: bool) -> None:
        for stmt in body:
            if isinstance(stmt, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef)):
                seg = segment(stmt)
                kind = EntityKind.CLASS if isinstance(stmt, ast.ClassDef) else EntityKind.FUNCTION
                ent = EntityFact(stmt.name, kind, _node_location(file.path, stmt), _header_text(seg), seg)
                syms.entities.append(ent)
                if toplevel:
                    syms.toplevel.setdefault(stmt.name, ent)
                if enclosing_class is not None and kind is EntityKind.FUNCTION:
                    syms.class_methods.setdefault(enclosing_class.id, {}).setdefault(stmt.name, ent)
                if kind is EntityKind.CLASS:
                    syms.class_methods.setdefault(ent.id, {})
                    syms.class_bases[ent.id] = [b.id for b in stmt.bases if isinstance(b, ast.Name)]
                    visit_block(stmt.body, ent, False)
                else:
                    visit_block(stmt.body, None, False)
            elif isinstance(stmt, (ast.If, ast.For, ast.AsyncFor, ast.While, ast.With, ast.AsyncWith)):
                # defs under compound statements still get entities, never top-level bindings
                for sub in (getattr(stmt, "body", []), getattr(stmt, "orelse", [])):
                    visit_block(sub, enclosing_class, False)
            elif isinstance(stmt, ast.Try):
                for sub in (stmt.body, stmt.orelse, stmt.finalbody, *[h.body for h in stmt.handlers]):
                    visit_block(sub, enclosing_class, False)
            elif toplevel and isinstance(stmt, (ast.Assign, ast.AnnAssign)):
                targets = stmt.targets if isinstance(stmt, ast.Assign) else [stmt.target]
                seg = segment(stmt)
                for name in _assigned_names(targets):
                    if name in syms.toplevel:
                        continue  # single-assignment resolution: first binding wins
                    ent = EntityFact(name, EntityKind.VARIABLE, _node_location(file.path, stmt), seg.splitlines()[0], seg)
                    syms.entities.append(ent)
                    syms.toplevel[name] = ent

    visit_block(tree.body, None, True)

    for stmt in tree.body:
        if isinstance(stmt, ast.Import):
            for alias in stmt.names:
                if alias.asname:
                    syms.imports[alias.asname] = _ImportBinding(alias.name, None)
                else:
                    head = alias.name.split(".")[0]
                    syms.imports.setdefault(head, _ImportBinding(head, None))
        elif isinstance(stmt, ast.ImportFrom):
            base = _absolute_module(syms.module, is_package, stmt.module, stmt.level)
            for alias in stmt.names:
                if alias.name == "*":
                    continue
                syms.imports.setdefault(alias.asname or alias.name, _ImportBinding(base, alias.name))
    return syms


def _assigned_names(targets: Iterable[ast.expr]) -> list[str]:
    out = []
    for t in targets:
        if isinstance(t, ast.Name):
            out.append(t.id)
        elif isinstance(t, (ast.Tuple, ast.List)):
            out.extend(_assigned_names(t.elts))
        elif isinstance(t, ast.Starred):
            out.extend(_assigned_names([t.value]))
    return out


# ---------------------------------------------------------------------------
# Pass 2: relations
# ---------------------------------------------------------------------------


def _function_locals(node: ast.FunctionDef | ast.AsyncFunctionDef | ast.Lambda) -> set[str]:
    args = node.args
    names = {a.arg for a in (*args.posonlyargs, *args.args, *args.kwonlyargs)}
    if args.vararg:
        names.add(args.vararg.arg)
    if args.kwarg:
        names.add(args.kwarg.arg)
    if isinstance(node, ast.Lambda):
        return names
    declared_global: set[str] = set()
    stack: list[ast.AST] = list(node.body)
    while stack:
        n = stack.pop()
        if isinstance(n, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef)):
            names.add(n.name)
            continue  # nested scope
        if isinstance(n, ast.Lambda):
            continue
        if isinstance(n, (ast.Global, ast.Nonlocal)):
            declared_global.update(n.names)
        elif isinstance(n, ast.Name) and isinstance(n.ctx, (ast.Store, ast.Del)):
            names.add(n.id)
        elif isinstance(n, (ast.Import, ast.ImportFrom)):
            for alias in n.names:
                if alias.name != "*":
                    names.add(alias.asname or alias.name.split(".")[0])
        elif isinstance(n, ast.ExceptHandler) and n.name:
            names.add(n.name)
        stack.extend(ast.iter_child_nodes(n))
    return names - declared_global


@dataclass
class _Scope:
    kind: str  # "function" | "class" | "comprehension"
    names: set[str]
    imports: dict[str, EntityFact | None] = field(default_factory=dict)


class _RelationVisitor(ast.NodeVisitor):
    def __init__(self, syms: ModuleSymbols, table: SymbolTable, diagnostics: list[str]):
        self.syms = syms
        self.table = table
        self.diagnostics = diagnostics
        self.path = syms.path
        self.is_package = Path(syms.path).name == "__init__.py"
        self.scopes: list[_Scope] = []
        self.relations: list[RelationFact] = []
        # smallest-first so the first containing entity is the innermost one
        self._by_span = sorted(
            syms.entities,
            key=lambda e: (e.location.line_span, -e.location.start_line, -e.location.start_col, e.id),
        )
        self._module_bindings: dict[str, EntityFact | None] = {}
        self._bind_module_imports()

    # -- helpers ---------------------------------------------------------

    def _innermost(self, line: int, col: int) -> EntityFact:
        for ent in self._by_span:
            if ent.kind is EntityKind.MODULE:
                continue
            if ent.location.contains(line, col):
                return ent
        return self.syms.module_entity

    def _emit(self, relation: Relation, target: EntityFact, node: ast.AST, source: EntityFact | None = None) -> None:
        site = _node_location(self.path, node)
        if source is None:
            source = self._innermost(site.start_line, site.start_col)
        self.relations.append(RelationFact(relation, source.id, target.id, site))

    def _diag(self, node: ast.AST, msg: str) -> None:
        self.diagnostics.append(f"{self.path}:{getattr(node, 'lineno', 0)}:{getattr(node, 'col_offset', -1) + 1}: {msg}")

    def _bind_module_imports(self) -> None:
        for name, binding in self.syms.imports.items():
            self._module_bindings[name] = self.table.resolve_binding(binding)

    def _import_targets(self, node: ast.Import | ast.ImportFrom) -> list[tuple]:
        """(alias, bound name, imported entity, entity bound to the name) per alias."""
        out = []
        if isinstance(node, ast.Import):
            for alias in node.names:
                target = self.table.resolve_binding(_ImportBinding(alias.name, None))
                bound = alias.asname or alias.name.split(".")[0]
                if alias.asname is None:
                    head = self.table.resolve_binding(_ImportBinding(alias.name.split(".")[0], None))
                    out.append((alias, bound, target, head))
                else:
                    out.append((alias, bound, target, target))
        else:
            base = _absolute_module(self.syms.module, self.is_package, node.module, node.level)
            for alias in node.names:
                if alias.name == "*":
                    self._diag(node, f"star-import from {base!r} not supported")
                    continue
                target = self.table.resolve_attr(base, alias.name)
                out.append((alias, alias.asname or alias.name, target, target))
        return out

    def _lookup(self, name: str) -> tuple[bool, EntityFact | None]:
        """(found, entity). found=False means the name is unknown."""
        for i in range(len(self.scopes) - 1, -1, -1):
            scope = self.scopes[i]
            if scope.kind == "class" and i != len(self.scopes) - 1:
                continue  # class bodies are not enclosing scopes for nested code
            if name in scope.imports:
                return True, scope.imports[name]
            if name in scope.names:
                return True, None
        if name in self.syms.toplevel:
            return True, self.syms.toplevel[name]
        if name in self._module_bindings:
            return True, self._module_bindings[name]
        return False, None

    def _resolve_name(self, node: ast.Name) -> EntityFact | None:
        found, ent = self._lookup(node.id)
        if not found and node.id not in _BUILTIN_NAMES:
            self._diag(node, f"unresolved name {node.id!r}")
        return ent

    # -- visitors --------------------------------------------------------

    def visit_Import(self, node: ast.Import) -> None:
        self._visit_import(node)

    def visit_ImportFrom(self, node: ast.ImportFrom) -> None:
        self._visit_import(node)

    def _visit_import(self, node: ast.Import | ast.ImportFrom) -> None:
        for alias, bound, target, binding in self._import_targets(node):
            if target is None:
                self._diag(alias, f"unresolved import {getattr(node, 'module', None) or alias.name!r}: {alias.name!r}")
            else:
                self._emit(Relation.Imports, target, alias, source=self.syms.module_entity)
            if self.scopes:
                self.scopes[-1].imports[bound] = binding
            else:
                self._module_bindings.setdefault(bound, binding)

    def visit_ClassDef(self, node: ast.ClassDef) -> None:
        for deco in node.decorator_list:
            self.visit(deco)
        class_ent = self._entity_for(node, EntityKind.CLASS)
        for base in node.bases:
            if isinstance(base, ast.Name):
                ent = self._resolve_name(base)
                if ent is not None and ent.kind is EntityKind.CLASS and class_ent is not None:
                    self._emit(Relation.BaseClassOf, ent, base, source=class_ent)
                    continue
            self.visit(base)
        for kw in node.keywords:
            self.visit(kw.value)

        if class_ent is not None:
            methods = self.table.methods_of(class_ent)
            init = methods.get("__init__")
            if init is not None:
                init_node = next(
                    s for s in node.body
                    if isinstance(s, (ast.FunctionDef, ast.AsyncFunctionDef)) and s.name == "__init__"
                )
                self._emit(Relation.Construct, init, init_node, source=class_ent)
            bases = self.table.bases_of(class_ent)
            for stmt in node.body:
                if not isinstance(stmt, (ast.FunctionDef, ast.AsyncFunctionDef)):
                    continue
                own = methods.get(stmt.name)
                if own is None or own.location != _node_location(self.path, stmt):
                    continue
                overridden = self._find_inherited(bases, stmt.name)
                if overridden is not None:
                    self._emit(Relation.Overrides, overridden, stmt, source=own)

        class_names = set()
        for stmt in node.body:
            if isinstance(stmt, (ast.Assign, ast.AnnAssign)):
                class_names.update(_assigned_names(stmt.targets if isinstance(stmt, ast.Assign) else [stmt.target]))
            elif isinstance(stmt, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef)):
                class_names.add(stmt.name)
        self.scopes.append(_Scope("class", class_names))
        for stmt in node.body:
            self.visit(stmt)
        self.scopes.pop()

    def _find_inherited(self, bases: list[EntityFact], name: str, _seen: set | None = None) -> EntityFact | None:
        seen = _seen if _seen is not None else set()
        for base in bases:
            if base.id in seen:
                continue
            seen.add(base.id)
            method = self.table.methods_of(base).get(name)
            if method is not None:
                return method
            found = self._find_inherited(self.table.bases_of(base), name, seen)
            if found is not None:
                return found
        return None

    def _entity_for(self, node: ast.AST, kind: EntityKind) -> EntityFact | None:
        loc = _node_location(self.path, node)
        for ent in self.syms.entities:
            if ent.kind is kind and ent.location == loc:
                return ent
        return None

    def visit_FunctionDef(self, node: ast.FunctionDef | ast.AsyncFunctionDef) -> None:
        for deco in node.decorator_list:
            self.visit(deco)
        args = node.args
        for default in (*args.defaults, *[d for d in args.kw_defaults if d is not None]):
            self.visit(default)
        for a in (*args.posonlyargs, *args.args, *args.kwonlyargs, args.vararg, args.kwarg):
            if a is not None and a.annotation is not None:
                self.visit(a.annotation)
        if node.returns is not None:
            self.visit(node.returns)
        self.scopes.append(_Scope("function", _function_locals(node)))
        for stmt in node.body:
            self.visit(stmt)
        self.scopes.pop()

    visit_AsyncFunctionDef = visit_FunctionDef

    def visit_Lambda(self, node: ast.Lambda) -> None:
        for default in (*node.args.defaults, *[d for d in node.args.kw_defaults if d is not None]):
            self.visit(default)
        self.scopes.append(_Scope("function", _function_locals(node)))
        self.visit(node.body)
        self.scopes.pop()

    def _visit_comprehension(self, node: ast.AST, elts: list[ast.AST]) -> None:
        names = set()
        for gen in node.generators:
            names.update(_assigned_names([gen.target]))
        # the first iterable is evaluated in the enclosing scope
        self.visit(node.generators[0].iter)
        self.scopes.append(_Scope("comprehension", names))
        for i, gen in enumerate(node.generators):
            if i:
                self.visit(gen.iter)
            for cond in gen.ifs:
                self.visit(cond)
        for e in elts:
            self.visit(e)
        self.scopes.pop()

    def visit_ListComp(self, node: ast.ListComp) -> None:
        self._visit_comprehension(node, [node.elt])

    visit_SetComp = visit_ListComp
    visit_GeneratorExp = visit_ListComp

    def visit_DictComp(self, node: ast.DictComp) -> None:
        self._visit_comprehension(node, [node.key, node.value])

    def visit_Call(self, node: ast.Call) -> None:
        if isinstance(node.func, ast.Name):
            ent = self._resolve_name(node.func)
            if ent is not None:
                rel = {
                    EntityKind.FUNCTION: Relation.Calls,
                    EntityKind.CLASS: Relation.Instantiates,
                }.get(ent.kind, Relation.Uses)
                self._emit(rel, ent, node)
        else:
            self.visit(node.func)
        for arg in node.args:
            self.visit(arg)
        for kw in node.keywords:
            self.visit(kw.value)

    def visit_Name(self, node: ast.Name) -> None:
        if not isinstance(node.ctx, ast.Load):
            return
        ent = self._resolve_name(node)
        if ent is not None:
            self._emit(Relation.Uses, ent, node)

    def visit_Global(self, node: ast.Global) -> None:
        pass

    visit_Nonlocal = visit_Global


def build_symbol_table(files: Sequence[SourceFile], diagnostics: list[str] | None = None) -> SymbolTable:
    return SymbolTable(collect_symbols(f, diagnostics) for f in files)


def extract_facts(
    file: SourceFile,
    symbols: SymbolTable | None = None,
    diagnostics: list[str] | None = None,
) -> tuple[list[EntityFact], list[RelationFact]]:
    """Entity and relation facts for one file.

    Cross-file references resolve only through ``symbols``; without a table
    the file is analyzed in isolation. Unresolved names are appended to
    ``diagnostics`` rather than raised.
    """
    diags = diagnostics if diagnostics is not None else []
    if symbols is not None and file.module_name in symbols.modules and symbols.modules[file.module_name].path == file.path:
        syms = symbols.modules[file.module_name]
    else:
        syms = collect_symbols(file, diags)
        symbols = SymbolTable([*(symbols.modules.values() if symbols else []), syms])
    if syms.tree is None:
        return list(syms.entities), []
    visitor = _RelationVisitor(syms, symbols, diags)
    for stmt in syms.tree.body:
        visitor.visit(stmt)
    return list(syms.entities), visitor.relations


@dataclass
class FactStream:
    entities: list[EntityFact]
    relations: list[RelationFact]
    diagnostics: list[str]


def extract_repo(files: Sequence[SourceFile]) -> FactStream:
    """Two-pass extraction over a whole repository snapshot, merged in path order."""
    diagnostics: list[str] = []
    table = build_symbol_table(sorted(files, key=lambda f: f.path), diagnostics)
    entities: list[EntityFact] = []
    relations: list[RelationFact] = []
    for f in sorted(files, key=lambda f: f.path):
        ents, rels = extract_facts(f, table, diagnostics)
        entities.extend(ents)
        relations.extend(rels)
    return FactStream(entities, relations, diagnostics)


# ---------------------------------------------------------------------------
# Facts file
# ---------------------------------------------------------------------------


def facts_to_json(entities: Sequence[EntityFact], relations: Sequence[RelationFact]) -> str:
    doc = {
        "entities": [e.to_dict() for e in entities],
        "relations": [r.to_dict() for r in relations],
    }
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def dump_facts(path: str | os.PathLike, entities: Sequence[EntityFact], relations: Sequence[RelationFact]) -> None:
    Path(path).write_text(facts_to_json(entities, relations), encoding="utf-8")


_LOC_KEYS = ("path", "start_line", "start_col", "end_line", "end_col")


def _parse_location(raw, section: str, index: int, key: str) -> Location:
    if not isinstance(raw, dict):
        raise FactsSchemaError(f"{key} must be an object", section, index)
    missing = [k for k in _LOC_KEYS if k not in raw]
    if missing:
        raise FactsSchemaError(f"{key} missing {', '.join(missing)}", section, index)
    if not isinstance(raw["path"], str):
        raise FactsSchemaError(f"{key}.path must be a string", section, index)
    for k in _LOC_KEYS[1:]:
        v = raw[k]
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise FactsSchemaError(f"{key}.{k} must be a positive integer", section, index)
    try:
        return Location.from_dict(raw)
    except ValueError as exc:
        raise FactsSchemaError(f"{key}: {exc}", section, index) from None


def _require_str(rec: dict, key: str, section: str, index: int) -> str:
    v = rec.get(key)
    if not isinstance(v, str):
        raise FactsSchemaError(f"{key!r} must be a string", section, index)
    return v


def parse_facts(doc) -> tuple[list[EntityFact], list[RelationFact]]:
    if not isinstance(doc, dict) or not isinstance(doc.get("entities"), list) or not isinstance(doc.get("relations"), list):
        raise FactsSchemaError('facts document needs list-valued "entities" and "relations"')

    entities = []
    for i, rec in enumerate(doc["entities"]):
        if not isinstance(rec, dict):
            raise FactsSchemaError("record must be an object", "entities", i)
        name = _require_str(rec, "name", "entities", i)
        kind_raw = _require_str(rec, "kind", "entities", i)
        try:
            kind = EntityKind(kind_raw)
        except ValueError:
            raise FactsSchemaError(f"unknown kind {kind_raw!r}", "entities", i) from None
        loc = _parse_location(rec.get("location"), "entities", i, "location")
        ent = EntityFact(
            name, kind, loc,
            _require_str(rec, "signature_text", "entities", i),
            _require_str(rec, "body_text", "entities", i),
        )
        if "id" in rec and rec["id"] != ent.id:
            raise FactsSchemaError(f"id {rec['id']!r} does not match {ent.id!r}", "entities", i)
        entities.append(ent)

    relations = []
    for i, rec in enumerate(doc["relations"]):
        if not isinstance(rec, dict):
            raise FactsSchemaError("record must be an object", "relations", i)
        rel_raw = _require_str(rec, "relation", "relations", i)
        try:
            rel = Relation(rel_raw)
        except ValueError:
            raise FactsSchemaError(f"unknown relation {rel_raw!r}", "relations", i) from None
        relations.append(RelationFact(
            rel,
            _require_str(rec, "source_id", "relations", i),
            _require_str(rec, "target_id", "relations", i),
            _parse_location(rec.get("site"), "relations", i, "site"),
        ))
    return entities, relations


def load_external_facts(path: str | os.PathLike) -> tuple[list[EntityFact], list[RelationFact]]:
    """Load and validate a facts JSON file produced by any analyzer."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FactsSchemaError(f"invalid JSON at byte {exc.pos}: {exc.msg}") from None
    return parse_facts(doc)
