"""Fixed-size sliding-window chunk cover over repository files."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .source_model import SourceFile

DEFAULT_ELL = 10
DEFAULT_ETA = 5


class ChunkingError(ValueError):
    pass


@dataclass(frozen=True)
class CodeChunk:
    file: str
    start_line: int
    n_lines: int
    text: str

    @property
    def end_line(self) -> int:
        return self.start_line + self.n_lines - 1

    @property
    def line_range(self) -> range:
        return range(self.start_line, self.end_line + 1)

    @property
    def key(self) -> tuple[str, int]:
        return (self.file, self.start_line)


@dataclass(frozen=True)
class UnfinishedChunk:
    text: str
    start_line: int
    end_line: int


@dataclass
class ChunkCover:
    chunks: list[CodeChunk]
    ell: int
    eta: int
    _next: dict[tuple[str, int], CodeChunk] = field(default_factory=dict, repr=False)
    _index: dict[tuple[str, int], CodeChunk] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._index = {c.key: c for c in self.chunks}
        self._next = {}
        for a, b in zip(self.chunks, self.chunks[1:]):
            if a.file == b.file:
                self._next[a.key] = b

    def __len__(self) -> int:
        return len(self.chunks)

    def __iter__(self):
        return iter(self.chunks)

    def files(self) -> list[str]:
        return sorted({c.file for c in self.chunks})

    def get(self, file: str, start_line: int) -> CodeChunk | None:
        return self._index.get((file, start_line))


def _check_params(ell: int, eta: int) -> None:
    if ell < 1:
        raise ChunkingError(f"chunk length must be >= 1, got {ell}")
    if not 1 <= eta <= ell:
        raise ChunkingError(f"sliding step must satisfy 1 <= eta <= ell, got eta={eta}, ell={ell}")


def chunk_starts(n_lines: int, ell: int, eta: int) -> list[int]:
    """1-based start lines of the windows covering an ``n_lines`` file."""
    _check_params(ell, eta)
    if n_lines == 0:
        return []
    if n_lines < ell:
        return [1]
    starts = list(range(1, n_lines - ell + 2, eta))
    last = n_lines - ell + 1
    if starts[-1] != last:
        # back-shifted tail window so the final lines are covered
        starts.append(last)
    return starts


def build_cover(files: Sequence[SourceFile], ell: int = DEFAULT_ELL, eta: int = DEFAULT_ETA) -> ChunkCover:
    """Chunks for every file, ordered by (path, start line). Chunks never span files."""
    _check_params(ell, eta)
    chunks = []
    for f in sorted(files, key=lambda f: f.path):
        lines = f.lines
        for s in chunk_starts(len(lines), ell, eta):
            window = lines[s - 1 : s - 1 + ell]
            chunks.append(CodeChunk(f.path, s, len(window), "\n".join(window)))
    return ChunkCover(chunks, ell, eta)


def successor(cover: ChunkCover, ck: CodeChunk) -> CodeChunk | None:
    """The next window of the same file, or None for the file's last chunk.

    For regular windows this starts ``eta`` lines later; the last regular
    window's successor is the back-shifted tail window when one exists.
    """
    return cover._next.get(ck.key)


def editable_lines(edited_text: str) -> list[str]:
    """Lines the cursor can sit on; a trailing newline opens an empty unfinished line."""
    lines = edited_text.splitlines()
    if not edited_text or edited_text.endswith(("\n", "\r")):
        lines.append("")
    return lines


def unfinished_chunk(edited_text: str, cursor_line: int, ell: int = DEFAULT_ELL) -> UnfinishedChunk:
    lines = editable_lines(edited_text)
    if not 1 <= cursor_line <= len(lines):
        raise ChunkingError(f"cursor line {cursor_line} outside 1..{len(lines)}")
    start = max(1, cursor_line - ell + 1)
    return UnfinishedChunk("\n".join(lines[start - 1 : cursor_line]), start, cursor_line)


# chunk index file -----------------------------------------------------------


def cover_to_json(cover: ChunkCover) -> str:
    records = [{"file": c.file, "start_line": c.start_line, "n_lines": c.n_lines} for c in cover.chunks]
    return json.dumps(records, indent=2, sort_keys=True) + "\n"


def save_cover(cover: ChunkCover, path: str | os.PathLike) -> None:
    Path(path).write_text(cover_to_json(cover), encoding="utf-8")


def load_cover(path: str | os.PathLike, files: Sequence[SourceFile], ell: int, eta: int) -> ChunkCover:
    """Rehydrate chunk texts from ``files`` using a saved chunk index."""
    _check_params(ell, eta)
    try:
        records = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ChunkingError(f"corrupt chunk index at char {exc.pos}: {exc.msg}") from None
    by_path = {f.path: f.lines for f in files}
    chunks = []
    for i, rec in enumerate(records):
        try:
            lines = by_path[rec["file"]]
            s, n = int(rec["start_line"]), int(rec["n_lines"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ChunkingError(f"chunk record {i} invalid: {exc!r}") from None
        if s < 1 or n < 1 or s + n - 1 > len(lines) or n > ell:
            raise ChunkingError(f"chunk record {i} out of range for {rec['file']}")
        chunks.append(CodeChunk(rec["file"], s, n, "\n".join(lines[s - 1 : s - 1 + n])))
    chunks.sort(key=lambda c: c.key)
    return ChunkCover(chunks, ell, eta)
