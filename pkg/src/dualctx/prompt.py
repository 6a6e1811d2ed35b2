"""Prompt assembly from a truncated dual context and the in-file prefix."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable

from .chunking import editable_lines
from .similarity import tokenize_code

if TYPE_CHECKING:
    from .rtg import TruncatedDualContext

ORDERS = ("HighToLow", "LowToHigh", "Random")
DEFAULT_INFILE_BUDGET = 2048


def render_block(source: str, origin: str, text: str) -> str:
    """One cross-file item as a comment block with a ``# <kind>: <path>`` header."""
    body = "\n".join(f"# {line}" if line else "#" for line in text.splitlines())
    return f"# {source}: {origin}\n{body}" if body else f"# {source}: {origin}"


@dataclass(frozen=True)
class PromptBundle:
    cross_file_block: str
    infile_block: str
    full_prompt: str
    stats: dict

    def to_dict(self) -> dict:
        return {"prompt": self.full_prompt, "stats": dict(self.stats)}


def _count(text: str, counter: Callable[[str], int] | None) -> int:
    return counter(text) if counter is not None else len(tokenize_code(text))


def truncate_prefix(lines: list[str], budget: int, counter: Callable[[str], int] | None = None) -> str:
    """Suffix-most lines of ``lines`` whose joined text fits ``budget`` tokens.

    The last line is always kept; if it alone is too long, its leading
    characters are trimmed until it fits.
    """
    if not lines:
        return ""
    kept: list[str] = []
    total = 0
    for line in reversed(lines):
        n = _count(line, counter)
        if total + n > budget:
            break
        kept.append(line)
        total += n
    if kept:
        return "\n".join(reversed(kept))
    last = lines[-1]
    lo, hi = 0, len(last)
    while lo < hi:  # smallest cut whose suffix fits
        mid = (lo + hi) // 2
        if _count(last[mid:], counter) <= budget:
            hi = mid
        else:
            lo = mid + 1
    return last[lo:]


def assemble(
    tdc: "TruncatedDualContext",
    edited_text: str,
    cursor_line: int,
    order: str = "HighToLow",
    infile_budget: int = DEFAULT_INFILE_BUDGET,
    seed: int = 0,
    counter: Callable[[str], int] | None = None,
) -> PromptBundle:
    """Render the selected items in ``order`` followed by the in-file prefix.

    The in-file block is lines ``1..cursor_line`` of ``edited_text``, cut
    from the top to fit ``infile_budget``; the prompt ends exactly at the
    cursor line.
    """
    if order not in ORDERS:
        raise ValueError(f"unknown order {order!r}; expected one of {ORDERS}")
    items = list(tdc.selected)  # already HighToLow
    if order == "LowToHigh":
        items.reverse()
    elif order == "Random":
        random.Random(seed).shuffle(items)

    blocks = [render_block(i.source, i.origin, i.text) for i in items]
    cross = "\n\n".join(blocks) + "\n\n" if blocks else ""

    lines = editable_lines(edited_text)[:cursor_line]
    infile = truncate_prefix(lines, infile_budget, counter)
    stats = {
        "n_ac": tdc.n_analogy,
        "n_rc": tdc.n_rationale,
        "crossfile_tokens": sum(i.token_len for i in items),
        "infile_tokens": _count(infile, counter),
        "order": order,
    }
    return PromptBundle(cross, infile, cross + infile, stats)
