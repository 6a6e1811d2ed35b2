"""Reference implementations used only by the tests.

Each is written from the definition, independently of the library code.
"""

import numpy as np


def dp_levenshtein(a: str, b: str) -> int:
    """Full-matrix Wagner-Fischer."""
    rows, cols = len(a) + 1, len(b) + 1
    d = [[0] * cols for _ in range(rows)]
    for i in range(rows):
        d[i][0] = i
    for j in range(cols):
        d[0][j] = j
    for i in range(1, rows):
        for j in range(1, cols):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            d[i][j] = min(d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + cost)
    return d[-1][-1]


def dp_edit_similarity(a: str, b: str) -> float:
    if not a and not b:
        return 1.0
    return 1.0 - dp_levenshtein(a, b) / max(len(a), len(b))


def multiset_prf(pred: list[str], gt: list[str]) -> tuple[float, float, float]:
    """Precision/recall/F1 by pairing off equal identifiers one at a time."""
    if not pred and not gt:
        return 1.0, 1.0, 1.0
    remaining = list(gt)
    matched = 0
    for tok in pred:
        if tok in remaining:
            remaining.remove(tok)
            matched += 1
    p = matched / len(pred) if pred else 0.0
    r = matched / len(gt) if gt else 0.0
    f1 = 0.0 if p + r == 0 else 2 * p * r / (p + r)
    return p, r, f1


_PRIORITY = {"rationale-method": 0, "rationale-class": 1, "rationale-package": 2, "analogy": 3}


def outranks(a, b) -> bool:
    """True when ``a`` must be kept whenever ``b`` is."""
    if a.score != b.score:
        return a.score > b.score
    pa, pb = _PRIORITY[a.source], _PRIORITY[b.source]
    if pa != pb:
        return pa < pb
    return a.item_id < b.item_id


def brute_force_tdc(items, budget: int) -> set[str]:
    """Largest subset that fits the budget and is closed under ``outranks``.

    Enumerates every subset as a bitmask, vectorised with numpy.
    """
    n = len(items)
    masks = np.arange(1 << n, dtype=np.int64)
    bits = [(masks >> j) & 1 for j in range(n)]
    total = sum((bits[j] * items[j].token_len for j in range(n)), np.zeros_like(masks))
    size = sum(bits, np.zeros_like(masks))
    ok = total <= budget
    for b in range(n):
        for a in range(n):
            if a != b and outranks(items[a], items[b]):
                # b chosen implies a chosen
                ok &= (bits[b] == 0) | (bits[a] == 1)
    size = np.where(ok, size, -1)
    best = int(masks[int(np.argmax(size))])
    return {items[j].item_id for j in range(n) if best >> j & 1}
