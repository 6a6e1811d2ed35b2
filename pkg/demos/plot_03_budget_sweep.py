"""
Rank truncation under a token budget
====================================

Score every candidate against the unfinished chunk and keep the longest
rank prefix that fits. Larger budgets only ever extend the selection.
"""

from pathlib import Path

import numpy as np

from dualctx import PipelineConfig, build_context, index_repo
from dualctx.rtg import PRESET_BUDGETS, rank_order

REPO = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "login_repo"
index = index_repo(REPO)

ctx = build_context(index, "app/login.py", 12)
ranked = rank_order(ctx.scored)
tokens = np.array([s.token_len for s in ranked])

# the prefix sums bound every selection
print("ranked:", [(s.item_id.split(":")[0], round(s.score, 3), s.token_len) for s in ranked])
print("prefix tokens:", np.cumsum(tokens))

for budget in (0, 100, 200, *PRESET_BUDGETS):
    tdc = build_context(index, "app/login.py", 12, PipelineConfig(budget=budget)).tdc
    print(f"L={budget:5d}  selected={len(tdc.selected)}  used={tdc.used_tokens}")

# a different scorer changes the ranking, not the rule
for scorer in ("lexical-edit", "semantic", "random"):
    tdc = build_context(index, "app/login.py", 12, PipelineConfig(budget=200, scorer=scorer, seed=3)).tdc
    print(scorer, [i.split(":")[0] for i in tdc.ids])
