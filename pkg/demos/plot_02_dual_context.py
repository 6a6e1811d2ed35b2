"""
Rationale and analogy context at a cursor
=========================================

A developer is typing ``return self.service.`` on line 12 of
``app/login.py``. What does the repository offer?
"""

from pathlib import Path

from dualctx import PipelineConfig, build_context, index_repo

REPO = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "login_repo"

index = index_repo(REPO)
print(index.summary())

lines = (REPO / "app" / "login.py").read_text().splitlines()
lines[11] = "        return self.service."
edited = "\n".join(lines)

ctx = build_context(index, "app/login.py", 12, PipelineConfig(budget=200), edited_text=edited)

# rationale: cross-file constructs the file can legally use here
for item in ctx.rationale.items():
    print(f"[{item.source}] {item.node_id}")
    print(item.text, end="\n\n")

# analogy: what came next after similar code elsewhere
for item in ctx.analogy:
    print(f"{item.item_id}  score={item.score:.3f}")
