"""
Assembling the prompt
=====================

Selected items become comment blocks ahead of the in-file prefix; the
prompt always ends at the cursor line.
"""

from pathlib import Path

from dualctx import PipelineConfig, build_prompt, index_repo

REPO = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "login_repo"
index = index_repo(REPO)

for order in ("HighToLow", "LowToHigh", "Random"):
    _, bundle = build_prompt(index, "app/login.py", 12, PipelineConfig(budget=200, order=order, seed=1))
    headers = [line for line in bundle.cross_file_block.splitlines() if line.startswith("# ") and ": " in line]
    print(order, [h for h in headers if h.startswith(("# rationale", "# analogy"))])

# a tight in-file budget cuts the prefix from the top
_, bundle = build_prompt(index, "app/login.py", 12, PipelineConfig(budget=0, infile_budget=20))
print(bundle.full_prompt)
print(bundle.stats)
