"""
Building a code knowledge graph
===============================

Index a small two-file repository and look at the entities and relations
the analyzer found.
"""

from pathlib import Path

from dualctx import build_graph, extract_repo, scan_repo

REPO = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "two_module_repo"

# scan the repository: every *.py file, sorted by path
files = scan_repo(REPO)
print([f.path for f in files])

# two passes: symbols first, then relations resolved across files
facts = extract_repo(files)
graph = build_graph(facts.entities, facts.relations)

# node IDs are anchored to source positions
for node_id in sorted(graph.nodes):
    print(node_id)

# edges point from the referencing entity to the referenced one
for e in graph.edges:
    print(f"{e.id:40s} {graph.nodes[e.from_id].name} -> {graph.nodes[e.to_id].name}")
