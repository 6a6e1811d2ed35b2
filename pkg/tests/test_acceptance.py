"""Acceptance criteria, one test each, at the stated tolerances.

Run ``pytest tests/test_acceptance.py`` to get one PASS/FAIL line per
criterion in the terminal summary.
"""

import os
import random
import shutil
import subprocess
import sys
import time

import pytest

from conftest import FIXTURES, synthetic_files, write_repo
from oracles import brute_force_tdc, dp_edit_similarity, multiset_prf
from dualctx.chunking import build_cover, successor
from dualctx.graph import build_graph
from dualctx.metrics import code_es, identifier_metrics
from dualctx.pipeline import PipelineConfig, build_context, index_repo
from dualctx.prompt import assemble
from dualctx.rationale import retrieve_rationale
from dualctx.rtg import ANALOGY, PRESET_BUDGETS, Candidate, ScoredItem, Scorer, build_tdc, score_candidates
from dualctx.similarity import edit_similarity
from dualctx.source_model import SourceFile, extract_repo, scan_repo

pytestmark = pytest.mark.acceptance

SOURCES = ["rationale-method", "rationale-class", "rationale-package", ANALOGY]


def edited_login_text() -> str:
    lines = (FIXTURES / "login_repo/app/login.py").read_text().splitlines()
    lines[11] = "        return self.service."
    return "\n".join(lines)


def test_1_two_module_golden(criterion):
    with criterion("1 two-module fixture golden graph") as c:
        t0 = time.perf_counter()
        index = index_repo(FIXTURES / "two_module_repo")
        elapsed = time.perf_counter() - t0
        g = index.graph
        got = sorted((e.relation.value, g.nodes[e.from_id].name, g.nodes[e.to_id].name) for e in g.edges)
        assert got == [
            ("Imports", "module_b", "ClassX"),
            ("Instantiates", "instance_a", "ClassX"),
            ("Instantiates", "instance_b", "ClassX"),
            ("Uses", "function_F", "variable_V"),
        ]
        (imp,) = [e for e in g.edges if e.relation.value == "Imports"]
        assert g.nodes[imp.from_id].path == "module_b.py" and g.nodes[imp.to_id].path == "module_a.py"
        assert elapsed < 1.0, f"{elapsed:.3f}s"
        c.detail = f"4 relations exact, {elapsed * 1000:.0f} ms"


def test_2_worked_example(criterion):
    with criterion("2 worked-example golden test") as c:
        index = index_repo(FIXTURES / "login_repo")
        ctx = retrieve_rationale(index.graph, "app/login.py", 12)
        rc1 = "UidTok:CLASS@models/user.py:1.1-9.20"
        rc2 = "AuthService:CLASS@services/auth.py:1.1-10.33"
        rc3 = "digest_secret:FUNCTION@services/crypto.py:4.1-8.22"
        ec1 = "analogy@app/session.py:6-15"
        assert ctx.ids() == (frozenset({rc3}), frozenset({rc1, rc2}), frozenset())
        result = build_context(index, "app/login.py", 12, PipelineConfig(budget=200), edited_text=edited_login_text())
        assert result.tdc.n_candidates > 3  # the budget is binding
        assert set(result.tdc.ids) == {rc1, rc2, ec1}
        c.detail = f"tdc {len(result.tdc.ids)}/{result.tdc.n_candidates} items, {result.tdc.used_tokens}/200 tokens"


def test_3_chunk_cover_properties(criterion):
    with criterion("3 chunk-cover property suite") as c:
        rng = random.Random(2024)
        violations = 0
        t0 = time.perf_counter()
        for _ in range(1000):
            n = rng.randint(0, 200)
            ell = rng.randint(1, 30)
            eta = rng.randint(1, ell)
            cover = build_cover([SourceFile("f.py", "\n".join(f"x{i}" for i in range(n)))], ell, eta)
            covered = set()
            for ck in cover.chunks:
                covered.update(ck.line_range)
            violations += covered != set(range(1, n + 1))
            nexts = [successor(cover, ck) for ck in cover.chunks]
            # each chunk has at most one successor, each successor one predecessor, one chain end
            real = [s.key for s in nexts if s is not None]
            violations += len(real) != len(set(real))
            violations += nexts.count(None) != (1 if n else 0)
            for ck, nx in zip(cover.chunks, nexts):
                if nx is None:
                    continue
                overlap = len(set(ck.line_range) & set(nx.line_range))
                violations += overlap < ell - eta
                # a regular step is eta; only the back-shifted tail window may step less
                if nx.start_line - ck.start_line != eta:
                    violations += nx.end_line != n or nx.start_line - ck.start_line > eta
        elapsed = time.perf_counter() - t0
        assert violations == 0, f"{violations} violations"
        assert elapsed < 5.0, f"{elapsed:.2f}s"
        c.detail = f"1000 instances, 0 violations, {elapsed:.2f}s"


def test_4_tdc_brute_force(criterion):
    with criterion("4 TDC brute-force equivalence") as c:
        rng = random.Random(7)
        mismatches = over_budget = 0
        t0 = time.perf_counter()
        for case in range(10_000):
            n = rng.randint(0, 12)
            grid = rng.random() < 0.5  # coarse scores force ties
            items = [
                ScoredItem(f"c{case}-{j}", rng.choice(SOURCES), "f.py", "",
                           rng.choice([0.0, 0.5, 1.0]) if grid else rng.random(), rng.randint(0, 100))
                for j in range(n)
            ]
            budget = rng.randint(0, 400)
            tdc = build_tdc(items, budget)
            mismatches += set(tdc.ids) != brute_force_tdc(items, budget)
            over_budget += tdc.used_tokens > budget
        elapsed = time.perf_counter() - t0
        assert mismatches == 0 and over_budget == 0, f"{mismatches} mismatches, {over_budget} over budget"
        assert elapsed < 30.0, f"{elapsed:.1f}s"
        c.detail = f"10000 cases, 0 mismatches, {elapsed:.1f}s"


def test_5_metric_oracles(criterion):
    with criterion("5 metric oracle equivalence") as c:
        rng = random.Random(99)
        alphabet = "abcxyz _=()\n"
        bad_es = 0
        for _ in range(1000):
            a = "".join(rng.choices(alphabet, k=rng.randint(0, 25)))
            b = "".join(rng.choices(alphabet, k=rng.randint(0, 25)))
            bad_es += edit_similarity(a, b) != dp_edit_similarity(a, b)
            bad_es += code_es(a, b) != dp_edit_similarity(a.strip(), b.strip())
        bad_ids = 0
        names = ["a", "b", "c", "foo", "bar_1", "_x"]
        for _ in range(1000):
            p = rng.choices(names, k=rng.randint(0, 8))
            g = rng.choices(names, k=rng.randint(0, 8))
            _, *prf = identifier_metrics(" ".join(p), " ".join(g))
            bad_ids += tuple(prf) != multiset_prf(p, g)
        assert bad_es == 0 and bad_ids == 0, f"{bad_es} ES, {bad_ids} identifier mismatches"
        c.detail = "1000 string pairs, 1000 identifier lists, exact"


def _all_fixture_repos():
    yield "two-module", scan_repo(FIXTURES / "two_module_repo")
    yield "login", scan_repo(FIXTURES / "login_repo")
    yield "synthetic-20", [SourceFile(p, t) for p, t in synthetic_files().items()]
    yield "override", [
        SourceFile("base.py", "class Base:\n    def run(self):\n        return 1\n"),
        SourceFile("child.py", "from base import Base\n\n\nclass Child(Base):\n    def run(self):\n"
                               "        return 2\n\n    def other(self):\n        return 3\n"),
    ]


def test_6_rationale_monotonicity(criterion):
    with criterion("6 rationale monotonicity") as c:
        checked = 0
        for name, files in _all_fixture_repos():
            facts = extract_repo(files)
            g = build_graph(facts.entities, facts.relations)
            for f in files:
                per_line = [retrieve_rationale(g, f.path, line) for line in range(1, f.line_count + 1)]
                for line, ctx in enumerate(per_line, 1):
                    for item in ctx.items():
                        assert item.path != f.path, (name, f.path, line, item.node_id)
                        assert item.site_line < line, (name, f.path, line, item.node_id)
                ids = [ctx.ids() for ctx in per_line]
                for m in range(len(ids)):
                    for n in range(m, len(ids)):
                        assert all(a <= b for a, b in zip(ids[m], ids[n])), (name, f.path, m + 1, n + 1)
                        checked += 1
        c.detail = f"{checked} line pairs over 4 fixture repos"


def _cli(repo, *args, hashseed):
    env = dict(os.environ, PYTHONHASHSEED=str(hashseed))
    out = subprocess.run([sys.executable, "-m", "dualctx.cli", *map(str, args)], env=env,
                         capture_output=True, check=True)
    return out.stdout


def test_7_determinism(criterion, tmp_path):
    with criterion("7 end-to-end determinism") as c:
        outputs = []
        for run, hashseed in enumerate((1, 2)):
            repo = write_repo(tmp_path / f"run{run}", synthetic_files())
            shutil.copytree(FIXTURES / "login_repo", repo / "login")
            query = ["--file", "login/app/login.py", "--line", "12", "--seed", "5"]
            blobs = [_cli(repo, "index", repo, hashseed=hashseed)]
            blobs += [(repo / ".dualctx" / n).read_bytes() for n in ("graph.json", "chunks.json")]
            for scorer in ("lexical-jaccard", "random", "semantic"):
                for order in ("HighToLow", "Random"):
                    opts = [*query, "--scorer", scorer, "--order", order]
                    blobs.append(_cli(repo, "context", repo, *opts, hashseed=hashseed))
                    blobs.append(_cli(repo, "prompt", repo, *opts, hashseed=hashseed))
            # paths inside the outputs are repo-relative, so runs in different dirs compare directly
            outputs.append(blobs)
        assert outputs[0] == outputs[1]
        c.detail = f"{len(outputs[0])} artifacts byte-identical across 2 runs"


def test_8_rank_invariance(criterion):
    with criterion("8 scorer rank-invariance under x -> 2x+1") as c:
        rng = random.Random(8)
        for case in range(100):
            n = rng.randint(1, 10)
            cands = [Candidate(f"{case}-{j}", rng.choice(SOURCES), f"f{j}.py",
                               " ".join(rng.choices(["a", "b", "(", ")", "x"], k=rng.randint(1, 30))))
                     for j in range(n)]
            table = {cd.item_id: rng.choice([0.1, 0.2, 0.5, rng.random()]) for cd in cands}
            budget = rng.randint(0, 200)
            base = build_tdc(score_candidates(cands, "", Scorer.oracle(table)), budget)
            moved = build_tdc(score_candidates(cands, "", Scorer.oracle({k: 2 * v + 1 for k, v in table.items()})), budget)
            assert base.ids == moved.ids, case
            for order in ("HighToLow", "LowToHigh", "Random"):
                a = assemble(base, "x = 1\n", 1, order, seed=case)
                b = assemble(moved, "x = 1\n", 1, order, seed=case)
                assert a.full_prompt == b.full_prompt, (case, order)
        c.detail = "100 cases, identical selections and prompts"


def test_9_budget_sweep(criterion, tmp_path):
    with criterion("9 truncation-size sweep") as c:
        repo = write_repo(tmp_path / "synthetic", synthetic_files())
        index = index_repo(repo)
        assert len(index.files) == 20
        rows = 0
        for path in ("pkg/mod_7.py", "pkg/mod_12.py", "pkg/mod_18.py"):
            src = index.file(path)
            for line in (src.line_count // 2, src.line_count):
                counts = []
                for budget in PRESET_BUDGETS:
                    tdc = build_context(index, path, line, PipelineConfig(budget=budget)).tdc
                    assert tdc.used_tokens <= budget
                    counts.append(len(tdc.selected))
                assert counts == sorted(counts), (path, line, counts)
                rows += 1
        c.detail = f"{rows} cursors x {len(PRESET_BUDGETS)} budgets"
