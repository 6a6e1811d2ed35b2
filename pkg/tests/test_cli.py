import json

import pytest

from dualctx.cli import main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def edited_login(repo):
    lines = (repo / "app/login.py").read_text().splitlines()
    lines[11] = "        return self.service."
    path = repo.parent / "edited.py"
    path.write_text("\n".join(lines))
    return path


def test_index_two_module(capsys, two_module_repo):
    code, out, _ = run(capsys, "index", two_module_repo)
    assert code == 0
    summary = json.loads(out)
    assert summary["n_files"] == 2 and summary["n_nodes"] >= 5 and summary["n_edges"] >= 3
    assert (two_module_repo / ".dualctx/graph.json").is_file()
    assert (two_module_repo / ".dualctx/chunks.json").is_file()


def test_reindex_byte_identical(capsys, login_repo):
    run(capsys, "index", login_repo)
    first = [(login_repo / ".dualctx" / n).read_bytes() for n in ("graph.json", "chunks.json")]
    run(capsys, "index", login_repo)
    assert [(login_repo / ".dualctx" / n).read_bytes() for n in ("graph.json", "chunks.json")] == first


def test_empty_repo(capsys, tmp_path):
    code, _, err = run(capsys, "index", tmp_path)
    assert code == 2 and "no files indexed" in err


def test_context_worked_example(capsys, login_repo):
    run(capsys, "index", login_repo)
    code, out, _ = run(capsys, "context", login_repo, "--file", "app/login.py", "--line", 12,
                       "--prefix-file", edited_login(login_repo), "--budget", 200)
    assert code == 0
    doc = json.loads(out)
    assert {"analogy", "rationale", "tdc"} <= set(doc)
    assert [i["id"].split(":")[0] for i in doc["tdc"]] == ["AuthService", "analogy@app/session.py", "UidTok"]


def test_budget_zero_still_reports(capsys, login_repo):
    run(capsys, "index", login_repo)
    code, out, _ = run(capsys, "context", login_repo, "--file", "app/login.py", "--line", 12, "--budget", 0)
    doc = json.loads(out)
    assert code == 0 and doc["tdc"] == []
    assert doc["analogy"] and doc["rationale"]["classes"]


def test_line_one_has_empty_rationale(capsys, login_repo):
    run(capsys, "index", login_repo)
    _, out, _ = run(capsys, "context", login_repo, "--file", "app/login.py", "--line", 1)
    r = json.loads(out)["rationale"]
    assert r == {"methods": [], "classes": [], "packages": []}


def test_prompt_raw_ends_at_cursor(capsys, login_repo):
    run(capsys, "index", login_repo)
    code, out, _ = run(capsys, "prompt", login_repo, "--file", "app/login.py", "--line", 12, "--raw",
                       "--prefix-file", edited_login(login_repo))
    assert code == 0
    assert out.endswith("        return self.service.")
    assert out.startswith("# ")


@pytest.mark.parametrize("argv", [
    ["context", "{repo}", "--file", "nope.py", "--line", "1"],
    ["context", "{repo}", "--file", "app/login.py", "--line", "99"],
    ["context", "{repo}", "--file", "app/login.py", "--line", "1", "--eta", "50"],
])
def test_data_errors_exit_2(capsys, login_repo, argv):
    run(capsys, "index", login_repo)
    code, _, err = run(capsys, *[a.format(repo=login_repo) for a in argv])
    assert code == 2 and err.startswith("error:")


def test_missing_index_exit_2(capsys, login_repo):
    code, _, err = run(capsys, "context", login_repo, "--file", "app/login.py", "--line", 3)
    assert code == 2 and "not found" in err


@pytest.mark.parametrize("argv", [[], ["context"], ["index", "x", "--ell", "ten"], ["frobnicate"]])
def test_usage_errors_exit_1(capsys, argv):
    assert run(capsys, *argv)[0] == 1


def test_flags_override_config_file(capsys, login_repo, tmp_path):
    run(capsys, "index", login_repo)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"budget": 0, "order": "LowToHigh"}))
    _, out, _ = run(capsys, "context", login_repo, "--file", "app/login.py", "--line", 12, "--config", cfg)
    assert json.loads(out)["tdc_stats"]["budget"] == 0
    _, out, _ = run(capsys, "context", login_repo, "--file", "app/login.py", "--line", 12, "--config", cfg,
                    "--budget", 300)
    assert json.loads(out)["tdc_stats"]["budget"] == 300


def test_oracle_scorer_table(capsys, login_repo, tmp_path):
    run(capsys, "index", login_repo)
    _, out, _ = run(capsys, "context", login_repo, "--file", "app/login.py", "--line", 12)
    ids = [c["id"] for c in json.loads(out)["candidates"]]
    table = {i: float(n) for n, i in enumerate(ids)}
    path = tmp_path / "table.json"
    path.write_text(json.dumps(table))
    _, out, _ = run(capsys, "context", login_repo, "--file", "app/login.py", "--line", 12,
                    "--scorer", "oracle", "--oracle-table", path, "--budget", 10000)
    assert [c["id"] for c in json.loads(out)["tdc"]] == ids[::-1]
    path.write_text(json.dumps({ids[0]: 1.0}))
    code, _, err = run(capsys, "context", login_repo, "--file", "app/login.py", "--line", 12,
                       "--scorer", "oracle", "--oracle-table", path)
    assert code == 2 and any(i in err for i in ids[1:])


def write_eval_files(tmp_path, repo, with_all=True):
    rows = [{"task_id": "t1", "repo_root": str(repo), "file_path": "app/login.py", "cursor_line": 12,
             "prefix_text": "from models.user import UidTok\n", "groundtruth": "return x"},
            {"task_id": "t2", "repo_root": str(repo), "file_path": "app/login.py", "cursor_line": 2,
             "prefix_text": "import os\n", "groundtruth": "y = 1"}]
    rows[0]["prefix_text"] = "\n".join((repo / "app/login.py").read_text().splitlines()[:11]) + "\n"
    data = tmp_path / "data.jsonl"
    data.write_text("\n".join(json.dumps(r) for r in rows))
    preds = tmp_path / "preds.jsonl"
    chosen = rows if with_all else rows[:1]
    preds.write_text("\n".join(json.dumps({"task_id": r["task_id"], "prediction": r["groundtruth"]}) for r in chosen))
    return data, preds


def test_eval_command(capsys, login_repo, tmp_path):
    data, preds = write_eval_files(tmp_path, login_repo)
    report = tmp_path / "report.json"
    code, out, _ = run(capsys, "eval", "--dataset", data, "--completions", preds, "--report", report)
    assert code == 0
    assert "Code EM" in out.splitlines()[0]
    assert json.loads(report.read_text())["code_em"] == 100.0


def test_eval_missing_prediction_exits_nonzero(capsys, login_repo, tmp_path):
    data, preds = write_eval_files(tmp_path, login_repo, with_all=False)
    code, _, err = run(capsys, "eval", "--dataset", data, "--completions", preds)
    assert code == 2 and "t2" in err
