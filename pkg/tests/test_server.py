import json
import threading
import urllib.error
import urllib.request

import pytest

from dualctx.cli import main
from dualctx.pipeline import PipelineConfig
from dualctx.server import ContextService, make_server


@pytest.fixture
def served(login_repo, capsys):
    main(["index", str(login_repo)])
    capsys.readouterr()
    server = make_server(ContextService(str(login_repo), PipelineConfig()), port=0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}", login_repo
    server.shutdown()
    server.server_close()


def request(url, body=None):
    data = None if body is None else (body if isinstance(body, bytes) else json.dumps(body).encode())
    req = urllib.request.Request(url, data=data, method="POST" if data is not None else "GET")
    try:
        with urllib.request.urlopen(req, timeout=10) as resp:
            return resp.status, resp.read()
    except urllib.error.HTTPError as err:
        return err.code, err.read()


def test_healthz(served):
    base, _ = served
    assert request(base + "/healthz") == (200, b"ok")


def test_context_matches_cli(served, capsys):
    base, repo = served
    status, body = request(base + "/v1/context", {"file": "app/login.py", "line": 12, "overrides": {"budget": 200}})
    assert status == 200
    main(["context", str(repo), "--file", "app/login.py", "--line", "12", "--budget", "200"])
    assert body.decode() == capsys.readouterr().out


def test_prompt_matches_cli(served, capsys):
    base, repo = served
    status, body = request(base + "/v1/prompt", {"file": "app/login.py", "line": 10})
    assert status == 200
    main(["prompt", str(repo), "--file", "app/login.py", "--line", "10"])
    assert body.decode() == capsys.readouterr().out


@pytest.mark.parametrize("body,field", [
    ({"file": "app/login.py", "line": -1}, "line"),
    ({"file": "app/login.py", "line": "3"}, "line"),
    ({"line": 3}, "file"),
    ({"file": "app/login.py", "line": 3, "color": 1}, "color"),
    ({"file": "app/login.py", "line": 3, "overrides": {"ell": 4}}, "overrides.ell"),
    ({"file": "app/login.py", "line": 3, "overrides": {"budget": -5}}, "overrides"),
    ({"file": "app/login.py", "line": 300}, "line"),
    ({"file": "ghost.py", "line": 1}, "file"),
    (b"{not json", "body"),
])
def test_bad_requests(served, body, field):
    base, _ = served
    status, raw = request(base + "/v1/context", body)
    assert status == 400
    assert json.loads(raw)["field"] == field


def test_missing_index_is_409(tmp_path):
    (tmp_path / "a.py").write_text("x = 1\n")
    service = ContextService(str(tmp_path))
    status, doc = service.handle("context", {"file": "a.py", "line": 1})
    assert status == 409


def test_unknown_route(served):
    base, _ = served
    assert request(base + "/v2/nothing", {"file": "a", "line": 1})[0] == 404
