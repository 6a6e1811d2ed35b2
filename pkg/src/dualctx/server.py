"""Minimal JSON-over-HTTP context service.

Endpoints: ``POST /v1/context``, ``POST /v1/prompt`` (body
``{"file": str, "line": int, "overrides": {...}}``) and ``GET /healthz``.
Responses carry exactly the JSON the ``context``/``prompt`` CLI commands print.
"""

from __future__ import annotations

import json
import logging
import threading
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .graph import GraphError
from .pipeline import (
    ConfigError,
    MissingIndexError,
    PipelineConfig,
    QueryError,
    RepoIndex,
    build_context,
    build_prompt,
    load_index,
)
from .rtg import ScoringError

logger = logging.getLogger(__name__)

# changing these would require a different index
_INDEX_SHAPING = frozenset({"ell", "eta", "include_globs", "graph_path", "chunks_path"})


class RequestError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message

    def to_dict(self) -> dict:
        return {"error": "invalid request", "field": self.field, "message": self.message}


def parse_request(payload, base: PipelineConfig) -> tuple[str, int, PipelineConfig]:
    if not isinstance(payload, dict):
        raise RequestError("body", "must be a JSON object")
    unknown = sorted(set(payload) - {"file", "line", "overrides"})
    if unknown:
        raise RequestError(unknown[0], "unknown field")
    file = payload.get("file")
    if not isinstance(file, str) or not file:
        raise RequestError("file", "required non-empty string")
    line = payload.get("line")
    if not isinstance(line, int) or isinstance(line, bool):
        raise RequestError("line", "required integer")
    if line < 1:
        raise RequestError("line", "must be >= 1")
    overrides = payload.get("overrides") or {}
    if not isinstance(overrides, dict):
        raise RequestError("overrides", "must be an object")
    for key in sorted(overrides):
        if key not in PipelineConfig.field_names():
            raise RequestError(f"overrides.{key}", "unknown config key")
        if key in _INDEX_SHAPING:
            raise RequestError(f"overrides.{key}", "cannot be overridden per request")
    try:
        config = base.replace(**overrides)
    except ConfigError as exc:
        raise RequestError("overrides", str(exc)) from None
    return file, line, config


def context_payload(index: RepoIndex, file: str, line: int, config: PipelineConfig) -> dict:
    return build_context(index, file, line, config).to_dict()


def prompt_payload(index: RepoIndex, file: str, line: int, config: PipelineConfig) -> dict:
    _, bundle = build_prompt(index, file, line, config)
    return bundle.to_dict()


class ContextService:
    """Holds the immutable index; reloads are swapped in atomically."""

    def __init__(self, root: str, config: PipelineConfig = PipelineConfig()):
        self.root = root
        self.config = config
        self._index: RepoIndex | None = None
        self._lock = threading.Lock()

    def index(self) -> RepoIndex:
        idx = self._index
        if idx is None:
            with self._lock:
                if self._index is None:
                    self._index = load_index(self.root, self.config)
                idx = self._index
        return idx

    def reload(self) -> None:
        fresh = load_index(self.root, self.config)
        with self._lock:
            self._index = fresh

    def handle(self, route: str, payload) -> tuple[int, dict]:
        try:
            file, line, config = parse_request(payload, self.config)
        except RequestError as exc:
            return HTTPStatus.BAD_REQUEST, exc.to_dict()
        try:
            index = self.index()
        except MissingIndexError as exc:
            return HTTPStatus.CONFLICT, {"error": "index missing", "message": str(exc)}
        try:
            fn = context_payload if route == "context" else prompt_payload
            return HTTPStatus.OK, fn(index, file, line, config)
        except QueryError as exc:
            return HTTPStatus.BAD_REQUEST, RequestError(exc.field, str(exc)).to_dict()
        except (ScoringError, ConfigError, GraphError, OSError) as exc:
            return HTTPStatus.BAD_REQUEST, RequestError("overrides", str(exc)).to_dict()


def _make_handler(service: ContextService):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):
            logger.info("%s - " + fmt, self.address_string(), *args)

        def _send(self, status: int, body: bytes, content_type: str) -> None:
            self.send_response(status)
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _send_json(self, status: int, doc: dict) -> None:
            body = (json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n").encode("utf-8")
            self._send(status, body, "application/json")

        def do_GET(self):
            if self.path == "/healthz":
                self._send(HTTPStatus.OK, b"ok", "text/plain")
            else:
                self._send_json(HTTPStatus.NOT_FOUND, {"error": "not found"})

        def do_POST(self):
            routes = {"/v1/context": "context", "/v1/prompt": "prompt"}
            length = int(self.headers.get("Content-Length") or 0)
            raw = self.rfile.read(length) if length else b""
            if self.path not in routes:
                self._send_json(HTTPStatus.NOT_FOUND, {"error": "not found"})
                return
            try:
                payload = json.loads(raw.decode("utf-8") or "null")
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                self._send_json(HTTPStatus.BAD_REQUEST, RequestError("body", f"invalid JSON: {exc}").to_dict())
                return
            status, doc = service.handle(routes[self.path], payload)
            self._send_json(status, doc)

    return Handler


def make_server(service: ContextService, host: str = "127.0.0.1", port: int = 8765) -> ThreadingHTTPServer:
    server = ThreadingHTTPServer((host, port), _make_handler(service))
    server.daemon_threads = True
    return server


def serve(root: str, config: PipelineConfig, host: str = "127.0.0.1", port: int = 8765) -> None:
    server = make_server(ContextService(root, config), host, port)
    logger.info("serving %s on http://%s:%d", root, *server.server_address[:2])
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
