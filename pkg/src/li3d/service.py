"""HTTP surface for driving sessions: JSON over HTTP/1.1, one engine per process.

Synchronous by design: an instruction request blocks through the whole round.
Per-session single-writer is enforced by the engine; a concurrent mutation
gets 409.  CORS is enabled for the configured UI origin.
"""
from __future__ import annotations

import json
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .layout import Dialect, layout_from_json
from .session import (
    POLICIES,
    POLICY_OFF,
    SessionEngine,
    StepInProgress,
    UnknownSession,
    ValidationError,
    record_to_json,
    session_to_json,
)

DIALECT_ALIASES = {
    "scene": Dialect.SCENE3D,
    "scene3d": Dialect.SCENE3D,
    "object": Dialect.OBJECT_PARTS3D,
    "object_parts3d": Dialect.OBJECT_PARTS3D,
    "image2d": Dialect.IMAGE2D,
}


def parse_dialect(name: str) -> Dialect:
    try:
        return DIALECT_ALIASES[name.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown dialect {name!r}; use scene, object, or image2d") from None


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, violations=None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.violations = violations or []


_ROUTES = [
    ("GET", re.compile(r"^/healthz$"), "health"),
    ("POST", re.compile(r"^/sessions$"), "create_session"),
    ("GET", re.compile(r"^/sessions/(?P<sid>[0-9a-f]+)$"), "get_session"),
    ("POST", re.compile(r"^/sessions/(?P<sid>[0-9a-f]+)/instructions$"), "post_instruction"),
    ("PUT", re.compile(r"^/sessions/(?P<sid>[0-9a-f]+)/layout$"), "put_layout"),
    ("GET", re.compile(r"^/sessions/(?P<sid>[0-9a-f]+)/records/(?P<k>\d+)$"), "get_record"),
    (
        "GET",
        re.compile(r"^/sessions/(?P<sid>[0-9a-f]+)/render/(?P<k>\d+)/(?P<view>[a-z_]+)$"),
        "get_render",
    ),
    ("POST", re.compile(r"^/sessions/(?P<sid>[0-9a-f]+)/feedback$"), "post_feedback"),
]


class Api:
    """Route handlers over a SessionEngine; transport-independent."""

    def __init__(self, engine: SessionEngine):
        self.engine = engine

    def dispatch(self, method: str, path: str, body: bytes):
        for verb, pattern, name in _ROUTES:
            match = pattern.match(path)
            if match:
                if verb != method:
                    continue
                handler = getattr(self, name)
                try:
                    return handler(body=body, **match.groupdict())
                except UnknownSession as exc:
                    raise ApiError(404, "unknown_session", f"no session {exc.args[0]!r}")
                except StepInProgress:
                    raise ApiError(409, "step_in_progress", "a step is already running")
                except ValidationError as exc:
                    raise ApiError(
                        422, "validation_failed", str(exc),
                        [
                            {
                                "kind": v.kind,
                                "severity": v.severity,
                                "message": v.message,
                                "objects": list(v.objects),
                                "axis": v.axis,
                            }
                            for v in exc.violations
                        ],
                    )
                except (KeyError, IndexError) as exc:
                    raise ApiError(404, "not_found", str(exc))
                except ValueError as exc:
                    raise ApiError(422, "invalid_request", str(exc))
        raise ApiError(404, "no_route", f"no route for {method} {path}")

    @staticmethod
    def _json_body(body: bytes) -> dict:
        if not body:
            raise ApiError(400, "empty_body", "request body required")
        try:
            data = json.loads(body)
        except json.JSONDecodeError as exc:
            raise ApiError(400, "bad_json", str(exc))
        if not isinstance(data, dict):
            raise ApiError(400, "bad_json", "expected a JSON object")
        return data

    def health(self, body, **_):
        return 200, {"status": "ok"}

    def create_session(self, body, **_):
        data = self._json_body(body)
        dialect = parse_dialect(data.get("dialect", "scene"))
        policy = data.get("policy", POLICY_OFF)
        if policy not in POLICIES:
            raise ApiError(422, "invalid_request", f"unknown policy {policy!r}")
        session = self.engine.create_session(dialect, policy)
        return 201, {"id": session.id, "dialect": session.dialect.value, "policy": policy}

    def get_session(self, body, sid):
        session = self.engine.store.load(sid)
        doc = session_to_json(session)
        doc["rounds"] = len(session.records)
        return 200, doc

    def post_instruction(self, body, sid):
        data = self._json_body(body)
        text = data.get("text", "")
        if not isinstance(text, str) or not text.strip():
            raise ApiError(422, "invalid_request", "instruction text required")
        record = self.engine.step(sid, text)
        return 200, record_to_json(record)

    def put_layout(self, body, sid):
        data = self._json_body(body)
        if "layout" not in data:
            raise ApiError(422, "invalid_request", "layout required")
        try:
            layout = layout_from_json(data["layout"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ApiError(422, "invalid_request", f"malformed layout: {exc}")
        record = self.engine.adjust(sid, layout)
        return 200, record_to_json(record)

    def get_record(self, body, sid, k):
        session = self.engine.store.load(sid)
        index = int(k)
        if index >= len(session.records):
            raise ApiError(404, "unknown_record", f"session has {len(session.records)} records")
        return 200, record_to_json(session.records[index])

    def get_render(self, body, sid, k, view):
        session = self.engine.store.load(sid)
        index = int(k)
        if index >= len(session.records):
            raise ApiError(404, "unknown_record", f"session has {len(session.records)} records")
        refs = session.records[index].render_ref
        if not refs or view not in refs:
            raise ApiError(404, "no_render", f"round {index} has no {view!r} render")
        return 200, self.engine.store.render_bytes(refs[view])

    def post_feedback(self, body, sid):
        record, changed = self.engine.run_feedback(sid)
        return 200, {"record": record_to_json(record), "changed": changed}


def make_server(engine: SessionEngine, host: str, port: int, cors_origin: str = "*"):
    api = Api(engine)

    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):
            pass

        def _cors(self):
            self.send_header("Access-Control-Allow-Origin", cors_origin)
            self.send_header("Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")

        def _respond(self, status: int, payload, content_type="application/json"):
            if isinstance(payload, (dict, list)):
                data = json.dumps(payload).encode("utf-8")
            else:
                data = payload
                content_type = "image/png"
            self.send_response(status)
            self._cors()
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def _handle(self, method: str):
            length = int(self.headers.get("Content-Length") or 0)
            body = self.rfile.read(length) if length else b""
            try:
                status, payload = api.dispatch(method, self.path, body)
                self._respond(status, payload)
            except ApiError as exc:
                error = {"error": {"code": exc.code, "message": str(exc)}}
                if exc.violations:
                    error["error"]["violations"] = exc.violations
                self._respond(exc.status, error)

        def do_GET(self):
            self._handle("GET")

        def do_POST(self):
            self._handle("POST")

        def do_PUT(self):
            self._handle("PUT")

        def do_OPTIONS(self):
            self.send_response(204)
            self._cors()
            self.send_header("Content-Length", "0")
            self.end_headers()

    return ThreadingHTTPServer((host, port), Handler)


def serve_forever(engine: SessionEngine, addr: str, cors_origin: str = "*"):
    host, _, port = addr.rpartition(":")
    server = make_server(engine, host or "127.0.0.1", int(port), cors_origin)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server
