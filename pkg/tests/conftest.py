"""Shared fixtures: a scriptable local HTTP server and fast fetch policies."""
from __future__ import annotations

import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from phishgrab.fetch import FetchPolicy


class FixtureServer:
    """Tiny routing layer over ThreadingHTTPServer.

    Routes are exact-path lookups to (status, headers, body) triples or to
    callables taking the handler (for redirects, delays, flaky endpoints).
    Every request is recorded in ``hits``.
    """

    def __init__(self):
        self.routes = {}
        self.hits: list[tuple[str, str]] = []  # (path incl. query, Host header)
        self.lock = threading.Lock()
        self.port: int | None = None

    def add(self, path: str, body=b"", status: int = 200,
            content_type: str = "text/html; charset=utf-8", headers: dict | None = None):
        if isinstance(body, str):
            body = body.encode("utf-8")
        final_headers = {"Content-Type": content_type}
        if headers:
            final_headers.update(headers)
        self.routes[path] = (status, final_headers, body)

    def add_dynamic(self, path: str, fn):
        """fn(handler) -> (status, headers, body)"""
        self.routes[path] = fn

    def add_redirect(self, path: str, location: str, status: int = 302):
        self.add(path, b"", status=status, headers={"Location": location})

    def url(self, path: str, host: str = "127.0.0.1") -> str:
        return f"http://{host}:{self.port}{path}"

    def hit_count(self, path: str) -> int:
        with self.lock:
            return sum(1 for hit_path, _ in self.hits if hit_path.split("?")[0] == path)


class _Handler(BaseHTTPRequestHandler):
    def do_GET(self):
        fixture: FixtureServer = self.server.fixture  # type: ignore[attr-defined]
        with fixture.lock:
            fixture.hits.append((self.path, self.headers.get("Host", "")))
        route = fixture.routes.get(self.path.split("?")[0])
        if route is None:
            status, headers, body = 404, {"Content-Type": "text/plain"}, b"no such route"
        elif callable(route):
            status, headers, body = route(self)
        else:
            status, headers, body = route
        try:
            self.send_response(status)
            for name, value in headers.items():
                self.send_header(name, value)
            if "Content-Length" not in headers:
                self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)
        except (BrokenPipeError, ConnectionResetError):
            pass

    def log_message(self, *args):
        pass


@pytest.fixture
def server():
    fixture = FixtureServer()
    httpd = ThreadingHTTPServer(("127.0.0.1", 0), _Handler)
    httpd.fixture = fixture  # type: ignore[attr-defined]
    fixture.port = httpd.server_address[1]
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    yield fixture
    httpd.shutdown()
    httpd.server_close()


@pytest.fixture
def fast_policy():
    """No politeness delay, no retries: unit tests should not sleep."""
    return FetchPolicy(per_host_delay=0.0, retries=0, connect_timeout=5.0, total_timeout=15.0)
