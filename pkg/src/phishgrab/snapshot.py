"""Viewport screenshots behind a pluggable provider.

A provider is anything with ``capture(url, spec) -> bytes`` (PNG). Two live
here: DevtoolsScreenshotProvider drives an already-running headless browser
over its devtools websocket, StubScreenshotProvider renders a deterministic
flat PNG for tests and offline runs. capture_viewport() validates whatever
comes back, so a bad provider can never smuggle a wrong-sized or non-PNG
payload into an archive.
"""
from __future__ import annotations

import base64
import io
import json
import os
import socket
import struct
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from urllib.parse import urlsplit

import requests
from PIL import Image

from .errors import (
    BadScreenshot,
    ProviderUnavailable,
    RenderTimeout,
    SafeBrowsingBlocked,
    SnapshotError,
)

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


@dataclass(frozen=True)
class ViewportSpec:
    width: int = 1366
    height: int = 768
    settle_delay: float = 2.0  # seconds to let the page settle before capture

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("viewport dimensions must be positive")
        if self.settle_delay < 0:
            raise ValueError("settle_delay must be >= 0")


def png_dimensions(data: bytes) -> tuple[int, int] | None:
    """(width, height) from a PNG header, or None if this is not a PNG."""
    if len(data) < 24 or not data.startswith(_PNG_MAGIC) or data[12:16] != b"IHDR":
        return None
    width, height = struct.unpack(">II", data[16:24])
    return width, height


def capture_viewport(target, spec: ViewportSpec, provider) -> bytes:
    """Capture the visible viewport of ``target`` (URL or local file path).

    Only the visible portion is captured, never the full scroll height. The
    provider's output must be a PNG of exactly the viewport size; anything else
    raises BadScreenshot.
    """
    target = str(target)
    if "://" in target:
        url = target
    else:
        url = Path(target).resolve().as_uri()
    data = provider.capture(url, spec)
    dims = png_dimensions(data)
    if dims is None:
        raise BadScreenshot("provider returned something that is not a PNG")
    if dims != (spec.width, spec.height):
        raise BadScreenshot(
            f"provider returned {dims[0]}x{dims[1]}, wanted {spec.width}x{spec.height}"
        )
    return data


class StubScreenshotProvider:
    """Deterministic provider: a flat-color PNG of exactly the viewport size.

    ``raw_bytes`` overrides rendering entirely (handy for checking that stored
    bytes are verbatim provider output).
    """

    def __init__(self, fill=(240, 240, 240), raw_bytes: bytes | None = None):
        self.fill = fill
        self.raw_bytes = raw_bytes
        self.calls: list[str] = []

    def capture(self, url: str, spec: ViewportSpec) -> bytes:
        self.calls.append(url)
        if self.raw_bytes is not None:
            return self.raw_bytes
        image = Image.new("RGB", (spec.width, spec.height), self.fill)
        buffer = io.BytesIO()
        image.save(buffer, "PNG")
        return buffer.getvalue()


class WsClient:
    """Minimal RFC 6455 websocket client: text frames, ping/pong, close.

    Just enough to speak the devtools protocol; client frames are masked as the
    RFC requires, fragmented messages are reassembled, and control frames are
    handled inline.
    """

    def __init__(self, sock: socket.socket):
        self._sock = sock
        self._lock = threading.Lock()

    @classmethod
    def connect(cls, url: str, timeout: float = 10.0) -> "WsClient":
        parts = urlsplit(url)
        if parts.scheme not in ("ws", "http"):
            raise ValueError(f"unsupported websocket scheme: {parts.scheme!r}")
        host = parts.hostname or "127.0.0.1"
        port = parts.port or 80
        path = parts.path or "/"
        if parts.query:
            path += "?" + parts.query
        sock = socket.create_connection((host, port), timeout=timeout)
        sock.settimeout(timeout)
        key = base64.b64encode(os.urandom(16)).decode("ascii")
        handshake = (
            f"GET {path} HTTP/1.1\r\n"
            f"Host: {host}:{port}\r\n"
            "Upgrade: websocket\r\n"
            "Connection: Upgrade\r\n"
            f"Sec-WebSocket-Key: {key}\r\n"
            "Sec-WebSocket-Version: 13\r\n"
            "\r\n"
        )
        sock.sendall(handshake.encode("ascii"))
        response = b""
        while b"\r\n\r\n" not in response:
            chunk = sock.recv(4096)
            if not chunk:
                raise ConnectionError("websocket handshake: connection closed")
            response += chunk
            if len(response) > 65536:
                raise ConnectionError("websocket handshake: oversized response")
        status_line = response.split(b"\r\n", 1)[0]
        if b"101" not in status_line:
            raise ConnectionError(f"websocket handshake refused: {status_line!r}")
        return cls(sock)

    def send_text(self, payload: str):
        data = payload.encode("utf-8")
        mask = os.urandom(4)
        header = bytearray([0x81])  # FIN + text opcode
        length = len(data)
        if length < 126:
            header.append(0x80 | length)
        elif length <= 0xFFFF:
            header.append(0x80 | 126)
            header += struct.pack(">H", length)
        else:
            header.append(0x80 | 127)
            header += struct.pack(">Q", length)
        header += mask
        masked = bytes(b ^ mask[i % 4] for i, b in enumerate(data))
        with self._lock:
            self._sock.sendall(bytes(header) + masked)

    def recv_text(self, timeout: float | None = None) -> str:
        if timeout is not None:
            self._sock.settimeout(timeout)
        message = bytearray()
        while True:
            fin, opcode, payload = self._read_frame()
            if opcode == 0x8:  # close
                raise ConnectionError("websocket closed by peer")
            if opcode == 0x9:  # ping -> pong with same payload
                self._send_control(0xA, payload)
                continue
            if opcode == 0xA:  # pong
                continue
            message += payload
            if fin:
                return message.decode("utf-8")

    def close(self):
        try:
            self._send_control(0x8, b"")
        except OSError:
            pass
        try:
            self._sock.close()
        except OSError:
            pass

    def _send_control(self, opcode: int, payload: bytes):
        mask = os.urandom(4)
        header = bytearray([0x80 | opcode, 0x80 | len(payload)])
        header += mask
        masked = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
        with self._lock:
            self._sock.sendall(bytes(header) + masked)

    def _read_frame(self) -> tuple[bool, int, bytes]:
        first, second = self._read_exact(2)
        fin = bool(first & 0x80)
        opcode = first & 0x0F
        masked = bool(second & 0x80)
        length = second & 0x7F
        if length == 126:
            (length,) = struct.unpack(">H", self._read_exact(2))
        elif length == 127:
            (length,) = struct.unpack(">Q", self._read_exact(8))
        mask = self._read_exact(4) if masked else b""
        payload = self._read_exact(length) if length else b""
        if masked:
            payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
        return fin, opcode, payload

    def _read_exact(self, count: int) -> bytes:
        data = bytearray()
        while len(data) < count:
            chunk = self._sock.recv(count - len(data))
            if not chunk:
                raise ConnectionError("websocket: connection closed mid-frame")
            data += chunk
        return bytes(data)


class DevtoolsScreenshotProvider:
    """Drives a headless browser's devtools endpoint to shoot the viewport.

    The browser must already be running with remote debugging enabled (e.g.
    ``chromium --headless --remote-debugging-port=9222``). ``ws_factory`` lets
    tests swap in a scripted transport.
    """

    def __init__(self, endpoint: str = "127.0.0.1:9222", *,
                 connect_timeout: float = 5.0, message_timeout: float = 30.0,
                 ws_factory=None):
        self.endpoint = endpoint
        self.connect_timeout = connect_timeout
        self.message_timeout = message_timeout
        self._ws_factory = ws_factory or WsClient.connect
        self._next_id = 0
        self._id_lock = threading.Lock()

    def available(self) -> bool:
        try:
            self._browser_ws_url()
            return True
        except SnapshotError:
            return False

    def capture(self, url: str, spec: ViewportSpec) -> bytes:
        ws = self._connect()
        target_id = None
        try:
            target_id = self._rpc(ws, "Target.createTarget", {"url": "about:blank"})["targetId"]
            session_id = self._rpc(
                ws, "Target.attachToTarget", {"targetId": target_id, "flatten": True}
            )["sessionId"]
            self._rpc(ws, "Emulation.setDeviceMetricsOverride", {
                "width": spec.width, "height": spec.height,
                "deviceScaleFactor": 1, "mobile": False,
            }, session_id=session_id)
            navigation = self._rpc(ws, "Page.navigate", {"url": url}, session_id=session_id)
            error_text = navigation.get("errorText") or ""
            if error_text:
                if "safebrowsing" in error_text.lower().replace("_", ""):
                    raise SafeBrowsingBlocked(f"{url}: {error_text}")
                raise RenderTimeout(f"{url}: navigation failed: {error_text}")
            time.sleep(spec.settle_delay)
            shot = self._rpc(ws, "Page.captureScreenshot", {
                "format": "png", "fromSurface": True,
            }, session_id=session_id)
            return base64.b64decode(shot["data"])
        finally:
            if target_id is not None:
                try:
                    self._rpc(ws, "Target.closeTarget", {"targetId": target_id})
                except (SnapshotError, OSError, ConnectionError):
                    pass
            ws.close()

    # internals ------------------------------------------------------------

    def _browser_ws_url(self) -> str:
        try:
            response = requests.get(
                f"http://{self.endpoint}/json/version", timeout=self.connect_timeout
            )
            response.raise_for_status()
            ws_url = response.json().get("webSocketDebuggerUrl")
        except (requests.RequestException, ValueError) as err:
            raise ProviderUnavailable(f"no devtools endpoint at {self.endpoint}: {err}") from err
        if not ws_url:
            raise ProviderUnavailable(f"devtools endpoint at {self.endpoint} reports no ws URL")
        return ws_url

    def _connect(self) -> WsClient:
        ws_url = self._browser_ws_url()
        try:
            return self._ws_factory(ws_url, timeout=self.connect_timeout)
        except (OSError, ConnectionError) as err:
            raise ProviderUnavailable(f"cannot open {ws_url}: {err}") from err

    def _rpc(self, ws, method: str, params: dict, session_id: str | None = None) -> dict:
        with self._id_lock:
            self._next_id += 1
            call_id = self._next_id
        message: dict = {"id": call_id, "method": method, "params": params}
        if session_id:
            message["sessionId"] = session_id
        try:
            ws.send_text(json.dumps(message))
            deadline = time.monotonic() + self.message_timeout
            while True:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise RenderTimeout(f"{method}: no reply within {self.message_timeout}s")
                reply = json.loads(ws.recv_text(timeout=remaining))
                if reply.get("id") != call_id:
                    continue  # event or someone else's reply
                if "error" in reply:
                    raise RenderTimeout(f"{method}: {reply['error'].get('message', reply['error'])}")
                return reply.get("result", {})
        except socket.timeout as err:
            raise RenderTimeout(f"{method}: websocket read timed out") from err
        except (ConnectionError, OSError) as err:
            raise ProviderUnavailable(f"{method}: websocket failed: {err}") from err
