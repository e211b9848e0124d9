"""Polite HTTP retrieval.

One Fetcher serves a whole run: sessions are per-thread, a per-host throttle
guarantees a minimum gap between requests to the same host (redirect hops
included), and every failure maps to a structured FetchError that callers
record and move past. Nothing here is ever fatal to a run.
"""
from __future__ import annotations

import codecs
import re
import socket
import threading
import time
from dataclasses import dataclass, field
from urllib.parse import urljoin, urlsplit

import requests
import urllib3

from .errors import (
    ContentForbidden,
    DnsFailure,
    FetchError,
    FetchTimeout,
    FileNotFound,
    HttpError,
    NetworkError,
    TlsFailure,
    TooManyRedirects,
)

DEFAULT_USER_AGENT = (
    "Mozilla/5.0 (Windows NT 10.0; Win64; x64) AppleWebKit/537.36 "
    "(KHTML, like Gecko) Chrome/124.0.0.0 Safari/537.36"
)

_REDIRECT_CODES = {301, 302, 303, 307, 308}
_TRANSIENT_KINDS = {"timeout", "dns_failure", "network_error"}
_CHUNK_SIZE = 65536
_DNS_HINTS = ("nameresolution", "getaddrinfo", "name or service not known",
              "nodename nor servname", "failed to resolve", "temporary failure in name")
_META_CHARSET_RE = re.compile(
    rb"""<meta[^>]+charset\s*=\s*["']?\s*([a-zA-Z0-9._:-]+)""", re.IGNORECASE
)


@dataclass(frozen=True)
class FetchPolicy:
    """Knobs for one run. Defaults are deliberately conservative."""

    connect_timeout: float = 10.0
    total_timeout: float = 60.0
    max_redirects: int = 10
    max_body_bytes: int = 25 * 1024 * 1024
    retries: int = 2  # transient failures only
    per_host_delay: float = 0.5
    user_agent: str = DEFAULT_USER_AGENT
    verify_tls: bool = True

    def __post_init__(self):
        if self.connect_timeout <= 0 or self.total_timeout <= 0:
            raise ValueError("timeouts must be positive")
        if self.max_redirects < 0 or self.retries < 0:
            raise ValueError("max_redirects and retries must be >= 0")
        if self.max_body_bytes <= 0:
            raise ValueError("max_body_bytes must be positive")
        if self.per_host_delay < 0:
            raise ValueError("per_host_delay must be >= 0")


@dataclass
class FetchResult:
    requested_url: str
    final_url: str
    status_code: int
    media_type: str
    body: bytes
    elapsed: float
    truncated: bool = False
    redirects: int = 0
    charset: str | None = None


@dataclass(frozen=True)
class RequestLogEntry:
    stamp: float  # monotonic clock, taken at throttle release
    host: str
    url: str
    attempt: int


class HostThrottle:
    """Enforces a minimum gap between requests to the same host.

    acquire() blocks until the host's slot is free, reserves the next slot, and
    returns the release stamp. Waiters for one host are serialized on a per-host
    lock, so consecutive stamps for a host always differ by at least ``delay``.
    Different hosts never wait on each other.
    """

    def __init__(self, delay: float):
        self.delay = delay
        self._registry_lock = threading.Lock()
        self._hosts: dict[str, list] = {}  # host -> [lock, next_allowed]

    def acquire(self, host: str) -> float:
        if self.delay <= 0:
            return time.monotonic()
        with self._registry_lock:
            entry = self._hosts.setdefault(host, [threading.Lock(), 0.0])
        with entry[0]:
            now = time.monotonic()
            wait = entry[1] - now
            if wait > 0:
                time.sleep(wait)
                now = time.monotonic()
            entry[1] = now + self.delay
            return now


class Fetcher:
    """Thread-safe fetcher with per-host politeness and structured errors.

    Redirects are followed manually so every hop pays the politeness delay and
    counts against max_redirects. Bodies stream in with a hard byte cap; a
    capped body is kept (truncated flag set), not rejected.
    """

    def __init__(self, policy: FetchPolicy | None = None, *, record_log: bool = False):
        self.policy = policy or FetchPolicy()
        self.throttle = HostThrottle(self.policy.per_host_delay)
        self.record_log = record_log
        self.request_log: list[RequestLogEntry] = []
        self._log_lock = threading.Lock()
        self._local = threading.local()
        self._sessions: list[requests.Session] = []
        self._sessions_lock = threading.Lock()
        if not self.policy.verify_tls:
            urllib3.disable_warnings(urllib3.exceptions.InsecureRequestWarning)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def close(self):
        with self._sessions_lock:
            sessions, self._sessions = self._sessions, []
        for session in sessions:
            session.close()

    def fetch_page(self, url: str) -> FetchResult:
        """Retrieve a landing page."""
        return self._fetch(url)

    def fetch_resource(self, url: str) -> FetchResult:
        """Retrieve a subresource (same mechanics as pages; separate name for call sites)."""
        return self._fetch(url)

    # internals ------------------------------------------------------------

    def _fetch(self, url: str) -> FetchResult:
        scheme = urlsplit(url).scheme.lower()
        if scheme not in ("http", "https"):
            raise ValueError(f"fetch requires an http(s) URL, got {url!r}")
        attempts = self.policy.retries + 1
        for attempt in range(1, attempts + 1):
            try:
                return self._attempt(url, attempt)
            except FetchError as err:
                if attempt < attempts and _is_transient(err):
                    continue
                raise
        raise AssertionError("unreachable")

    def _attempt(self, url: str, attempt: int) -> FetchResult:
        started = time.monotonic()
        deadline = started + self.policy.total_timeout
        current = url
        hops = 0
        while True:
            response = self._request(current, attempt, deadline)
            if response.status_code in _REDIRECT_CODES:
                location = response.headers.get("location")
                if location:
                    response.close()
                    hops += 1
                    if hops > self.policy.max_redirects:
                        raise TooManyRedirects(
                            f"{url}: more than {self.policy.max_redirects} redirects"
                        )
                    current = urljoin(current, location)
                    if urlsplit(current).scheme.lower() not in ("http", "https"):
                        raise NetworkError(f"redirect to non-http target: {current!r}")
                    continue
            break

        body, truncated = self._read_body(response, current, deadline)
        status = response.status_code
        media_type, charset = _parse_content_type(response.headers.get("content-type", ""))
        elapsed = time.monotonic() - started
        if status == 403:
            raise ContentForbidden(f"{current}: 403 content forbidden")
        if status == 404:
            raise FileNotFound(f"{current}: 404 file not found")
        if not 200 <= status < 300:
            raise HttpError(f"{current}: HTTP {status}", status_code=status)
        return FetchResult(
            requested_url=url,
            final_url=current,
            status_code=status,
            media_type=media_type,
            body=body,
            elapsed=elapsed,
            truncated=truncated,
            redirects=hops,
            charset=charset,
        )

    def _request(self, url: str, attempt: int, deadline: float) -> requests.Response:
        host = (urlsplit(url).hostname or "").lower()
        stamp = self.throttle.acquire(host)
        if self.record_log:
            with self._log_lock:
                self.request_log.append(RequestLogEntry(stamp, host, url, attempt))
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            raise FetchTimeout(f"{url}: total timeout exhausted before request")
        try:
            return self._session().get(
                url,
                stream=True,
                allow_redirects=False,
                timeout=(self.policy.connect_timeout, max(0.05, remaining)),
                verify=self.policy.verify_tls,
            )
        except requests.exceptions.SSLError as err:
            raise TlsFailure(f"{url}: {err}") from err
        except requests.exceptions.Timeout as err:
            raise FetchTimeout(f"{url}: {err}") from err
        except requests.exceptions.ConnectionError as err:
            raise _classify_connection_error(url, err) from err
        except requests.RequestException as err:
            raise NetworkError(f"{url}: {err}") from err

    def _read_body(self, response: requests.Response, url: str, deadline: float) -> tuple[bytes, bool]:
        cap = self.policy.max_body_bytes
        body = bytearray()
        truncated = False
        try:
            chunks = response.iter_content(_CHUNK_SIZE)
            for chunk in chunks:
                if not chunk:
                    continue
                room = cap - len(body)
                if len(chunk) > room:
                    body += chunk[:room]
                    truncated = True
                    break
                body += chunk
                if len(body) == cap:
                    # exactly at the cap: truncated only if anything follows
                    truncated = bool(next(chunks, b""))
                    break
                if time.monotonic() > deadline:
                    raise FetchTimeout(f"{url}: body read exceeded total timeout")
        except requests.exceptions.Timeout as err:
            raise FetchTimeout(f"{url}: {err}") from err
        except requests.exceptions.SSLError as err:
            raise TlsFailure(f"{url}: {err}") from err
        except (requests.exceptions.ConnectionError,
                requests.exceptions.ChunkedEncodingError,
                urllib3.exceptions.HTTPError) as err:
            raise _classify_connection_error(url, err) from err
        finally:
            response.close()
        return bytes(body), truncated

    def _session(self) -> requests.Session:
        session = getattr(self._local, "session", None)
        if session is None:
            session = requests.Session()
            session.headers["User-Agent"] = self.policy.user_agent
            session.headers["Accept"] = "*/*"
            self._local.session = session
            with self._sessions_lock:
                self._sessions.append(session)
        return session


def fetch_page(url: str, policy: FetchPolicy | None = None) -> FetchResult:
    """One-shot page fetch with a throwaway Fetcher."""
    with Fetcher(policy) as fetcher:
        return fetcher.fetch_page(url)


def fetch_resource(url: str, policy: FetchPolicy | None = None) -> FetchResult:
    with Fetcher(policy) as fetcher:
        return fetcher.fetch_resource(url)


def decode_page(result: FetchResult) -> str:
    """Decode an HTML body: declared charset, then meta sniff, then utf-8.

    Always lossy-decodes (errors="replace") so a bad declaration cannot kill a
    sample.
    """
    candidates = [result.charset]
    match = _META_CHARSET_RE.search(result.body[:4096])
    if match:
        candidates.append(match.group(1).decode("ascii", "ignore"))
    candidates.append("utf-8")
    for name in candidates:
        if not name:
            continue
        try:
            codecs.lookup(name)
        except (LookupError, TypeError):
            continue
        return result.body.decode(name, errors="replace")
    return result.body.decode("utf-8", errors="replace")


def _is_transient(err: FetchError) -> bool:
    if err.kind in _TRANSIENT_KINDS:
        return True
    return err.kind == "http_error" and err.status_code is not None and err.status_code >= 500


def _classify_connection_error(url: str, err: Exception) -> FetchError:
    seen = set()
    node: BaseException | None = err
    while node is not None and id(node) not in seen:
        seen.add(id(node))
        if isinstance(node, socket.gaierror):
            return DnsFailure(f"{url}: {err}")
        node = node.__cause__ or node.__context__
    text = repr(err).lower()
    if any(hint in text for hint in _DNS_HINTS):
        return DnsFailure(f"{url}: {err}")
    return NetworkError(f"{url}: {err}")


def _parse_content_type(value: str) -> tuple[str, str | None]:
    if not value:
        return "", None
    parts = value.split(";")
    media_type = parts[0].strip().lower()
    charset = None
    for param in parts[1:]:
        if "=" not in param:
            continue
        key, _, raw = param.partition("=")
        if key.strip().lower() == "charset":
            raw = raw.strip().strip("\"'").lower()
            charset = raw or None
    return media_type, charset
