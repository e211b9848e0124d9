"""URL helpers: reference resolution, dedupe normalization, host classification."""
from __future__ import annotations

import ipaddress
import re
from urllib.parse import urljoin, urlsplit, urlunsplit

from .errors import UnresolvableReference

DEFAULT_PORTS = {"http": 80, "https": 443}

_SCHEME_RE = re.compile(r"^([a-zA-Z][a-zA-Z0-9+.-]*):")
_HEX_OCTET_RE = re.compile(r"^0x[0-9a-fA-F]{1,2}$")
_HEX_HOST_RE = re.compile(r"^0x[0-9a-fA-F]+$")

# Common two-part public suffixes. Deliberately a heuristic subset: enough to get
# registrable domains right for the ccTLDs that actually show up in feeds.
_TWO_LEVEL_SUFFIXES = frozenset({
    "co.uk", "org.uk", "ac.uk", "gov.uk", "me.uk", "net.uk", "ltd.uk", "plc.uk",
    "com.au", "net.au", "org.au", "edu.au", "gov.au",
    "co.nz", "net.nz", "org.nz",
    "co.jp", "ne.jp", "or.jp", "ac.jp", "go.jp",
    "com.br", "net.br", "org.br", "gov.br",
    "com.cn", "net.cn", "org.cn", "gov.cn",
    "com.hk", "com.sg", "com.my", "com.tw", "com.ph", "com.vn",
    "co.th", "co.id", "co.in", "net.in", "org.in",
    "co.kr", "or.kr", "co.za", "org.za", "co.il", "org.il",
    "com.mx", "com.ar", "com.tr", "com.co", "com.pe", "com.ve",
    "com.eg", "com.sa", "com.ng", "co.ke", "com.pk", "com.bd",
    "com.ua", "com.pl",
})


def is_http_url(url: str) -> bool:
    """True if ``url`` is an absolute http(s) URL with a host."""
    try:
        parts = urlsplit(url)
        host = parts.hostname
    except ValueError:
        return False
    return parts.scheme.lower() in ("http", "https") and bool(host)


def resolve_url(base: str, reference: str) -> str:
    """Resolve ``reference`` against ``base`` into an absolute http(s) URL.

    Absolute http(s) references come back unchanged. References that can never
    be fetched (javascript:, data:, mailto:, empty, ...) raise
    UnresolvableReference instead of producing garbage.
    """
    ref = reference.strip()
    if not ref:
        raise UnresolvableReference("empty reference")
    m = _SCHEME_RE.match(ref)
    if m:
        scheme = m.group(1).lower()
        if scheme not in ("http", "https"):
            raise UnresolvableReference(f"{scheme}: reference is not fetchable")
        if not is_http_url(ref):
            raise UnresolvableReference(f"absolute reference has no host: {ref!r}")
        return ref
    if not is_http_url(base):
        raise UnresolvableReference(f"base is not an absolute http(s) URL: {base!r}")
    resolved = urljoin(base, ref)
    if not is_http_url(resolved):
        raise UnresolvableReference(f"resolution of {ref!r} produced no fetchable URL")
    return resolved


def normalize_url(url: str) -> str:
    """Canonical form used as a dedupe key.

    Lowercases scheme and host, drops the fragment and a default port, and maps
    an empty path to "/". Path, query and userinfo stay case-sensitive: those
    are significant on many servers.
    """
    parts = urlsplit(url)
    scheme = parts.scheme.lower()
    host = (parts.hostname or "").lower()
    if ":" in host:  # IPv6 literal, keep brackets
        host = f"[{host}]"
    try:
        port = parts.port
    except ValueError:
        port = None
    userinfo = ""
    if parts.username is not None:
        userinfo = parts.username
        if parts.password is not None:
            userinfo += f":{parts.password}"
        userinfo += "@"
    netloc = userinfo + host
    if port is not None and port != DEFAULT_PORTS.get(scheme):
        netloc += f":{port}"
    return urlunsplit((scheme, netloc, parts.path or "/", parts.query, ""))


def host_of(url: str) -> str:
    """Lowercased hostname of ``url`` ("" if there is none)."""
    try:
        return (urlsplit(url).hostname or "").lower()
    except ValueError:
        return ""


def explicit_port(url: str) -> int | None:
    """The port spelled out in the URL, or None (even ":80" counts as explicit)."""
    try:
        return urlsplit(url).port
    except ValueError:
        return None


def is_ip_host(host: str) -> bool:
    """True if ``host`` is an IP literal: dotted decimal, IPv6, hex, or plain integer."""
    host = host.strip("[]").lower()
    if not host:
        return False
    try:
        ipaddress.ip_address(host)
        return True
    except ValueError:
        pass
    parts = host.split(".")
    if len(parts) == 4 and all(_HEX_OCTET_RE.match(p) or p.isdigit() for p in parts):
        try:
            values = [int(p, 16) if p.startswith("0x") else int(p) for p in parts]
        except ValueError:
            return False
        return all(0 <= v <= 255 for v in values)
    if host.isdigit():
        return int(host) < 2 ** 32
    if _HEX_HOST_RE.match(host):
        return int(host, 16) < 2 ** 32
    return False


def registrable_domain(host: str) -> str:
    """The registrable part of ``host`` (e.g. "a.b.example.co.uk" -> "example.co.uk").

    IP literals come back unchanged. Uses the embedded two-part suffix table;
    unknown multi-part suffixes degrade to the last two labels.
    """
    host = host.lower().rstrip(".")
    if is_ip_host(host):
        return host
    labels = host.split(".")
    if len(labels) <= 2:
        return host
    if ".".join(labels[-2:]) in _TWO_LEVEL_SUFFIXES:
        return ".".join(labels[-3:])
    return ".".join(labels[-2:])


def same_registrable_domain(url_a: str, url_b: str) -> bool:
    return registrable_domain(host_of(url_a)) == registrable_domain(host_of(url_b))
