"""Resource discovery inside landing-page HTML.

Finds everything the archiver needs to fetch or persist: scripts (inline text
and external URLs), styles (style attributes, <style> blocks, external sheets),
favicon links of every flavor, and image URLs. References that cannot become
fetchable URLs (data:, javascript:, empty...) are recorded as skips, never
silently dropped.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from . import htmlscan
from .errors import UnresolvableReference
from .urls import resolve_url

# rel tokens that mark a link element as an icon of some kind; "shortcut icon"
# matches through its "icon" token
ICON_REL_TOKENS = frozenset({
    "icon", "apple-touch-icon", "mask-icon", "fluid-icon",
    "manifest", "yandex-tableau-widget",
})

FALLBACK_FAVICON_PATH = "/favicon.ico"

KIND_JS = "javascript"
KIND_CSS = "css"
KIND_FAVICON = "favicon"
KIND_IMAGE = "image"


@dataclass(frozen=True)
class SkippedRef:
    kind: str
    reference: str
    reason: str


@dataclass
class DiscoveredResources:
    inline_scripts: list[str] = field(default_factory=list)
    external_script_urls: list[str] = field(default_factory=list)
    inline_style_decls: list[tuple[str, str]] = field(default_factory=list)  # (tag, css)
    internal_style_blocks: list[str] = field(default_factory=list)
    external_stylesheet_urls: list[str] = field(default_factory=list)
    favicon_urls: list[str] = field(default_factory=list)
    image_urls: list[str] = field(default_factory=list)
    favicon_fallback: bool = False  # True when favicon_urls is just the /favicon.ico probe
    skipped: list[SkippedRef] = field(default_factory=list)


def find_base_url(html: str, fetch_url: str) -> str:
    """Effective base for resolving references: first <base href>, else the fetch URL."""
    return _base_from_root(htmlscan.scan(html), fetch_url)


def extract_scripts(html: str, base_url: str) -> tuple[list[str], list[str]]:
    """(inline script texts, external script URLs) in document order."""
    root = htmlscan.scan(html)
    return _scripts(root, _base_from_root(root, base_url), [])


def extract_styles(html: str, base_url: str) -> tuple[list[tuple[str, str]], list[str], list[str]]:
    """(style-attribute decls, <style> blocks, external stylesheet URLs)."""
    root = htmlscan.scan(html)
    return _styles(root, _base_from_root(root, base_url), [])


def extract_favicon_urls(html: str, base_url: str) -> list[str]:
    """Declared icon URLs, or the /favicon.ico fallback probe if none resolve."""
    root = htmlscan.scan(html)
    urls, _ = _favicons(root, _base_from_root(root, base_url), [])
    return urls


def extract_image_urls(html: str, base_url: str) -> list[str]:
    """Distinct <img> source URLs in document order."""
    root = htmlscan.scan(html)
    return _images(root, _base_from_root(root, base_url), [])


def discover(html: str, fetch_url: str) -> DiscoveredResources:
    """Everything in one pass over a single parse."""
    root = htmlscan.scan(html)
    base = _base_from_root(root, fetch_url)
    found = DiscoveredResources()
    found.inline_scripts, found.external_script_urls = _scripts(root, base, found.skipped)
    (found.inline_style_decls,
     found.internal_style_blocks,
     found.external_stylesheet_urls) = _styles(root, base, found.skipped)
    found.favicon_urls, found.favicon_fallback = _favicons(root, base, found.skipped)
    found.image_urls = _images(root, base, found.skipped)
    return found


# internals ----------------------------------------------------------------


def _base_from_root(root: htmlscan.Node, fetch_url: str) -> str:
    for node in root.find_all("base"):
        href = (node.get("href") or "").strip()
        if not href:
            continue
        try:
            return resolve_url(fetch_url, href)
        except UnresolvableReference:
            return fetch_url
    return fetch_url


def _scripts(root, base, skipped) -> tuple[list[str], list[str]]:
    inline: list[str] = []
    external: list[str] = []
    for node in root.find_all("script"):
        src = node.get("src")
        if src is None:
            inline.append(node.text())
            continue
        src = src.strip()
        try:
            external.append(resolve_url(base, src))
        except UnresolvableReference as err:
            skipped.append(SkippedRef(KIND_JS, _clip(src), str(err)))
    return inline, external


def _styles(root, base, skipped):
    decls: list[tuple[str, str]] = []
    blocks: list[str] = []
    external: list[str] = []
    for node in root.iter_nodes():
        style = node.get("style")
        if style and style.strip():
            decls.append((node.tag, style.strip()))
        if node.tag == "style":
            blocks.append(node.text())
        elif node.tag == "link":
            rel_tokens = (node.get("rel") or "").lower().split()
            if "stylesheet" in rel_tokens:
                href = (node.get("href") or "").strip()
                try:
                    external.append(resolve_url(base, href))
                except UnresolvableReference as err:
                    skipped.append(SkippedRef(KIND_CSS, _clip(href), str(err)))
    return decls, blocks, external


def _favicons(root, base, skipped) -> tuple[list[str], bool]:
    found: list[str] = []
    for node in root.find_all("link"):
        rel_tokens = set((node.get("rel") or "").lower().split())
        if not rel_tokens & ICON_REL_TOKENS:
            continue
        href = (node.get("href") or "").strip()
        try:
            url = resolve_url(base, href)
        except UnresolvableReference as err:
            skipped.append(SkippedRef(KIND_FAVICON, _clip(href), str(err)))
            continue
        if url not in found:
            found.append(url)
    if found:
        return found, False
    # no declared icon: probe the conventional location, flagged as a fallback
    return [resolve_url(base, FALLBACK_FAVICON_PATH)], True


def _images(root, base, skipped) -> list[str]:
    out: list[str] = []
    seen: set[str] = set()
    for node in root.find_all("img"):
        src = (node.get("src") or "").strip()
        try:
            url = resolve_url(base, src)
        except UnresolvableReference as err:
            skipped.append(SkippedRef(KIND_IMAGE, _clip(src), str(err)))
            continue
        if url not in seen:
            seen.add(url)
            out.append(url)
    return out


def _clip(reference: str, limit: int = 200) -> str:
    # data: URIs can be enormous; manifests only need enough to identify them
    return reference if len(reference) <= limit else reference[:limit] + "..."
