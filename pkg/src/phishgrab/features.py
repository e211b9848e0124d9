"""Ternary phishing features.

Thirty features per sample, each in {-1, 0, 1} (-1 phishing-looking, 0
suspicious, 1 legitimate-looking), in the fixed order of FEATURE_NAMES
(misspellings like "Shortining_Service" and "popUpWidnow" are part of the
schema and must stay). The class label encodes phishing=-1, legitimate=1 under
the "Result" column.

Features split into three groups, each produced by exactly one function:
url_features (9, purely lexical), content_features (12, from the archived
page), thirdparty_features (9, from an IntelligenceReport). Anything the
intelligence provider cannot answer stays 0 (unknown), never a guess.
"""
from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from . import htmlscan, store
from .errors import MissingHtml, UnresolvableReference
from .extract import DiscoveredResources, discover
from .urls import (
    explicit_port,
    host_of,
    is_ip_host,
    registrable_domain,
    resolve_url,
)

FEATURE_NAMES = [
    # address bar
    "having_IP_Address", "URL_Length", "Shortining_Service", "having_At_Symbol",
    "double_slash_redirecting", "Prefix_Suffix", "having_Sub_Domain",
    "SSLfinal_State", "Domain_registeration_length", "Favicon", "port",
    "HTTPS_token",
    # abnormality
    "Request_URL", "URL_of_Anchor", "Links_in_tags", "SFH",
    "Submitting_to_email", "Abnormal_URL",
    # HTML / JavaScript
    "Redirect", "on_mouseover", "RightClick", "popUpWidnow", "Iframe",
    # domain
    "age_of_domain", "DNSRecord", "web_traffic", "Page_Rank", "Google_Index",
    "Links_pointing_to_page", "Statistical_report",
]

RESULT_COLUMN = "Result"
LABEL_VALUES = {"phishing": -1, "legitimate": 1}
TERNARY = (-1, 0, 1)

# rule thresholds
URL_SHORT_LEN = 54          # len < 54 legit; 54..75 suspicious; >75 phishing
URL_LONG_LEN = 75
ANCHOR_LOW, ANCHOR_HIGH = 0.317, 0.67
REQUEST_LOW, REQUEST_HIGH = 0.22, 0.61
TAGS_LOW, TAGS_HIGH = 0.17, 0.81
DOMAIN_AGE_MIN_DAYS = 183   # about six months
REGISTRATION_MIN_DAYS = 365
CERT_AGE_MIN_DAYS = 365
TRAFFIC_RANK_GOOD = 100_000
PAGE_RANK_MIN = 0.2
INBOUND_LINKS_FEW = 2

SHORTENER_HOSTS = frozenset({
    "bit.ly", "goo.gl", "tinyurl.com", "t.co", "ow.ly", "is.gd", "buff.ly",
    "adf.ly", "bit.do", "cutt.ly", "rb.gy", "rebrand.ly", "tiny.cc", "lnkd.in",
    "db.tt", "qr.ae", "j.mp", "tr.im", "x.co", "shorte.st", "go2l.ink",
    "soo.gd", "s2r.co", "clicky.me", "budurl.com",
})

_MOUSEOVER_RE = re.compile(r"onmouseover\s*=", re.IGNORECASE)
_RIGHTCLICK_RE = re.compile(r"event\.button\s*==\s*2|oncontextmenu", re.IGNORECASE)
_POPUP_RE = re.compile(r"window\.open\s*\(|showModalDialog\s*\(|\bprompt\s*\(", re.IGNORECASE)
_IFRAME_RE = re.compile(r"<\s*i?frame\b", re.IGNORECASE)


@dataclass(frozen=True)
class IntelligenceReport:
    """Third-party facts about a host. None means the provider does not know."""

    domain_age_days: int | None = None
    registration_remaining_days: int | None = None
    has_dns_record: bool | None = None
    traffic_rank: int | None = None          # <=0 means "provider says unranked"
    page_rank_score: float | None = None     # 0..1
    indexed_by_search: bool | None = None
    inbound_link_count: int | None = None
    on_blacklist: bool | None = None
    cert_issuer_trusted: bool | None = None
    cert_age_days: int | None = None


class OfflineIntelligence:
    """Provider that knows nothing; every lookup is all-None."""

    def lookup(self, host: str) -> IntelligenceReport:
        return IntelligenceReport()


class StaticIntelligence:
    """Provider backed by a host-keyed dict (e.g. loaded from a JSON file)."""

    def __init__(self, reports: dict):
        self.reports = {host.lower(): report for host, report in reports.items()}

    @classmethod
    def from_json_file(cls, path) -> "StaticIntelligence":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls({
            host: IntelligenceReport(**fields) for host, fields in raw.items()
        })

    def lookup(self, host: str) -> IntelligenceReport:
        return self.reports.get(host.lower(), IntelligenceReport())


@dataclass
class FeatureVector:
    sample_id: str
    url: str
    values: dict  # feature name -> -1/0/1
    label: int    # -1 phishing, 1 legitimate

    def __post_init__(self):
        missing = [n for n in FEATURE_NAMES if n not in self.values]
        extra = [n for n in self.values if n not in FEATURE_NAMES]
        if missing or extra:
            raise ValueError(f"bad feature set: missing={missing} extra={extra}")
        bad = {n: v for n, v in self.values.items() if v not in TERNARY}
        if bad:
            raise ValueError(f"non-ternary feature values: {bad}")
        if self.label not in (-1, 1):
            raise ValueError(f"label must be -1 or 1, got {self.label!r}")

    def row(self) -> list[int]:
        return [self.values[name] for name in FEATURE_NAMES] + [self.label]


def url_features(url: str) -> dict:
    """The nine features readable straight off the address bar."""
    host = host_of(url)
    domain = registrable_domain(host)
    port = explicit_port(url)
    return {
        "having_IP_Address": -1 if is_ip_host(host) else 1,
        "URL_Length": _band_length(len(url)),
        "Shortining_Service": -1 if domain in SHORTENER_HOSTS or host in SHORTENER_HOSTS else 1,
        "having_At_Symbol": -1 if "@" in url else 1,
        # "//" past position 7 sits inside the URL proper, not after the scheme
        "double_slash_redirecting": -1 if url.rfind("//") > 7 else 1,
        "Prefix_Suffix": -1 if "-" in domain else 1,
        "having_Sub_Domain": _subdomain_score(host),
        "port": -1 if port is not None and port not in (80, 443) else 1,
        "HTTPS_token": -1 if "https" in host else 1,
    }


def content_features(html: str, final_url: str, resources: DiscoveredResources | None = None,
                     *, redirect_hops: int = 0, external_js: tuple | list = ()) -> dict:
    """The twelve features that need the archived page itself.

    ``resources`` defaults to a fresh discover() pass; pass the collector's own
    result to keep the two views identical. ``external_js`` is the text of
    archived external scripts, folded into the HTML/JS pattern scans.
    """
    if resources is None:
        resources = discover(html, final_url)
    root = htmlscan.scan(html)
    page_domain = registrable_domain(host_of(final_url))
    corpus = "\n".join([html, *resources.inline_scripts, *external_js]).lower()

    anchor_score = _anchor_score(root, final_url, page_domain)
    request_score = _fraction_band(
        _cross_domain_fraction(resources.image_urls, page_domain),
        REQUEST_LOW, REQUEST_HIGH,
    )
    meta_links = list(resources.external_script_urls) + list(resources.external_stylesheet_urls)
    if not resources.favicon_fallback:
        meta_links += resources.favicon_urls
    tags_score = _fraction_band(
        _cross_domain_fraction(meta_links, page_domain), TAGS_LOW, TAGS_HIGH
    )
    sfh_score, mailto = _form_scores(root, final_url, page_domain)

    return {
        "Favicon": _favicon_score(resources, page_domain),
        "Request_URL": request_score,
        "URL_of_Anchor": anchor_score,
        "Links_in_tags": tags_score,
        "SFH": sfh_score,
        "Submitting_to_email": -1 if mailto else 1,
        "Abnormal_URL": _abnormal_url_score(html, final_url),
        "Redirect": 1 if redirect_hops <= 1 else (0 if redirect_hops <= 3 else -1),
        "on_mouseover": -1 if _MOUSEOVER_RE.search(corpus) else 1,
        "RightClick": -1 if _RIGHTCLICK_RE.search(corpus) else 1,
        "popUpWidnow": -1 if _POPUP_RE.search(corpus) else 1,
        "Iframe": -1 if _IFRAME_RE.search(corpus) else 1,
    }


def thirdparty_features(url: str, report: IntelligenceReport) -> dict:
    """The nine features that need outside knowledge; unknowns stay 0."""
    return {
        "SSLfinal_State": _ssl_score(url, report),
        "Domain_registeration_length": _tri(
            report.registration_remaining_days,
            lambda d: 1 if d >= REGISTRATION_MIN_DAYS else -1,
        ),
        "age_of_domain": _tri(
            report.domain_age_days,
            lambda d: 1 if d >= DOMAIN_AGE_MIN_DAYS else -1,
        ),
        "DNSRecord": _tri(report.has_dns_record, lambda b: 1 if b else -1),
        "web_traffic": _tri(report.traffic_rank, _traffic_score),
        "Page_Rank": _tri(
            report.page_rank_score,
            lambda s: -1 if s < PAGE_RANK_MIN else 1,
        ),
        "Google_Index": _tri(report.indexed_by_search, lambda b: 1 if b else -1),
        "Links_pointing_to_page": _tri(report.inbound_link_count, _inbound_score),
        "Statistical_report": _tri(report.on_blacklist, lambda b: -1 if b else 1),
    }


def feature_vector_for_page(record, html: str, *, final_url: str | None = None,
                            resources: DiscoveredResources | None = None,
                            report: IntelligenceReport | None = None,
                            redirect_hops: int = 0,
                            external_js: tuple | list = ()) -> FeatureVector:
    """Assemble the full 30-value vector for one already-fetched page."""
    final_url = final_url or record.url
    values = url_features(record.url)
    values.update(content_features(
        html, final_url, resources,
        redirect_hops=redirect_hops, external_js=external_js,
    ))
    values.update(thirdparty_features(final_url, report or IntelligenceReport()))
    return FeatureVector(
        sample_id=record.sample_id,
        url=record.url,
        values=values,
        label=LABEL_VALUES[record.label],
    )


def extract_feature_vector(sample_path, report: IntelligenceReport | None = None,
                           *, intel=None) -> FeatureVector:
    """Compute the vector for one archived sample directory, fully offline.

    Pass either a ready ``report`` or an ``intel`` provider (lookup() keyed by
    the final URL's host); with neither, everything third-party stays unknown.
    """
    sample_path = Path(sample_path)
    manifest = store.read_manifest(sample_path)
    if manifest.error:
        raise MissingHtml(f"{manifest.record.sample_id}: archive failed ({manifest.error})")
    if report is None and intel is not None:
        report = intel.lookup(host_of(manifest.final_url))
    html_refs = manifest.ok_resources(store.KIND_HTML)
    if not html_refs:
        raise MissingHtml(f"{manifest.record.sample_id}: no archived landing page")
    html = (sample_path / html_refs[0].local_path).read_text(encoding="utf-8", errors="replace")
    external_js = [
        (sample_path / ref.local_path).read_text(encoding="utf-8", errors="replace")
        for ref in manifest.ok_resources(store.KIND_JS)
        if ref.origin_url != store.INLINE_ORIGIN
    ]
    return feature_vector_for_page(
        manifest.record, html,
        final_url=manifest.final_url,
        report=report,
        redirect_hops=manifest.redirect_hops,
        external_js=external_js,
    )


def write_matrix_csv(path, vectors: list[FeatureVector]):
    """UCI-schema CSV: 30 feature columns plus Result."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(FEATURE_NAMES + [RESULT_COLUMN])
        for vector in vectors:
            writer.writerow(vector.row())


# scoring internals ----------------------------------------------------------


def _band_length(n: int) -> int:
    if n < URL_SHORT_LEN:
        return 1
    if n <= URL_LONG_LEN:
        return 0
    return -1


def _fraction_band(fraction: float | None, low: float, high: float) -> int:
    """Band a cross-domain fraction; None means an empty denominator (clean)."""
    if fraction is None:
        return 1
    if fraction < low:
        return 1
    if fraction <= high:
        return 0
    return -1


def _subdomain_score(host: str) -> int:
    if is_ip_host(host) or not host:
        return 1
    bare = host[4:] if host.startswith("www.") else host
    domain = registrable_domain(bare)
    if bare == domain:
        return 1
    labels = bare[: -(len(domain) + 1)].count(".") + 1
    return 0 if labels == 1 else -1


def _cross_domain_fraction(urls: list[str], page_domain: str) -> float | None:
    if not urls:
        return None
    cross = sum(1 for u in urls if registrable_domain(host_of(u)) != page_domain)
    return cross / len(urls)


def _anchor_score(root, final_url: str, page_domain: str) -> int:
    total = 0
    unsafe = 0
    for anchor in root.find_all("a"):
        total += 1
        href = (anchor.get("href") or "").strip()
        if not href or href.startswith("#"):
            unsafe += 1
            continue
        if href.lower().startswith("javascript:"):
            unsafe += 1
            continue
        try:
            target = resolve_url(final_url, href)
        except UnresolvableReference:
            continue  # mailto:/tel: links count in the total, not as unsafe
        if registrable_domain(host_of(target)) != page_domain:
            unsafe += 1
    if total == 0:
        return 1
    return _fraction_band(unsafe / total, ANCHOR_LOW, ANCHOR_HIGH)


def _form_scores(root, final_url: str, page_domain: str) -> tuple[int, bool]:
    """(SFH score, any-mailto-action). The worst form wins."""
    scores: list[int] = []
    mailto = False
    for form in root.find_all("form"):
        action = (form.get("action") or "").strip()
        if action.lower().startswith("mailto:"):
            mailto = True
        if not action or action.lower() == "about:blank":
            scores.append(-1)
            continue
        try:
            target = resolve_url(final_url, action)
        except UnresolvableReference:
            scores.append(0)  # handler domain cannot be verified
            continue
        scores.append(0 if registrable_domain(host_of(target)) != page_domain else 1)
    return (min(scores) if scores else 1), mailto


def _favicon_score(resources: DiscoveredResources, page_domain: str) -> int:
    if not resources.favicon_urls:
        return 1
    first = resources.favicon_urls[0]
    return -1 if registrable_domain(host_of(first)) != page_domain else 1


def _abnormal_url_score(html: str, final_url: str) -> int:
    host = host_of(final_url)
    bare = host[4:] if host.startswith("www.") else host
    if not bare:
        return -1
    return 1 if bare in html.lower() else -1


def _ssl_score(url: str, report: IntelligenceReport) -> int:
    if not url.lower().startswith("https:"):
        return -1
    if report.cert_issuer_trusted is None:
        return 0
    if not report.cert_issuer_trusted:
        return 0
    if report.cert_age_days is not None and report.cert_age_days >= CERT_AGE_MIN_DAYS:
        return 1
    return 0


def _traffic_score(rank: int) -> int:
    if rank <= 0:
        return -1  # the provider answered: not ranked at all
    return 1 if rank <= TRAFFIC_RANK_GOOD else 0


def _inbound_score(count: int) -> int:
    if count <= 0:
        return -1
    return 0 if count <= INBOUND_LINKS_FEW else 1


def _tri(value, scorer) -> int:
    """Unknown (None) is 0; otherwise apply the group's rule."""
    return 0 if value is None else scorer(value)
