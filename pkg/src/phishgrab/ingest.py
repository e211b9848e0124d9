"""Labeled URL ingestion.

Two sources produce UrlRecords: saved PhishTank detail pages (one phishing URL
each) and CSV feeds (urls with optional labels and ids). Both normalize into the
same record type so the collector does not care where a URL came from.
"""
from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass

from . import htmlscan
from .errors import EmptyFeed, InvalidUrl, MissingUrlColumn, MissingUrlElement
from .urls import is_http_url, normalize_url

LABEL_PHISHING = "phishing"
LABEL_LEGITIMATE = "legitimate"
LABELS = (LABEL_PHISHING, LABEL_LEGITIMATE)

SOURCE_PHISHTANK = "phishtank_detail"
SOURCE_CSV = "csv_feed"
SOURCES = (SOURCE_PHISHTANK, SOURCE_CSV)

_ID_BAD_CHARS = re.compile(r"[^A-Za-z0-9_-]+")


@dataclass(frozen=True)
class UrlRecord:
    sample_id: str
    url: str
    label: str
    source: str

    def __post_init__(self):
        if not self.sample_id:
            raise ValueError("sample_id must be non-empty")
        if _ID_BAD_CHARS.search(self.sample_id):
            raise ValueError(f"sample_id has unsafe characters: {self.sample_id!r}")
        if self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}, got {self.label!r}")
        if self.source not in SOURCES:
            raise ValueError(f"source must be one of {SOURCES}, got {self.source!r}")
        if not is_http_url(self.url):
            raise InvalidUrl(f"not an absolute http(s) URL: {self.url!r}")


def sanitize_sample_id(raw: str) -> str:
    """Turn arbitrary id text into a filesystem-safe token ("" if nothing survives)."""
    return _ID_BAD_CHARS.sub("-", raw.strip()).strip("-")


def parse_phishtank_detail(page_html: str, phish_id: str) -> UrlRecord:
    """Extract the reported URL from a saved PhishTank detail page.

    The URL lives in a span styled with word-wrap (older page versions use an
    element with class "url"). No such container, or only empty ones, raises
    MissingUrlElement; a candidate that is not a usable http(s) URL raises
    InvalidUrl.
    """
    root = htmlscan.scan(page_html)
    candidates: list[str] = []
    for node in root.iter_nodes():
        style = (node.get("style") or "").lower()
        classes = (node.get("class") or "").lower().split()
        if "word-wrap" in style or "url" in classes:
            candidates.append(node.text().strip())
    picked = next((c for c in candidates if c), None)
    if picked is None:
        raise MissingUrlElement(f"detail page {phish_id}: no URL container found")
    if not is_http_url(picked):
        raise InvalidUrl(f"detail page {phish_id}: {picked!r} is not an http(s) URL")
    sample_id = sanitize_sample_id(phish_id)
    if not sample_id:
        raise ValueError(f"unusable phish id: {phish_id!r}")
    return UrlRecord(sample_id, picked, LABEL_PHISHING, SOURCE_PHISHTANK)


def load_csv_feed(data: bytes, default_label: str = LABEL_LEGITIMATE) -> tuple[list[UrlRecord], int]:
    """Parse a CSV feed into records plus a count of skipped rows.

    The feed needs a ``url`` column (matched case-insensitively); ``label`` and
    ``id`` columns are optional. Rows with a missing/invalid URL or an
    unrecognized non-empty label are skipped and counted, never guessed at.
    Missing ids become zero-padded row ordinals; duplicate ids get -2/-3/...
    suffixes so every record lands in its own directory.
    """
    if default_label not in LABELS:
        raise ValueError(f"default_label must be one of {LABELS}")
    text = data.decode("utf-8-sig", errors="replace")
    reader = csv.DictReader(io.StringIO(text))
    if not reader.fieldnames:
        raise MissingUrlColumn("feed is empty (no header row)")
    columns: dict[str, str] = {}
    for name in reader.fieldnames:
        key = (name or "").strip().lower()
        if key and key not in columns:
            columns[key] = name
    if "url" not in columns:
        raise MissingUrlColumn(f"no url column in header: {reader.fieldnames}")

    records: list[UrlRecord] = []
    skipped = 0
    seen_ids: set[str] = set()
    for ordinal, row in enumerate(reader, start=1):
        url = (row.get(columns["url"]) or "").strip()
        if not is_http_url(url):
            skipped += 1
            continue
        label = default_label
        if "label" in columns:
            raw_label = (row.get(columns["label"]) or "").strip().lower()
            if raw_label and raw_label not in LABELS:
                skipped += 1
                continue
            if raw_label:
                label = raw_label
        raw_id = (row.get(columns["id"]) or "").strip() if "id" in columns else ""
        sample_id = sanitize_sample_id(raw_id) or f"{ordinal:06d}"
        if sample_id in seen_ids:
            base, n = sample_id, 2
            while sample_id in seen_ids:
                sample_id = f"{base}-{n}"
                n += 1
        seen_ids.add(sample_id)
        records.append(UrlRecord(sample_id, url, label, SOURCE_CSV))
    if not records:
        raise EmptyFeed(f"feed produced no usable records ({skipped} skipped)")
    return records, skipped


def dedupe(records: list[UrlRecord]) -> list[UrlRecord]:
    """Drop records whose normalized URL was already seen; first occurrence wins."""
    seen: set[str] = set()
    out: list[UrlRecord] = []
    for record in records:
        key = normalize_url(record.url)
        if key not in seen:
            seen.add(key)
            out.append(record)
    return out
