"""End-to-end archiving: fetch a record's page, store every resource, snapshot.

archive_sample() is deliberately total: any expected failure (network, layout,
screenshot) becomes part of the outcome/manifest instead of an exception, so
one rotten sample can never take down a batch. Only genuine bugs propagate.
"""
from __future__ import annotations

import shutil
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from urllib.parse import unquote, urlsplit

from . import store
from .errors import FetchError, PhishgrabError, SampleExists, SnapshotError
from .extract import discover
from .fetch import Fetcher, decode_page
from .ingest import UrlRecord
from .snapshot import ViewportSpec, capture_viewport

OVERWRITE_SKIP = "skip"
OVERWRITE_REPLACE = "overwrite"
OVERWRITE_FAIL = "fail"
OVERWRITE_MODES = (OVERWRITE_SKIP, OVERWRITE_REPLACE, OVERWRITE_FAIL)

_INLINE_JS_NAME = "inline.js"
_INLINE_CSS_NAME = "inline.css"


@dataclass
class SampleOutcome:
    sample_id: str
    status: str  # archived | skipped | failed
    error: str | None = None
    resources_failed: int = 0


@dataclass
class RunSummary:
    attempted: int = 0
    archived: int = 0
    skipped: int = 0
    failed: int = 0
    resources_failed: int = 0
    error_counts: dict = field(default_factory=dict)  # error kind -> samples
    outcomes: list = field(default_factory=list)
    started_at: str = ""
    elapsed_seconds: float = 0.0

    @property
    def considered(self) -> int:
        """Samples actually attempted this run (skips are previous runs' work)."""
        return self.attempted - self.skipped

    @property
    def failure_rate(self) -> float:
        return self.failed / self.considered if self.considered else 0.0

    def to_dict(self) -> dict:
        return {
            "attempted": self.attempted,
            "archived": self.archived,
            "skipped": self.skipped,
            "failed": self.failed,
            "failure_rate": round(self.failure_rate, 6),
            "resources_failed": self.resources_failed,
            "error_counts": dict(sorted(self.error_counts.items())),
            "started_at": self.started_at,
            "elapsed_seconds": round(self.elapsed_seconds, 3),
            "samples": [
                {"sample_id": o.sample_id, "status": o.status, "error": o.error,
                 "resources_failed": o.resources_failed}
                for o in sorted(self.outcomes, key=lambda o: o.sample_id)
            ],
        }


def archive_sample(record: UrlRecord, root, fetcher: Fetcher, *,
                   viewport: ViewportSpec | None = None,
                   provider=None,
                   take_screenshots: bool = True,
                   screenshot_live: bool = False,
                   overwrite: str = OVERWRITE_SKIP,
                   screenshot_gate: threading.Semaphore | None = None) -> SampleOutcome:
    """Archive one record into ``<root>/<sample_id>/``.

    A failed landing-page fetch still produces the directory skeleton and a
    manifest carrying the error kind; resource failures are recorded per
    resource. Screenshots render the archived file by default; pass
    screenshot_live=True to point the browser at the live final URL instead.
    """
    if overwrite not in OVERWRITE_MODES:
        raise ValueError(f"bad overwrite mode: {overwrite!r}")
    viewport = viewport or ViewportSpec()
    try:
        sample = _prepare_dir(record, root, overwrite)
    except SampleExists:
        if overwrite == OVERWRITE_SKIP:
            return SampleOutcome(record.sample_id, "skipped")
        return SampleOutcome(record.sample_id, "failed", error="sample_exists")
    except PhishgrabError as err:
        return SampleOutcome(record.sample_id, "failed", error=str(err))

    fetched_at = datetime.now(timezone.utc).isoformat(timespec="seconds")
    try:
        page = fetcher.fetch_page(record.url)
    except FetchError as err:
        manifest = store.SampleManifest(
            record=record, final_url=record.url, fetched_at=fetched_at,
            resources=[], error=err.kind,
        )
        store.write_manifest(sample, manifest)
        return SampleOutcome(record.sample_id, "failed", error=err.kind)

    try:
        refs: list[store.ResourceRef] = []
        html = decode_page(page)
        html_ref = store.write_resource(
            sample, store.KIND_HTML, _name_from_url(page.final_url) or "page",
            page.body, origin_url=page.final_url,
        )
        refs.append(html_ref)

        found = discover(html, page.final_url)
        inline_js = _join_blocks(found.inline_scripts)
        if inline_js:
            refs.append(store.write_resource(
                sample, store.KIND_JS, _INLINE_JS_NAME,
                inline_js, origin_url=store.INLINE_ORIGIN,
            ))
        inline_css = _inline_css(found.inline_style_decls, found.internal_style_blocks)
        if inline_css:
            refs.append(store.write_resource(
                sample, store.KIND_CSS, _INLINE_CSS_NAME,
                inline_css, origin_url=store.INLINE_ORIGIN,
            ))
        _fetch_into(fetcher, sample, store.KIND_JS, found.external_script_urls, refs)
        _fetch_into(fetcher, sample, store.KIND_CSS, found.external_stylesheet_urls, refs)
        _fetch_into(fetcher, sample, store.KIND_FAVICON, found.favicon_urls, refs,
                    fallback=found.favicon_fallback)
        _fetch_into(fetcher, sample, store.KIND_IMAGE, found.image_urls, refs)
        for skip in found.skipped:
            refs.append(store.ResourceRef(
                kind=skip.kind, origin_url=skip.reference, local_path=None,
                byte_count=0, status=store.STATUS_SKIPPED, reason=skip.reason,
            ))

        if take_screenshots and provider is not None:
            refs.append(_take_screenshot(
                sample, html_ref, page.final_url, viewport, provider,
                screenshot_live, screenshot_gate,
            ))

        manifest = store.SampleManifest(
            record=record, final_url=page.final_url, fetched_at=fetched_at,
            resources=refs, error=None, redirect_hops=page.redirects,
        )
        store.write_manifest(sample, manifest)
    except PhishgrabError as err:
        # the layout is unusable (disk trouble mid-write); record what we can
        manifest = store.SampleManifest(
            record=record, final_url=page.final_url, fetched_at=fetched_at,
            resources=[], error=f"store_failed: {err}", redirect_hops=page.redirects,
        )
        try:
            store.write_manifest(sample, manifest)
        except PhishgrabError:
            pass
        return SampleOutcome(record.sample_id, "failed", error=str(err))

    failed_count = sum(1 for r in refs if r.status == store.STATUS_FETCH_FAILED)
    return SampleOutcome(record.sample_id, "archived", resources_failed=failed_count)


def run_collect(records: list[UrlRecord], root, fetcher: Fetcher, *,
                workers: int = 8,
                viewport: ViewportSpec | None = None,
                provider=None,
                take_screenshots: bool = True,
                screenshot_live: bool = False,
                overwrite: str = OVERWRITE_SKIP,
                screenshot_sessions: int = 2,
                log=None) -> RunSummary:
    """Archive a batch with a bounded worker pool and bounded browser sessions."""
    started = datetime.now(timezone.utc).isoformat(timespec="seconds")
    clock_start = time.monotonic()
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    gate = threading.Semaphore(max(1, screenshot_sessions))
    summary = RunSummary(attempted=len(records), started_at=started)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        futures = {
            pool.submit(
                archive_sample, record, root, fetcher,
                viewport=viewport, provider=provider,
                take_screenshots=take_screenshots,
                screenshot_live=screenshot_live,
                overwrite=overwrite, screenshot_gate=gate,
            ): record
            for record in records
        }
        for future in as_completed(futures):
            outcome = future.result()
            summary.outcomes.append(outcome)
            summary.resources_failed += outcome.resources_failed
            if outcome.status == "archived":
                summary.archived += 1
            elif outcome.status == "skipped":
                summary.skipped += 1
            else:
                summary.failed += 1
                kind = outcome.error or "unknown"
                summary.error_counts[kind] = summary.error_counts.get(kind, 0) + 1
            if log:
                suffix = f" ({outcome.error})" if outcome.error else ""
                log(f"[{outcome.status}] {outcome.sample_id}{suffix}")
    summary.elapsed_seconds = time.monotonic() - clock_start
    return summary


# internals ------------------------------------------------------------------


def _prepare_dir(record: UrlRecord, root, overwrite: str) -> store.SampleDir:
    try:
        return store.init_sample_dir(root, record.sample_id)
    except SampleExists:
        if overwrite != OVERWRITE_REPLACE:
            raise
        shutil.rmtree(Path(root) / record.sample_id)
        return store.init_sample_dir(root, record.sample_id)


def _fetch_into(fetcher: Fetcher, sample: store.SampleDir, kind: str,
                urls: list[str], refs: list, *, fallback: bool = False):
    seen: set[str] = set()
    for url in urls:
        if url in seen:
            continue
        seen.add(url)
        try:
            result = fetcher.fetch_resource(url)
        except FetchError as err:
            refs.append(store.ResourceRef(
                kind=kind, origin_url=url, local_path=None, byte_count=0,
                status=store.STATUS_FETCH_FAILED, reason=err.kind, fallback=fallback,
            ))
            continue
        refs.append(store.write_resource(
            sample, kind, _name_from_url(result.final_url), result.body,
            origin_url=url, fallback=fallback,
        ))


def _take_screenshot(sample: store.SampleDir, html_ref, final_url: str,
                     viewport: ViewportSpec, provider, live: bool,
                     gate: threading.Semaphore | None) -> store.ResourceRef:
    if live:
        target = final_url
    else:
        target = str((sample.path / html_ref.local_path).resolve())
    try:
        if gate is not None:
            with gate:
                png = capture_viewport(target, viewport, provider)
        else:
            png = capture_viewport(target, viewport, provider)
    except SnapshotError as err:
        return store.ResourceRef(
            kind=store.KIND_SCREENSHOT, origin_url=final_url, local_path=None,
            byte_count=0, status=store.STATUS_SKIPPED, reason=err.kind,
        )
    return store.write_resource(
        sample, store.KIND_SCREENSHOT, sample.sample_id, png, origin_url=final_url,
    )


def _name_from_url(url: str) -> str:
    segments = [unquote(s) for s in urlsplit(url).path.split("/") if s]
    return segments[-1] if segments else ""


def _join_blocks(blocks: list[str]) -> bytes:
    kept = [block.strip() for block in blocks if block.strip()]
    if not kept:
        return b""
    return ("\n\n".join(kept) + "\n").encode("utf-8")


def _inline_css(decls: list[tuple[str, str]], blocks: list[str]) -> bytes:
    parts = [f"{tag} {{ {css} }}" for tag, css in decls]
    parts += [block.strip() for block in blocks if block.strip()]
    if not parts:
        return b""
    return ("\n\n".join(parts) + "\n").encode("utf-8")
