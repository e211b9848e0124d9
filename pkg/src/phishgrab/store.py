"""Per-sample archive layout, manifests, and corpus statistics.

Every sample lives in ``<root>/<sample_id>/`` with a fixed set of
subdirectories (created even when empty, so the layout is uniform) and a
manifest.json describing exactly what was stored and what failed.
"""
from __future__ import annotations

import hashlib
import json
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import IoFailure, SampleExists
from .ingest import UrlRecord

KIND_HTML = "html"
KIND_CSS = "css"
KIND_JS = "javascript"
KIND_FAVICON = "favicon"
KIND_IMAGE = "image"
KIND_SCREENSHOT = "screenshot"
KINDS = (KIND_HTML, KIND_CSS, KIND_JS, KIND_FAVICON, KIND_IMAGE, KIND_SCREENSHOT)

KIND_DIRS = {
    KIND_HTML: "HTML",
    KIND_CSS: "CSS",
    KIND_JS: "Javascript",
    KIND_FAVICON: "Favicon",
    KIND_IMAGE: "Images",
    KIND_SCREENSHOT: "Screenshots",
}
SUBDIRS = ("CSS", "Favicon", "HTML", "Images", "Javascript", "Screenshots")

STATUS_OK = "ok"
STATUS_FETCH_FAILED = "fetch_failed"
STATUS_SKIPPED = "skipped"
STATUSES = (STATUS_OK, STATUS_FETCH_FAILED, STATUS_SKIPPED)

INLINE_ORIGIN = "inline"
MANIFEST_NAME = "manifest.json"

_UNSAFE_NAME_CHARS = re.compile(r"[^A-Za-z0-9._-]+")
_ID_RE = re.compile(r"^[A-Za-z0-9_-]+$")
_IMAGE_EXTS = frozenset({
    ".png", ".jpg", ".jpeg", ".gif", ".webp", ".svg", ".ico",
    ".bmp", ".avif", ".tif", ".tiff", ".jfif",
})
_FORCED_EXTS = {
    KIND_HTML: ".html",
    KIND_CSS: ".css",
    KIND_JS: ".js",
    KIND_FAVICON: ".ico",
    KIND_SCREENSHOT: ".png",
}


@dataclass
class ResourceRef:
    """One stored (or attempted) resource.

    local_path is sample-relative ("Images/logo.png") and is None unless the
    status is ok. reason carries the fetch-error or skip cause; fallback marks
    the /favicon.ico probe.
    """

    kind: str
    origin_url: str
    local_path: str | None
    byte_count: int
    status: str
    reason: str = ""
    fallback: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"bad resource kind: {self.kind!r}")
        if self.status not in STATUSES:
            raise ValueError(f"bad resource status: {self.status!r}")
        if self.status == STATUS_OK and not self.local_path:
            raise ValueError("ok resource must have a local_path")
        if self.status != STATUS_OK and (self.local_path or self.byte_count):
            raise ValueError("failed/skipped resource cannot carry a path or bytes")


@dataclass
class SampleManifest:
    record: UrlRecord
    final_url: str
    fetched_at: str  # ISO-8601, UTC
    resources: list[ResourceRef] = field(default_factory=list)
    error: str | None = None
    redirect_hops: int = 0

    def ok_resources(self, kind: str | None = None) -> list[ResourceRef]:
        return [
            r for r in self.resources
            if r.status == STATUS_OK and (kind is None or r.kind == kind)
        ]


@dataclass
class SampleDir:
    """Handle to one initialized sample directory."""

    path: Path
    sample_id: str

    def subdir(self, kind: str) -> Path:
        return self.path / KIND_DIRS[kind]

    @property
    def manifest_path(self) -> Path:
        return self.path / MANIFEST_NAME


def _sanitize_name(name: str) -> str:
    # keep names flat and boring: no separators, no leading dots, bounded length
    cleaned = _UNSAFE_NAME_CHARS.sub("_", name.strip()).lstrip(".")
    return cleaned[:80]


def init_sample_dir(root, sample_id: str) -> SampleDir:
    """Create ``<root>/<sample_id>/`` with the six standard subdirectories.

    Raises SampleExists if the directory already holds any file (a previous
    run's data), and IoFailure if the root is missing or unwritable. An
    existing but empty skeleton is reused.
    """
    if not _ID_RE.match(sample_id):
        raise ValueError(f"bad sample id: {sample_id!r}")
    root_path = Path(root)
    if not root_path.is_dir():
        raise IoFailure(f"archive root does not exist: {root_path}")
    sample_path = root_path / sample_id
    try:
        if sample_path.exists():
            for entry in sample_path.iterdir():
                if entry.is_file():
                    raise SampleExists(f"{sample_path} already has data ({entry.name})")
                if entry.name not in SUBDIRS or any(entry.iterdir()):
                    raise SampleExists(f"{sample_path} already has data ({entry.name})")
        for name in SUBDIRS:
            (sample_path / name).mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise IoFailure(f"cannot initialize {sample_path}: {err}") from err
    return SampleDir(sample_path, sample_id)


def write_resource(sample: SampleDir, kind: str, suggested_name: str, data: bytes, *,
                   origin_url: str, fallback: bool = False) -> ResourceRef:
    """Persist ``data`` under the right subdirectory and return its ResourceRef.

    Extensions are forced by kind (.html/.css/.js/.ico/.png); images keep their
    own extension or get ".img". Name collisions get -1/-2/... suffixes. The
    sanitized name never escapes the subdirectory.
    """
    if kind not in KINDS:
        raise ValueError(f"bad resource kind: {kind!r}")
    directory = sample.subdir(kind)
    stem, ext = os.path.splitext(_sanitize_name(suggested_name))
    if kind == KIND_IMAGE:
        ext = ext.lower() if ext.lower() in _IMAGE_EXTS else ".img"
    else:
        ext = _FORCED_EXTS[kind]
        if stem.lower().endswith(ext):  # avoid theme.css.css
            stem = stem[: -len(ext)]
    if not stem:
        stem = hashlib.sha256(data).hexdigest()[:12]
    filename = stem + ext
    counter = 1
    while (directory / filename).exists():
        filename = f"{stem}-{counter}{ext}"
        counter += 1
    try:
        (directory / filename).write_bytes(data)
    except OSError as err:
        raise IoFailure(f"cannot write {directory / filename}: {err}") from err
    return ResourceRef(
        kind=kind,
        origin_url=origin_url,
        local_path=f"{KIND_DIRS[kind]}/{filename}",
        byte_count=len(data),
        status=STATUS_OK,
        fallback=fallback,
    )


def write_manifest(sample: SampleDir, manifest: SampleManifest) -> Path:
    path = sample.manifest_path
    try:
        path.write_text(
            json.dumps(manifest_to_dict(manifest), indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
    except OSError as err:
        raise IoFailure(f"cannot write {path}: {err}") from err
    return path


def read_manifest(sample_path) -> SampleManifest:
    """Load and validate one manifest; anything unreadable raises IoFailure."""
    path = Path(sample_path) / MANIFEST_NAME
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
        record = UrlRecord(**raw["record"])
        resources = [
            ResourceRef(
                kind=item["kind"],
                origin_url=item["origin_url"],
                local_path=item["local_path"],
                byte_count=item["byte_count"],
                status=item["status"],
                reason=item.get("reason", ""),
                fallback=item.get("fallback", False),
            )
            for item in raw["resources"]
        ]
        return SampleManifest(
            record=record,
            final_url=raw["final_url"],
            fetched_at=raw["fetched_at"],
            resources=resources,
            error=raw.get("error"),
            redirect_hops=raw.get("redirect_hops", 0),
        )
    except (OSError, ValueError, KeyError, TypeError) as err:
        raise IoFailure(f"unreadable manifest in {sample_path}: {err}") from err


def manifest_to_dict(manifest: SampleManifest) -> dict:
    return {
        "record": {
            "sample_id": manifest.record.sample_id,
            "url": manifest.record.url,
            "label": manifest.record.label,
            "source": manifest.record.source,
        },
        "final_url": manifest.final_url,
        "redirect_hops": manifest.redirect_hops,
        "fetched_at": manifest.fetched_at,
        "resources": [_ref_to_dict(r) for r in manifest.resources],
        "error": manifest.error,
    }


def _ref_to_dict(ref: ResourceRef) -> dict:
    out = {
        "kind": ref.kind,
        "origin_url": ref.origin_url,
        "local_path": ref.local_path,
        "byte_count": ref.byte_count,
        "status": ref.status,
    }
    if ref.reason:
        out["reason"] = ref.reason
    if ref.fallback:
        out["fallback"] = True
    return out


def verify_layout(sample_path) -> list[str]:
    """Cross-check manifest against disk; returns human-readable problems.

    The ok resources must map one-to-one onto the files under the sample
    directory (manifest.json aside): no dangling refs, no orphan files, no
    duplicate targets, and every ref filed under its kind's subdirectory.
    """
    sample_path = Path(sample_path)
    problems: list[str] = []
    try:
        manifest = read_manifest(sample_path)
    except IoFailure as err:
        return [str(err)]
    on_disk = {
        p.relative_to(sample_path).as_posix()
        for p in sample_path.rglob("*")
        if p.is_file() and p.name != MANIFEST_NAME
    }
    referenced: list[str] = []
    for ref in manifest.resources:
        if ref.status != STATUS_OK:
            continue
        referenced.append(ref.local_path)
        expected_dir = KIND_DIRS[ref.kind]
        if not ref.local_path.startswith(expected_dir + "/"):
            problems.append(f"{ref.local_path}: filed outside {expected_dir}/")
        if ref.local_path not in on_disk:
            problems.append(f"{ref.local_path}: referenced but missing on disk")
        else:
            actual = (sample_path / ref.local_path).stat().st_size
            if actual != ref.byte_count:
                problems.append(
                    f"{ref.local_path}: byte_count {ref.byte_count} != on-disk {actual}"
                )
    duplicates = {p for p in referenced if referenced.count(p) > 1}
    for path in sorted(duplicates):
        problems.append(f"{path}: referenced more than once")
    for orphan in sorted(on_disk - set(referenced)):
        problems.append(f"{orphan}: on disk but not in manifest")
    return problems


# corpus statistics ----------------------------------------------------------

_STAT_LABELS = ("legitimate", "phishing")


@dataclass
class ResourceStats:
    """Per-class resource counts across an archive root."""

    samples: dict = field(default_factory=dict)        # label -> manifest count
    samples_with: dict = field(default_factory=dict)   # (label, kind) -> samples holding >=1
    total_files: dict = field(default_factory=dict)    # (label, kind) -> stored file count
    corrupt: int = 0                                   # unreadable/missing manifests


def collect_stats(root) -> ResourceStats:
    """Walk ``root`` and tally stored resources per class and kind.

    Deterministic for a fixed tree: directories are visited in sorted order and
    all counters are pure functions of the manifests. Samples whose manifest is
    missing or unreadable are counted as corrupt and otherwise ignored.
    """
    root = Path(root)
    stats = ResourceStats(
        samples={label: 0 for label in _STAT_LABELS},
        samples_with={(label, kind): 0 for label in _STAT_LABELS for kind in KINDS},
        total_files={(label, kind): 0 for label in _STAT_LABELS for kind in KINDS},
    )
    if not root.is_dir():
        return stats
    for entry in sorted(root.iterdir()):
        if not entry.is_dir():
            continue
        try:
            manifest = read_manifest(entry)
        except IoFailure:
            stats.corrupt += 1
            continue
        label = manifest.record.label
        stats.samples[label] += 1
        for kind in KINDS:
            count = sum(
                1 for r in manifest.resources
                if r.kind == kind and r.status == STATUS_OK
            )
            if count:
                stats.samples_with[(label, kind)] += 1
            stats.total_files[(label, kind)] += count
    return stats


def stats_csv(stats: ResourceStats) -> str:
    lines = ["label,kind,samples,samples_with_resource,total_files"]
    for label in _STAT_LABELS:
        for kind in KINDS:
            lines.append(
                f"{label},{kind},{stats.samples[label]},"
                f"{stats.samples_with[(label, kind)]},{stats.total_files[(label, kind)]}"
            )
    return "\n".join(lines) + "\n"


def stats_table(stats: ResourceStats) -> str:
    header = f"{'label':<12}{'kind':<12}{'samples':>8}{'with':>8}{'files':>8}"
    lines = [header, "-" * len(header)]
    for label in _STAT_LABELS:
        for kind in KINDS:
            lines.append(
                f"{label:<12}{kind:<12}{stats.samples[label]:>8}"
                f"{stats.samples_with[(label, kind)]:>8}{stats.total_files[(label, kind)]:>8}"
            )
    if stats.corrupt:
        lines.append(f"unreadable manifests: {stats.corrupt}")
    return "\n".join(lines) + "\n"
