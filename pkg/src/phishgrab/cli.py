"""Command-line interface.

Subcommands: collect (archive a batch of URLs), features (feature matrix from
an archive), analyze (correlation ranking, optional comparison), stats
(archive resource counts). Exit codes: 0 success, 1 total failure, 2 bad
usage/config, 3 partial failure above the configured threshold.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import __version__, analyze, collector, store
from .config import (
    PROVIDER_STUB,
    PROVIDERS,
    RunConfig,
    build_config,
    load_config_file,
)
from .errors import (
    AnalysisError,
    ConfigError,
    FetchError,
    IngestError,
    IoFailure,
    MissingHtml,
    PhishgrabError,
)
from .features import (
    OfflineIntelligence,
    StaticIntelligence,
    extract_feature_vector,
    write_matrix_csv,
)
from .fetch import Fetcher, decode_page
from .ingest import LABELS, dedupe, load_csv_feed, parse_phishtank_detail
from .snapshot import DevtoolsScreenshotProvider, StubScreenshotProvider

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_PARTIAL = 3


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except PhishgrabError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_FAILURE


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phishgrab",
        description="Archive landing pages with their resources and extract phishing features.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    collect = commands.add_parser("collect", help="archive a batch of labeled URLs")
    collect.set_defaults(handler=cmd_collect)
    collect.add_argument("--config", help="key = value config file")
    source = collect.add_argument_group("input (exactly one)")
    source.add_argument("--input", dest="input_csv", help="CSV feed with a url column")
    source.add_argument("--detail-dir", dest="detail_dir",
                        help="directory of saved PhishTank detail pages (*.html)")
    source.add_argument("--ids", help="PhishTank ids to fetch, e.g. 100,200 or 300-310")
    collect.add_argument("--phishtank-base", dest="phishtank_base")
    collect.add_argument("--default-label", dest="default_label", choices=LABELS)
    collect.add_argument("--root", help="archive root directory")
    collect.add_argument("--overwrite", choices=collector.OVERWRITE_MODES,
                         help="what to do when a sample directory already has data")
    collect.add_argument("--connect-timeout", dest="connect_timeout", type=float)
    collect.add_argument("--total-timeout", dest="total_timeout", type=float)
    collect.add_argument("--max-redirects", dest="max_redirects", type=int)
    collect.add_argument("--max-body-bytes", dest="max_body_bytes", type=int)
    collect.add_argument("--retries", type=int)
    collect.add_argument("--per-host-delay", dest="per_host_delay", type=float)
    collect.add_argument("--user-agent", dest="user_agent")
    collect.add_argument("--insecure", action=argparse.BooleanOptionalAction, default=None,
                         help="skip TLS verification (phishing hosts love bad certs)")
    collect.add_argument("--screenshots", action=argparse.BooleanOptionalAction, default=None)
    collect.add_argument("--screenshot-provider", dest="screenshot_provider", choices=PROVIDERS)
    collect.add_argument("--cdp-endpoint", dest="cdp_endpoint",
                         help="host:port of a browser with remote debugging enabled")
    collect.add_argument("--screenshot-live", dest="screenshot_live",
                         action=argparse.BooleanOptionalAction, default=None,
                         help="shoot the live page instead of the archived file")
    collect.add_argument("--screenshot-sessions", dest="screenshot_sessions", type=int)
    collect.add_argument("--viewport-width", dest="viewport_width", type=int)
    collect.add_argument("--viewport-height", dest="viewport_height", type=int)
    collect.add_argument("--settle-delay", dest="settle_delay", type=float)
    collect.add_argument("--workers", type=int)
    collect.add_argument("--failure-threshold", dest="failure_threshold", type=float)
    collect.add_argument("--request-log", dest="request_log",
                         help="write a CSV of every request's politeness release stamp")

    features = commands.add_parser("features", help="feature matrix from an archive")
    features.set_defaults(handler=cmd_features)
    features.add_argument("--root", required=True, help="archive root directory")
    features.add_argument("--output", help="matrix CSV path (default <root>.features.csv)")
    features.add_argument("--intel", help="JSON file of per-host intelligence reports")

    analyze_cmd = commands.add_parser("analyze", help="rank features by label correlation")
    analyze_cmd.set_defaults(handler=cmd_analyze)
    analyze_cmd.add_argument("--input", required=True, help="feature matrix CSV")
    analyze_cmd.add_argument("--out-dir", dest="out_dir", default=".",
                             help="where correlation.csv/json (and comparison.csv) land")
    analyze_cmd.add_argument("--top-k", dest="top_k", type=int, default=16)
    analyze_cmd.add_argument("--compare", help="second matrix CSV to compare against")

    stats = commands.add_parser("stats", help="resource statistics for an archive")
    stats.set_defaults(handler=cmd_stats)
    stats.add_argument("--root", required=True, help="archive root directory")
    stats.add_argument("--output", help="also write the numbers as CSV here")

    return parser


# collect ----------------------------------------------------------------------


def cmd_collect(args) -> int:
    file_values = load_config_file(args.config) if args.config else None
    config = build_config(file_values, vars(args))
    sources = [s for s in (config.input_csv, config.detail_dir, config.ids) if s]
    if len(sources) != 1:
        raise ConfigError("exactly one of --input, --detail-dir, --ids is required")

    provider = None
    if config.screenshots:
        if config.screenshot_provider == PROVIDER_STUB:
            provider = StubScreenshotProvider()
        else:
            provider = DevtoolsScreenshotProvider(config.cdp_endpoint)

    fetcher = Fetcher(config.policy(), record_log=bool(config.request_log))
    try:
        records = dedupe(_load_records(config, fetcher))
        summary = collector.run_collect(
            records, config.root, fetcher,
            workers=config.workers,
            viewport=config.viewport(),
            provider=provider,
            take_screenshots=config.screenshots,
            screenshot_live=config.screenshot_live,
            overwrite=config.overwrite,
            screenshot_sessions=config.screenshot_sessions,
            log=lambda line: print(line, file=sys.stderr),
        )
        if config.request_log:
            _write_request_log(config.request_log, fetcher)
    finally:
        fetcher.close()

    summary_path = Path(config.root).parent / (Path(config.root).name + ".summary.json")
    summary_path.write_text(json.dumps(summary.to_dict(), indent=2) + "\n", encoding="utf-8")
    print(_summary_text(summary, summary_path))

    if summary.archived == 0 and summary.considered > 0:
        return EXIT_FAILURE
    if summary.failure_rate > config.failure_threshold:
        return EXIT_PARTIAL
    return EXIT_OK


def _load_records(config: RunConfig, fetcher: Fetcher):
    if config.input_csv:
        try:
            data = Path(config.input_csv).read_bytes()
        except OSError as err:
            raise ConfigError(f"cannot read {config.input_csv}: {err}") from err
        records, skipped = load_csv_feed(data, config.default_label)
        if skipped:
            print(f"skipped {skipped} unusable feed rows", file=sys.stderr)
        return records
    if config.detail_dir:
        return _records_from_detail_dir(config.detail_dir)
    return _records_from_ids(config, fetcher)


def _records_from_detail_dir(path):
    directory = Path(path)
    if not directory.is_dir():
        raise ConfigError(f"not a directory: {path}")
    records = []
    for page in sorted(directory.glob("*.html")):
        try:
            records.append(parse_phishtank_detail(
                page.read_text(encoding="utf-8", errors="replace"), page.stem,
            ))
        except IngestError as err:
            print(f"skipping {page.name}: {err}", file=sys.stderr)
    if not records:
        raise IngestError(f"no usable detail pages in {path}")
    return records


def _records_from_ids(config: RunConfig, fetcher: Fetcher):
    records = []
    for phish_id in _parse_id_spec(config.ids):
        url = f"{config.phishtank_base.rstrip('/')}/phish_detail.php?phish_id={phish_id}"
        try:
            page = fetcher.fetch_page(url)
            records.append(parse_phishtank_detail(decode_page(page), phish_id))
        except (FetchError, IngestError) as err:
            print(f"skipping id {phish_id}: {err}", file=sys.stderr)
    if not records:
        raise IngestError(f"no usable detail pages for ids {config.ids!r}")
    return records


def _parse_id_spec(spec: str) -> list[str]:
    ids: list[str] = []
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            low, _, high = part.partition("-")
            try:
                start, stop = int(low), int(high)
            except ValueError:
                raise ConfigError(f"bad id range: {part!r}") from None
            if stop < start:
                raise ConfigError(f"bad id range: {part!r}")
            ids.extend(str(n) for n in range(start, stop + 1))
        else:
            if not part.isdigit():
                raise ConfigError(f"bad id: {part!r}")
            ids.append(part)
    if not ids:
        raise ConfigError(f"no ids in {spec!r}")
    return ids


def _write_request_log(path, fetcher: Fetcher):
    entries = sorted(fetcher.request_log, key=lambda e: e.stamp)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["stamp", "host", "url", "attempt"])
        for entry in entries:
            writer.writerow([f"{entry.stamp:.6f}", entry.host, entry.url, entry.attempt])


def _summary_text(summary: collector.RunSummary, summary_path) -> str:
    lines = [
        f"attempted {summary.attempted}  archived {summary.archived}  "
        f"skipped {summary.skipped}  failed {summary.failed}  "
        f"({summary.elapsed_seconds:.1f}s)",
    ]
    if summary.error_counts:
        parts = ", ".join(f"{kind}: {count}" for kind, count in sorted(summary.error_counts.items()))
        lines.append(f"failures by kind: {parts}")
    lines.append(f"summary written to {summary_path}")
    return "\n".join(lines)


# features ---------------------------------------------------------------------


def cmd_features(args) -> int:
    root = Path(args.root)
    if not root.is_dir():
        print(f"error: not a directory: {root}", file=sys.stderr)
        return EXIT_FAILURE
    intel = StaticIntelligence.from_json_file(args.intel) if args.intel else OfflineIntelligence()
    output = args.output or str(root.parent / (root.name + ".features.csv"))
    vectors = []
    skipped = 0
    for sample_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        try:
            vectors.append(extract_feature_vector(sample_dir, intel=intel))
        except (MissingHtml, IoFailure) as err:
            print(f"skipping {sample_dir.name}: {err}", file=sys.stderr)
            skipped += 1
    if not vectors:
        print("error: no sample produced a feature vector", file=sys.stderr)
        return EXIT_FAILURE
    write_matrix_csv(output, vectors)
    print(f"wrote {len(vectors)} rows to {output}" + (f" ({skipped} samples skipped)" if skipped else ""))
    return EXIT_OK


# analyze ----------------------------------------------------------------------


def cmd_analyze(args) -> int:
    try:
        matrix = analyze.load_matrix_csv(args.input)
        report = analyze.correlation_with_label(matrix)
    except AnalysisError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_FAILURE
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    analyze.report_to_csv(report, out_dir / "correlation.csv")
    analyze.report_to_json(report, out_dir / "correlation.json", dataset=Path(args.input).stem)
    try:
        print(analyze.report_table(report, k=args.top_k), end="")
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    if args.compare:
        try:
            other = analyze.load_matrix_csv(args.compare)
            rows = analyze.compare_matrices(matrix, other)
        except AnalysisError as err:
            print(f"error: {err}", file=sys.stderr)
            return EXIT_FAILURE
        name_a = Path(args.input).stem
        name_b = Path(args.compare).stem
        analyze.comparison_to_csv(rows, out_dir / "comparison.csv", name_a, name_b)
        print()
        print(analyze.comparison_table(rows, name_a, name_b), end="")
    return EXIT_OK


# stats ------------------------------------------------------------------------


def cmd_stats(args) -> int:
    root = Path(args.root)
    if not root.is_dir():
        print(f"error: not a directory: {root}", file=sys.stderr)
        return EXIT_FAILURE
    stats = store.collect_stats(root)
    if args.output:
        Path(args.output).write_text(store.stats_csv(stats), encoding="utf-8")
    print(store.stats_table(stats), end="")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
