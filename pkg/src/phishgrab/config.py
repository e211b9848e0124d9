"""Run configuration.

Precedence is flags > config file > defaults. Config files are flat
``key = value`` lines (# comments allowed) using the exact field names of
RunConfig, so there is never a mapping table to keep in sync.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .collector import OVERWRITE_MODES, OVERWRITE_SKIP
from .errors import ConfigError
from .fetch import DEFAULT_USER_AGENT, FetchPolicy
from .ingest import LABELS, LABEL_LEGITIMATE
from .snapshot import ViewportSpec

PROVIDER_DEVTOOLS = "devtools"
PROVIDER_STUB = "stub"
PROVIDERS = (PROVIDER_DEVTOOLS, PROVIDER_STUB)

_TRUE_WORDS = {"1", "true", "yes", "on"}
_FALSE_WORDS = {"0", "false", "no", "off"}


@dataclass
class RunConfig:
    # input
    input_csv: str | None = None
    detail_dir: str | None = None
    ids: str | None = None
    phishtank_base: str = "https://phishtank.org"
    default_label: str = LABEL_LEGITIMATE
    # archive
    root: str = "archive"
    overwrite: str = OVERWRITE_SKIP
    # fetch
    connect_timeout: float = 10.0
    total_timeout: float = 60.0
    max_redirects: int = 10
    max_body_bytes: int = 25 * 1024 * 1024
    retries: int = 2
    per_host_delay: float = 0.5
    user_agent: str = DEFAULT_USER_AGENT
    insecure: bool = False
    # screenshots
    screenshots: bool = True
    screenshot_provider: str = PROVIDER_DEVTOOLS
    cdp_endpoint: str = "127.0.0.1:9222"
    screenshot_live: bool = False
    screenshot_sessions: int = 2
    viewport_width: int = 1366
    viewport_height: int = 768
    settle_delay: float = 2.0
    # run
    workers: int = 8
    failure_threshold: float = 1.0
    request_log: str | None = None

    def policy(self) -> FetchPolicy:
        try:
            return FetchPolicy(
                connect_timeout=self.connect_timeout,
                total_timeout=self.total_timeout,
                max_redirects=self.max_redirects,
                max_body_bytes=self.max_body_bytes,
                retries=self.retries,
                per_host_delay=self.per_host_delay,
                user_agent=self.user_agent,
                verify_tls=not self.insecure,
            )
        except ValueError as err:
            raise ConfigError(str(err)) from err

    def viewport(self) -> ViewportSpec:
        try:
            return ViewportSpec(
                width=self.viewport_width,
                height=self.viewport_height,
                settle_delay=self.settle_delay,
            )
        except ValueError as err:
            raise ConfigError(str(err)) from err

    def validate(self):
        if self.default_label not in LABELS:
            raise ConfigError(f"default_label must be one of {LABELS}")
        if self.overwrite not in OVERWRITE_MODES:
            raise ConfigError(f"overwrite must be one of {OVERWRITE_MODES}")
        if self.screenshot_provider not in PROVIDERS:
            raise ConfigError(f"screenshot_provider must be one of {PROVIDERS}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.screenshot_sessions < 1:
            raise ConfigError("screenshot_sessions must be >= 1")
        if not 0.0 <= self.failure_threshold <= 1.0:
            raise ConfigError("failure_threshold must be between 0 and 1")
        self.policy()
        self.viewport()


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def load_config_file(path) -> dict:
    """Parse a key=value config file into raw string values (keys validated)."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read config file {path}: {err}") from err
    values: dict = {}
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{line_no}: expected key = value, got {line!r}")
        key, _, raw = line.partition("=")
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{path}:{line_no}: unknown key {key!r}")
        values[key] = raw.strip()
    return values


def build_config(file_values: dict | None = None, flag_values: dict | None = None) -> RunConfig:
    """defaults <- config file <- flags, with type coercion and validation."""
    config = RunConfig()
    for key, raw in (file_values or {}).items():
        setattr(config, key, _coerce(key, raw))
    for key, value in (flag_values or {}).items():
        if value is None or key not in _FIELD_TYPES:
            continue
        setattr(config, key, value)
    config.validate()
    return config


def _coerce(key: str, raw: str):
    kind = _FIELD_TYPES[key]
    try:
        if kind == "bool":
            lowered = raw.lower()
            if lowered in _TRUE_WORDS:
                return True
            if lowered in _FALSE_WORDS:
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError as err:
        raise ConfigError(f"bad value for {key}: {err}") from err
