"""Exception hierarchy.

Every error the library raises on purpose derives from PhishgrabError, so callers
can catch one base. Fetch errors additionally carry a stable machine-readable
``kind`` string that ends up in manifests and run summaries.
"""
from __future__ import annotations


class PhishgrabError(Exception):
    """Base class for all phishgrab errors."""


class UnresolvableReference(PhishgrabError):
    """A document reference that cannot become a fetchable http(s) URL."""


class IngestError(PhishgrabError):
    """Base for labeled-input problems."""


class MissingUrlElement(IngestError):
    """A detail page has no recognizable URL container."""


class InvalidUrl(IngestError):
    """A candidate URL is present but not a usable http(s) URL."""


class MissingUrlColumn(IngestError):
    """A CSV feed has no url column (or no header at all)."""


class EmptyFeed(IngestError):
    """A feed parsed fine but produced zero usable records."""


class FetchError(PhishgrabError):
    """A retrieval failure. Never fatal to a run; recorded and moved past.

    ``kind`` is the stable identifier written to manifests; ``status_code`` is
    set when an HTTP response was actually received.
    """

    kind = "fetch_error"

    def __init__(self, message: str, status_code: int | None = None):
        super().__init__(message)
        self.status_code = status_code


class ContentForbidden(FetchError):
    kind = "content_forbidden"

    def __init__(self, message: str):
        super().__init__(message, status_code=403)


class FileNotFound(FetchError):
    kind = "file_not_found"

    def __init__(self, message: str):
        super().__init__(message, status_code=404)


class HttpError(FetchError):
    """Any other non-2xx response."""

    kind = "http_error"


class FetchTimeout(FetchError):
    kind = "timeout"


class TooManyRedirects(FetchError):
    kind = "too_many_redirects"


class DnsFailure(FetchError):
    kind = "dns_failure"


class TlsFailure(FetchError):
    kind = "tls_failure"


class NetworkError(FetchError):
    """Connection refused/reset and other transport-level failures."""

    kind = "network_error"


class StoreError(PhishgrabError):
    """Base for archive layout problems."""


class SampleExists(StoreError):
    """Target sample directory already holds data."""


class IoFailure(StoreError):
    """Filesystem operation failed (permissions, missing root, corrupt manifest)."""


class SnapshotError(PhishgrabError):
    """Base for screenshot failures; carries ``kind`` like FetchError."""

    kind = "snapshot_error"


class ProviderUnavailable(SnapshotError):
    kind = "provider_unavailable"


class SafeBrowsingBlocked(SnapshotError):
    kind = "safe_browsing_blocked"


class RenderTimeout(SnapshotError):
    kind = "render_timeout"


class BadScreenshot(SnapshotError):
    kind = "bad_screenshot"


class FeatureError(PhishgrabError):
    """Base for feature-extraction problems."""


class MissingHtml(FeatureError):
    """Sample has no archived landing page to extract from."""


class AnalysisError(PhishgrabError):
    """Base for matrix/correlation problems."""


class SingleClassMatrix(AnalysisError):
    """All labels identical; correlation with the label is undefined."""


class SchemaMismatch(AnalysisError):
    """Two matrices do not share a feature schema."""


class ConfigError(PhishgrabError):
    """Bad configuration file or flag combination."""
