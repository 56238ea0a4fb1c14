"""Emulated browsing context: the seam between probes and the platform."""

from .browser import (
    Browser,
    BrowserProfile,
    NativeFunction,
    NotAllowedError,
    StoredCredential,
    Window,
    pristine_source,
)
from .dom import PROBE_MARKER_ATTR, Document, Element, MutationObserver
from .frames import Frame, SecurityError
from .net import (
    ContentFilter,
    CorsError,
    FetchError,
    NameResolutionError,
    NetworkBlocked,
    Origin,
    Response,
    TimeoutError_,
    TlsError,
)

__all__ = [
    "Browser",
    "BrowserProfile",
    "ContentFilter",
    "CorsError",
    "Document",
    "Element",
    "FetchError",
    "Frame",
    "MutationObserver",
    "NameResolutionError",
    "NativeFunction",
    "NetworkBlocked",
    "NotAllowedError",
    "Origin",
    "PROBE_MARKER_ATTR",
    "Response",
    "SecurityError",
    "StoredCredential",
    "TimeoutError_",
    "TlsError",
    "Window",
    "pristine_source",
]
