"""Frames: documents loaded into a parent context, with access mediation.

Pages come off the wire as real HTML; their scripts are interpreted
through a small recognized-statement set (sentinel assignment, messaging,
parent access, cookies, bare calls). Whether a script runs at all is
decided by the interesting part — sandbox flags, CSP, the legacy
reflected-script filter — which is exactly what the probes measure.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from urllib.parse import parse_qs, urlparse

from .csp import CspPolicy, CspViolation
from .dom import Document, Element
from .net import Origin, Response

_TITLE_RE = re.compile(r"<title>(.*?)</title>", re.IGNORECASE | re.DOTALL)
_META_CSP_RE = re.compile(
    r"<meta[^>]+http-equiv=[\"']Content-Security-Policy[\"'][^>]*content=[\"']([^\"']+)[\"']",
    re.IGNORECASE,
)
_INLINE_SCRIPT_RE = re.compile(r"<script(?![^>]*\bsrc=)[^>]*>(.*?)</script>", re.IGNORECASE | re.DOTALL)
_EXTERNAL_SCRIPT_RE = re.compile(r"<script[^>]*\bsrc=[\"']([^\"']+)[\"'][^>]*>", re.IGNORECASE)
_ID_TAG_RE = re.compile(r"<(\w+)[^>]*\bid=[\"']([^\"']+)[\"'][^>]*>", re.IGNORECASE)

_SENTINEL_STMT = re.compile(r"^window\.(__\w+__?|\w+)\s*=\s*(.+)$")
_POST_MESSAGE_STMT = re.compile(r"^parent\.postMessage\(\s*\"([^\"]*)\"\s*,\s*\"\*\"\s*\)$")
_PARENT_PROBE_STMT = re.compile(r"^probeParentAccess\(\s*\)$")
_COOKIE_STMT = re.compile(r"^document\.cookie\s*=\s*\"([^\"]*)\"$")
_BARE_CALL_STMT = re.compile(r"^(\w+)\((.*)\)$")
_FUNCTION_HEAD = re.compile(r"function\s+\w+\s*\([^)]*\)\s*\{")


class SecurityError(Exception):
    """Access denied by the same-origin policy or a sandbox restriction."""


@dataclass
class Frame:
    url: str
    origin: Origin
    sandbox: set[str] | None  # None = unsandboxed; empty set = fully restricted
    hidden: bool = False
    title: str = ""
    document: Document = field(default_factory=Document)
    csp: CspPolicy | None = None
    sentinels: dict[str, str] = field(default_factory=dict)
    messages_to_parent: list[str] = field(default_factory=list)
    violations: list[CspViolation] = field(default_factory=list)
    executed_calls: list[str] = field(default_factory=list)
    load_event: str | None = None  # "load" | "error" | None (silence)
    load_detail: str = ""
    xss_filtered: bool = False
    location_hash: str = ""

    @property
    def has_opaque_origin(self) -> bool:
        return self.sandbox is not None and "allow-same-origin" not in self.sandbox

    def scripts_allowed(self, enforce_sandbox: bool = True) -> bool:
        if self.sandbox is None:
            return True
        if "allow-scripts" in self.sandbox:
            return True
        return not enforce_sandbox


def _strip_function_defs(text: str) -> str:
    """Remove ``function name(...) { ... }`` blocks, brace-aware."""
    out: list[str] = []
    pos = 0
    while True:
        match = _FUNCTION_HEAD.search(text, pos)
        if match is None:
            out.append(text[pos:])
            break
        out.append(text[pos:match.start()])
        depth = 1
        i = match.end()
        while i < len(text) and depth:
            if text[i] == "{":
                depth += 1
            elif text[i] == "}":
                depth -= 1
            i += 1
        pos = i
    return "".join(out)


def split_statements(script_text: str) -> list[str]:
    """Strip function definitions and comments, then split on semicolons."""
    text = _strip_function_defs(script_text)
    text = re.sub(r"//[^\n]*", "", text)
    return [stmt.strip() for stmt in text.split(";") if stmt.strip()]


def parse_page(response: Response) -> dict[str, object]:
    """Pull the interpretable pieces out of a fetched page."""
    html = response.body.decode("utf-8", "replace")
    title_match = _TITLE_RE.search(html)
    meta_match = _META_CSP_RE.search(html)
    return {
        "title": title_match.group(1).strip() if title_match else "",
        "meta_csp": meta_match.group(1) if meta_match else None,
        "header_csp": response.header("Content-Security-Policy"),
        "legacy_csp_header": response.header("X-Content-Security-Policy"),
        "xss_protection": response.header("X-XSS-Protection"),
        "inline_scripts": [m.group(1) for m in _INLINE_SCRIPT_RE.finditer(html)],
        "external_scripts": [m.group(1) for m in _EXTERNAL_SCRIPT_RE.finditer(html)],
        "id_tags": [(m.group(1).lower(), m.group(2)) for m in _ID_TAG_RE.finditer(html)],
        "html": html,
    }


def reflected_payload(url: str) -> str | None:
    """The q= query parameter a reflecting endpoint would echo, if any."""
    query = parse_qs(urlparse(url).query, keep_blank_values=True)
    values = query.get("q")
    if not values:
        return None
    return values[0]


def build_document(title: str, id_tags: list[tuple[str, str]]) -> Document:
    doc = Document(title=title)
    for tag, element_id in id_tags:
        if tag in ("html", "head", "body", "title", "meta", "script"):
            continue
        doc.body.append_child(Element(tag, id=element_id))
    return doc
