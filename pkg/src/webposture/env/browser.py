"""The browsing context under assessment.

``Browser`` is the seam between the probe battery and a concrete
environment: a standards-following emulated context whose network I/O is
real. ``BrowserProfile`` carries the hardening knobs; the default profile
behaves like a current mainstream engine, and tests flip individual knobs
to manufacture the misconfigurations the probes must catch.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable
from urllib.parse import urljoin

from .crypto import CryptoProvider
from .csp import CspPolicy, CspViolation
from .dom import Document, Element
from .frames import (
    Frame,
    SecurityError,
    build_document,
    parse_page,
    reflected_payload,
    split_statements,
    _BARE_CALL_STMT,
    _COOKIE_STMT,
    _PARENT_PROBE_STMT,
    _POST_MESSAGE_STMT,
    _SENTINEL_STMT,
)
from .hardware import HardwareSignals
from .net import (
    ContentFilter,
    FetchError,
    NetworkStack,
    Origin,
    Response,
    TlsInterceptor,
)
from .permissions import PermissionStore
from .pressure import PressureSource

DEFAULT_USER_AGENT = "PostureAgent/0.1 (emulated browsing context)"


class NotAllowedError(Exception):
    """The action needed a user gesture (or was otherwise refused)."""


@dataclass
class StoredCredential:
    username: str
    password: str


@dataclass
class BrowserProfile:
    """Behavioral knobs; defaults model a hardened current engine."""

    user_agent: str = DEFAULT_USER_AGENT
    # Policy enforcement
    enforce_sop: bool = True
    enforce_cors: bool = True
    enforce_csp: bool = True
    enforce_sandbox: bool = True
    csp_header_support: bool = True
    allow_document_domain: bool = False
    legacy_xss_filter: bool = False
    # Native feature gating
    sab_requires_isolation: bool = True
    gesture_required: bool = True
    grant_notifications_without_gesture: bool = False
    # Autofill behavior
    stored_credentials: StoredCredential | None = None
    fill_hidden_forms: bool = False
    script_readable_autofill: bool = False
    # Network posture
    extra_ca_pem: str | None = None
    tls_interceptor: TlsInterceptor | None = None
    content_filter: ContentFilter | None = None
    block_local_scan: bool = False
    # Machine signals
    hardware: HardwareSignals = field(default_factory=HardwareSignals)
    pressure: PressureSource = field(default_factory=PressureSource)
    #: Test seam for the idle fallback; None measures the real event loop.
    idle_remaining_provider: Callable[[float], list[float]] | None = None
    # Crypto seam
    rng_source: Callable[[int], bytes] | None = None
    subtle_available: bool = True
    rng_available: bool = True
    # Capability gates exercised by the not_applicable paths
    weakref_available: bool = True
    notifications_available: bool = True
    idle_callbacks_available: bool = True


class NativeFunction:
    """A platform built-in as the stringifier sees it."""

    def __init__(self, name: str, impl: Callable | None = None):
        self.name = name
        self.impl = impl

    def source(self) -> str:
        return f"function {self.name}() {{ [native code] }}"

    def __call__(self, *args, **kwargs):
        if self.impl is None:
            raise NotImplementedError(self.name)
        return self.impl(*args, **kwargs)


#: Canonical built-ins shared by every realm; a fresh realm resolves to the
#: same objects, so identity comparison exposes per-context tampering.
_CANONICAL_NATIVES: dict[str, NativeFunction] = {
    "crypto.getRandomValues": NativeFunction("getRandomValues"),
    "crypto.subtle.digest": NativeFunction("digest"),
    "fetch": NativeFunction("fetch"),
    "WebSocket": NativeFunction("WebSocket"),
}


def pristine_source(fn: object) -> str:
    """Stringify a function the way an untouched realm would."""
    if isinstance(fn, NativeFunction):
        return fn.source()
    name = getattr(fn, "__name__", "") or ""
    return f"function {name}() {{ /* script */ }}"


class Window:
    """A top-level context opened from the main page (e.g. the isolated page)."""

    def __init__(self, browser: "Browser", url: str, response: Response):
        self.url = url
        self.browser = browser
        coop = (response.header("Cross-Origin-Opener-Policy") or "").strip()
        coep = (response.header("Cross-Origin-Embedder-Policy") or "").strip()
        self.cross_origin_isolated = coop == "same-origin" and coep == "require-corp"

    def new_shared_array_buffer(self, byte_length: int) -> bytearray:
        return self.browser._construct_sab(byte_length, self.cross_origin_isolated)

    def atomics_wait_available(self) -> bool:
        return self.cross_origin_isolated


class Browser:
    def __init__(self, page_url: str = "http://127.0.0.1:1/", profile: BrowserProfile | None = None):
        self.profile = profile or BrowserProfile()
        self.page_url = page_url
        self.origin = Origin.from_url(page_url)
        self.document = Document(title="Posture Agent")
        self.network = NetworkStack(
            extra_ca_pem=self.profile.extra_ca_pem,
            interceptor=self.profile.tls_interceptor,
            content_filter=self.profile.content_filter,
        )
        self.permissions = PermissionStore()
        self.crypto = CryptoProvider()
        if self.profile.rng_source is not None:
            self.crypto.source = self.profile.rng_source
        if not self.profile.subtle_available:
            self.crypto.subtle = None
        self.frames: list[Frame] = []
        self.user_gesture_active = False
        self._epoch = time.perf_counter()
        self.cross_origin_isolated = False
        self.realm: dict[str, object] = dict(_CANONICAL_NATIVES)
        self.clipboard_text: str | None = None
        self._document_domain = self.origin.host

    # -- context metadata ----------------------------------------------------

    @property
    def user_agent(self) -> str:
        return self.profile.user_agent

    @property
    def secure_context(self) -> bool:
        return self.origin.is_potentially_trustworthy()

    def now_ms(self) -> float:
        return (time.perf_counter() - self._epoch) * 1000.0

    # -- fetch / websocket ----------------------------------------------------

    def fetch(
        self,
        url: str,
        method: str = "GET",
        headers: dict[str, str] | None = None,
        body: bytes | None = None,
        mode: str = "cors",
        timeout_s: float = 10.0,
    ) -> Response:
        absolute = urljoin(self.page_url, url)
        effective_mode = mode if self.profile.enforce_cors else "no-cors"
        return self.network.fetch(
            absolute,
            method=method,
            headers=headers,
            body=body,
            origin=self.origin,
            mode=effective_mode,
            timeout_s=timeout_s,
        )

    # -- frames ----------------------------------------------------------------

    def create_frame(
        self,
        url: str,
        sandbox: set[str] | None = None,
        hidden: bool = False,
        timeout_s: float = 10.0,
    ) -> Frame:
        absolute = urljoin(self.page_url, url)
        frame = Frame(url=absolute, origin=Origin.from_url(absolute), sandbox=sandbox, hidden=hidden)
        self.frames.append(frame)
        try:
            response = self.network.fetch(
                absolute, origin=self.origin, mode="no-cors", timeout_s=timeout_s
            )
        except FetchError as exc:
            from .net import TimeoutError_

            if isinstance(exc, TimeoutError_):
                frame.load_event = None  # silence: no load, no error
            else:
                frame.load_event = "error"
            frame.load_detail = f"{type(exc).__name__}: {exc}"
            return frame
        self._populate_frame(frame, response)
        return frame

    def _populate_frame(self, frame: Frame, response: Response) -> None:
        page = parse_page(response)
        frame.title = str(page["title"])
        frame.document = build_document(frame.title, page["id_tags"])  # type: ignore[arg-type]
        frame.load_event = "load"

        header_csp = page["header_csp"]
        if header_csp and self.profile.csp_header_support:
            frame.csp = CspPolicy.parse(str(header_csp), source="header")
        elif page["meta_csp"]:
            frame.csp = CspPolicy.parse(str(page["meta_csp"]), source="meta")

        payload = reflected_payload(frame.url)
        inline_scripts: list[str] = list(page["inline_scripts"])  # type: ignore[arg-type]
        if (
            self.profile.legacy_xss_filter
            and page["xss_protection"]
            and payload
            and any(script in payload for script in inline_scripts)
        ):
            # Legacy reflected-script filter: drop scripts echoed from the URL.
            inline_scripts = [s for s in inline_scripts if s not in payload]
            frame.xss_filtered = True

        for script in inline_scripts:
            self.run_inline_script(frame, script, during_load=True)
        for src in page["external_scripts"]:  # type: ignore[union-attr]
            self.inject_external_script(frame, str(src))

    def run_inline_script(self, frame: Frame, code: str, during_load: bool = False) -> bool:
        """Gate then interpret an inline script; returns True when it ran."""
        if not frame.scripts_allowed(self.profile.enforce_sandbox):
            return False
        if frame.csp is not None and self.profile.enforce_csp:
            if not frame.csp.allows_inline_script():
                frame.violations.append(
                    CspViolation("script-src", "inline", frame.csp.source)
                )
                return False
        self._interpret(frame, code)
        return True

    def inject_external_script(self, frame: Frame, src: str, timeout_s: float = 10.0) -> bool:
        absolute = urljoin(frame.url, src)
        if not frame.scripts_allowed(self.profile.enforce_sandbox):
            return False
        if frame.csp is not None and self.profile.enforce_csp:
            if not frame.csp.allows_script_from(absolute, frame.origin):
                frame.violations.append(
                    CspViolation("script-src", absolute, frame.csp.source)
                )
                return False
        try:
            response = self.network.fetch(
                absolute, origin=frame.origin, mode="no-cors", timeout_s=timeout_s
            )
        except FetchError:
            return False
        self._interpret(frame, response.body.decode("utf-8", "replace"))
        return True

    def _interpret(self, frame: Frame, code: str) -> None:
        for stmt in split_statements(code):
            m = _SENTINEL_STMT.match(stmt)
            if m:
                frame.sentinels[m.group(1)] = m.group(2).strip()
                continue
            m = _POST_MESSAGE_STMT.match(stmt)
            if m:
                frame.messages_to_parent.append(m.group(1))
                continue
            if _PARENT_PROBE_STMT.match(stmt):
                allowed = self._frame_may_access_parent(frame)
                frame.messages_to_parent.append(
                    "PARENT_ACCESS_OK" if allowed else "PARENT_ACCESS_BLOCKED"
                )
                continue
            m = _COOKIE_STMT.match(stmt)
            if m and not frame.has_opaque_origin:
                self.network.cookies.set_from_header(frame.origin, m.group(1))
                continue
            m = _BARE_CALL_STMT.match(stmt)
            if m:
                frame.executed_calls.append(f"{m.group(1)}({m.group(2)})")

    def _frame_may_access_parent(self, frame: Frame) -> bool:
        if not self.profile.enforce_sop:
            return True
        if self.profile.enforce_sandbox and frame.has_opaque_origin:
            return False
        return frame.origin == self.origin

    # -- SOP-mediated access to frames -----------------------------------------

    def _may_access_frame(self, frame: Frame) -> bool:
        if not self.profile.enforce_sop:
            return True
        if frame.has_opaque_origin and self.profile.enforce_sandbox:
            return False
        return frame.origin == self.origin

    def frame_title(self, frame: Frame) -> str:
        if not self._may_access_frame(frame):
            raise SecurityError(f"cross-origin access to {frame.origin.serialized()} denied")
        return frame.title

    def frame_append(self, frame: Frame, element: Element) -> None:
        if not self._may_access_frame(frame):
            raise SecurityError(f"cross-origin mutation of {frame.origin.serialized()} denied")
        frame.document.body.append_child(element)

    def frame_location_hash_read(self, frame: Frame) -> str:
        if not self._may_access_frame(frame):
            raise SecurityError("cross-origin location read denied")
        return frame.location_hash

    def frame_location_hash_write(self, frame: Frame, value: str) -> None:
        # Navigation of a child frame is permitted regardless of origin.
        frame.location_hash = value

    def document_cookie(self) -> str:
        return self.network.cookies.cookie_string(self.origin)

    def set_document_domain(self, value: str) -> None:
        if not self.profile.allow_document_domain:
            raise SecurityError("document.domain setter rejected (origin-keyed agent clustering)")
        self._document_domain = value

    def poll_messages(self, frame: Frame) -> list[str]:
        messages = list(frame.messages_to_parent)
        frame.messages_to_parent.clear()
        return messages

    def remove_frame(self, frame: Frame) -> None:
        if frame in self.frames:
            self.frames.remove(frame)

    # -- windows / shared memory ------------------------------------------------

    def open_window(self, url: str, timeout_s: float = 10.0) -> Window:
        absolute = urljoin(self.page_url, url)
        response = self.network.fetch(
            absolute, origin=self.origin, mode="no-cors", timeout_s=timeout_s
        )
        return Window(self, absolute, response)

    def _construct_sab(self, byte_length: int, isolated: bool) -> bytearray:
        if self.profile.sab_requires_isolation and not isolated:
            raise SecurityError(
                "SharedArrayBuffer construction requires a cross-origin isolated context"
            )
        return bytearray(byte_length)

    def new_shared_array_buffer(self, byte_length: int) -> bytearray:
        return self._construct_sab(byte_length, self.cross_origin_isolated)

    def atomics_wait_available(self) -> bool:
        return self.cross_origin_isolated

    # -- gesture-gated surfaces ---------------------------------------------------

    def request_notification_permission(self) -> str:
        current = self.permissions.states.get("notifications", "prompt")
        if not self.user_gesture_active and self.profile.gesture_required:
            if self.profile.grant_notifications_without_gesture:
                self.permissions.set("notifications", "granted")
                return "granted"
            return "default" if current == "prompt" else current
        self.permissions.set("notifications", "granted")
        return "granted"

    def clipboard_write_text(self, text: str) -> None:
        if not self.user_gesture_active and self.profile.gesture_required:
            raise NotAllowedError("clipboard write requires a user gesture")
        self.clipboard_text = text

    # -- autofill -----------------------------------------------------------------

    def autofill_pass(self, form: Element) -> bool:
        """Offer the form to the credential manager; True when it filled."""
        creds = self.profile.stored_credentials
        if creds is None:
            return False
        hidden = self._form_is_hidden(form)
        if hidden and not self.profile.fill_hidden_forms:
            return False
        filled = False
        for node in form.iter_tree():
            if node.tag == "input":
                kind = node.get_attribute("type") or "text"
                if kind == "password":
                    node.value = creds.password
                    node.set_attribute("data-autofilled", "1")
                    filled = True
                elif kind in ("text", "email"):
                    node.value = creds.username
                    node.set_attribute("data-autofilled", "1")
                    filled = True
        return filled

    @staticmethod
    def _form_is_hidden(form: Element) -> bool:
        style = form.style.replace(" ", "").lower()
        if "display:none" in style or "visibility:hidden" in style:
            return True
        for clause in ("left:-", "top:-"):
            if clause in style:
                return True
        return False

    def script_read_value(self, element: Element) -> str:
        """What page script sees when it reads an input's value."""
        if element.get_attribute("data-autofilled") and not self.profile.script_readable_autofill:
            return ""
        return element.value

    # -- extension seam ---------------------------------------------------------

    def install_content_script(self, on_insert: Callable[[Element], None]) -> None:
        self.document.insert_hooks.append(on_insert)
