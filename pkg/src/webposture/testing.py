"""Fixtures for exercising the detection paths.

Shipped in the repo but only ever loaded by tests: a reference-holding
content script to validate the leak probe, a DOM filter that behaves like
an ad blocker, a native-function tamper helper, synthetic byte sources for
the RNG analyzer, and a fake TLS-terminating proxy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .env import Browser, Element, NativeFunction, Response
from .env.dom import PROBE_MARKER_ATTR


@dataclass
class HolderScript:
    """Captures (keeps alive) every element whose id starts with ``test-``."""

    captured: list[Element] = field(default_factory=list)

    def install(self, browser: Browser) -> None:
        browser.install_content_script(self._on_insert)

    def _on_insert(self, element: Element) -> None:
        if element.id.startswith("test-"):
            self.captured.append(element)

    def release(self) -> None:
        self.captured.clear()


@dataclass
class DomFilterScript:
    """Removes or hides bait elements the way a content blocker would."""

    remove_ids: tuple[str, ...] = ("ads-banner",)
    hide_ids: tuple[str, ...] = ()

    def install(self, browser: Browser) -> None:
        browser.install_content_script(self._on_insert)

    def _on_insert(self, element: Element) -> None:
        if element.id in self.remove_ids:
            element.remove()
        elif element.id in self.hide_ids:
            element.set_attribute("style", "display:none")


def tamper_native(browser: Browser, identifier: str) -> None:
    """Wrap a platform built-in with a plain function (marker disappears)."""
    original = browser.realm.get(identifier)

    def wrapped(*args, **kwargs):
        if isinstance(original, NativeFunction):
            return original(*args, **kwargs)
        raise RuntimeError("wrapped nothing")

    wrapped.__name__ = identifier.split(".")[-1]
    browser.realm[identifier] = wrapped


def constant_byte_source(value: int):
    def source(n: int) -> bytes:
        return bytes([value]) * n

    return source


def repeating_batch_source(batch: bytes):
    """Returns the same batch bytes over and over (degenerate generator)."""

    def source(n: int) -> bytes:
        reps = (n + len(batch) - 1) // len(batch)
        return (batch * reps)[:n]

    return source


@dataclass
class FakeInterceptingProxy:
    """TLS-terminating proxy stand-in: fetches succeed with a proxy body,
    raw WebSocket TLS is left alone (so the cross-check sees it fail)."""

    hosts: set[str] = field(default_factory=set)
    ports: set[int] = field(default_factory=set)

    def intercepts(self, host: str, port: int) -> bool:
        return host in self.hosts and (not self.ports or port in self.ports)

    def intercepts_websocket(self, host: str, port: int) -> bool:
        return False

    def respond(self, url: str) -> Response:
        body = b"<html><body>proxied</body></html>"
        return Response(
            url=url,
            status=200,
            headers=[("Content-Type", "text/html"), ("Via", "1.1 fake-proxy")],
            body=body,
        )


def count_marked_nodes(browser: Browser) -> int:
    return sum(
        1
        for node in browser.document.body.iter_tree()
        if PROBE_MARKER_ATTR in node.attributes
    )
