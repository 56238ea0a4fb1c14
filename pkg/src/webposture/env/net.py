"""Browsing-context network stack: real sockets, browser-side enforcement.

Requests go out over real HTTP/TLS; what the caller gets back is filtered
the way a browsing context would filter it (CORS opacity, TLS validation,
content filtering). Every distinguishable failure maps to a typed error so
probes can classify outcomes without string matching.
"""

from __future__ import annotations

import http.client
import socket
import ssl
import time
from dataclasses import dataclass, field
from typing import Callable, Protocol
from urllib.parse import urlparse

DEFAULT_TIMEOUT_S = 10.0

_SIMPLE_METHODS = {"GET", "HEAD", "POST"}
_SIMPLE_HEADERS = {"accept", "accept-language", "content-language"}
_SIMPLE_CONTENT_TYPES = {
    "application/x-www-form-urlencoded",
    "multipart/form-data",
    "text/plain",
}


@dataclass(frozen=True)
class Origin:
    scheme: str
    host: str
    port: int

    @classmethod
    def from_url(cls, url: str) -> "Origin":
        parsed = urlparse(url)
        if not parsed.scheme or parsed.hostname is None:
            raise ValueError(f"cannot derive an origin from {url!r}")
        port = parsed.port or (443 if parsed.scheme in ("https", "wss") else 80)
        return cls(parsed.scheme, parsed.hostname, port)

    def serialized(self) -> str:
        default = 443 if self.scheme in ("https", "wss") else 80
        if self.port == default:
            return f"{self.scheme}://{self.host}"
        return f"{self.scheme}://{self.host}:{self.port}"

    def is_potentially_trustworthy(self) -> bool:
        return self.scheme in ("https", "wss") or self.host in ("localhost", "127.0.0.1", "::1")


class FetchError(Exception):
    """Base for everything a fetch can reject with."""


class NameResolutionError(FetchError):
    pass


class ConnectError(FetchError):
    pass


class TimeoutError_(FetchError):
    pass


class NetworkBlocked(FetchError):
    """A content filter refused the request before it left the stack."""


class CorsError(FetchError):
    """Cross-origin response withheld from the caller."""


class TlsError(FetchError):
    def __init__(self, category: str, message: str):
        self.category = category  # expired | self_signed | hostname_mismatch | untrusted | other
        super().__init__(message)


@dataclass
class Response:
    url: str
    status: int
    headers: list[tuple[str, str]]
    body: bytes

    def header(self, name: str) -> str | None:
        name = name.lower()
        for key, value in self.headers:
            if key.lower() == name:
                return value
        return None

    def header_values(self, name: str) -> list[str]:
        name = name.lower()
        return [v for k, v in self.headers if k.lower() == name]


class CookieJar:
    """Host-scoped cookies; attribute handling limited to what probes need."""

    def __init__(self) -> None:
        self._store: dict[str, dict[str, str]] = {}

    def set_from_header(self, origin: Origin, header_value: str) -> None:
        first = header_value.split(";", 1)[0]
        if "=" not in first:
            return
        name, value = first.split("=", 1)
        self._store.setdefault(origin.serialized(), {})[name.strip()] = value.strip()

    def set(self, origin: Origin, name: str, value: str) -> None:
        self._store.setdefault(origin.serialized(), {})[name] = value

    def cookie_string(self, origin: Origin) -> str:
        pairs = self._store.get(origin.serialized(), {})
        return "; ".join(f"{k}={v}" for k, v in pairs.items())


class TlsInterceptor(Protocol):
    """Stand-in for a TLS-terminating proxy in front of the browser."""

    def intercepts(self, host: str, port: int) -> bool: ...

    def intercepts_websocket(self, host: str, port: int) -> bool: ...

    def respond(self, url: str) -> Response: ...


def classify_tls_error(exc: BaseException) -> TlsError:
    if isinstance(exc, ssl.SSLCertVerificationError):
        code = getattr(exc, "verify_code", None)
        message = getattr(exc, "verify_message", "") or str(exc)
        lowered = message.lower()
        if code == 10 or "expired" in lowered:
            return TlsError("expired", message)
        if code in (18, 19) or "self-signed" in lowered or "self signed" in lowered:
            return TlsError("self_signed", message)
        if (
            code == 62
            or "hostname mismatch" in lowered
            or "ip address mismatch" in lowered
            or "not valid for" in lowered
            or "doesn't match" in lowered
        ):
            return TlsError("hostname_mismatch", message)
        if code in (2, 20, 21, 27) or "unable to get local issuer" in lowered:
            return TlsError("untrusted", message)
        return TlsError("other", message)
    if isinstance(exc, ssl.CertificateError):
        return TlsError("hostname_mismatch", str(exc))
    return TlsError("other", str(exc))


@dataclass
class ContentFilter:
    """Network-level blocklist: 'error' refuses, 'stall' never answers."""

    blocked_hosts: set[str] = field(default_factory=set)
    mode: str = "error"  # "error" | "stall"

    def applies(self, host: str) -> bool:
        return host in self.blocked_hosts


class NetworkStack:
    def __init__(
        self,
        cookie_jar: CookieJar | None = None,
        extra_ca_pem: str | None = None,
        interceptor: TlsInterceptor | None = None,
        content_filter: ContentFilter | None = None,
    ):
        self.cookies = cookie_jar or CookieJar()
        self.extra_ca_pem = extra_ca_pem
        self.interceptor = interceptor
        self.content_filter = content_filter

    # -- TLS ---------------------------------------------------------------

    def ssl_context(self) -> ssl.SSLContext:
        ctx = ssl.create_default_context()
        if self.extra_ca_pem:
            ctx.load_verify_locations(cadata=self.extra_ca_pem)
        return ctx

    # -- fetch ---------------------------------------------------------------

    def fetch(
        self,
        url: str,
        method: str = "GET",
        headers: dict[str, str] | None = None,
        body: bytes | None = None,
        origin: Origin | None = None,
        mode: str = "cors",  # "cors" | "no-cors" | "same-origin"
        timeout_s: float = DEFAULT_TIMEOUT_S,
        preflight_hook: Callable[[], None] | None = None,
    ) -> Response:
        headers = dict(headers or {})
        target = Origin.from_url(url)

        if self.content_filter and self.content_filter.applies(target.host):
            if self.content_filter.mode == "stall":
                time.sleep(timeout_s)
                raise TimeoutError_(f"no response from {target.host}")
            raise NetworkBlocked(f"request to {target.host} blocked by content filter")

        cross_origin = origin is not None and (
            target.scheme,
            target.host,
            target.port,
        ) != (origin.scheme, origin.host, origin.port)

        if cross_origin and mode == "same-origin":
            raise CorsError(f"same-origin mode refused cross-origin fetch of {url}")

        if cross_origin and mode == "cors":
            assert origin is not None
            if self._needs_preflight(method, headers):
                if preflight_hook is not None:
                    preflight_hook()
                self._preflight(url, method, headers, origin, timeout_s)
            headers["Origin"] = origin.serialized()
        elif origin is not None and method.upper() not in ("GET", "HEAD"):
            # Browsers attach Origin to mutating requests even same-origin.
            headers.setdefault("Origin", origin.serialized())

        response = self._raw_request(url, method, headers, body, timeout_s)

        if cross_origin and mode == "cors":
            assert origin is not None
            allow = response.header("Access-Control-Allow-Origin")
            if allow is None or (allow != "*" and allow != origin.serialized()):
                raise CorsError(
                    f"cross-origin response from {url} carries no usable "
                    "Access-Control-Allow-Origin header"
                )
        return response

    @staticmethod
    def _needs_preflight(method: str, headers: dict[str, str]) -> bool:
        if method.upper() not in _SIMPLE_METHODS:
            return True
        for name, value in headers.items():
            lowered = name.lower()
            if lowered in _SIMPLE_HEADERS:
                continue
            if lowered == "content-type":
                if value.split(";")[0].strip().lower() in _SIMPLE_CONTENT_TYPES:
                    continue
                return True
            return True
        return False

    def _preflight(
        self,
        url: str,
        method: str,
        headers: dict[str, str],
        origin: Origin,
        timeout_s: float,
    ) -> None:
        requested = sorted(
            name.lower()
            for name in headers
            if name.lower() not in _SIMPLE_HEADERS and name.lower() != "content-type"
        )
        preflight_headers = {
            "Origin": origin.serialized(),
            "Access-Control-Request-Method": method.upper(),
        }
        if requested:
            preflight_headers["Access-Control-Request-Headers"] = ", ".join(requested)
        response = self._raw_request(url, "OPTIONS", preflight_headers, None, timeout_s)
        if response.status >= 400:
            raise CorsError(f"preflight to {url} answered {response.status}")
        allow_origin = response.header("Access-Control-Allow-Origin")
        if allow_origin is None or (allow_origin != "*" and allow_origin != origin.serialized()):
            raise CorsError("preflight response does not allow this origin")
        allow_methods = (response.header("Access-Control-Allow-Methods") or "").upper()
        if method.upper() not in {m.strip() for m in allow_methods.split(",") if m.strip()}:
            raise CorsError(f"preflight response does not allow method {method.upper()}")
        allowed_headers = {
            h.strip().lower()
            for h in (response.header("Access-Control-Allow-Headers") or "").split(",")
            if h.strip()
        }
        for name in requested:
            if name not in allowed_headers and "*" not in allowed_headers:
                raise CorsError(f"preflight response does not allow header {name}")

    def _raw_request(
        self,
        url: str,
        method: str,
        headers: dict[str, str],
        body: bytes | None,
        timeout_s: float,
    ) -> Response:
        parsed = urlparse(url)
        host = parsed.hostname or ""
        secure = parsed.scheme == "https"
        port = parsed.port or (443 if secure else 80)

        if secure and self.interceptor and self.interceptor.intercepts(host, port):
            return self.interceptor.respond(url)

        target = Origin.from_url(url)
        cookie = self.cookies.cookie_string(target)
        if cookie:
            headers.setdefault("Cookie", cookie)

        path = parsed.path or "/"
        if parsed.query:
            path += "?" + parsed.query
        try:
            if secure:
                conn: http.client.HTTPConnection = http.client.HTTPSConnection(
                    host, port, timeout=timeout_s, context=self.ssl_context()
                )
            else:
                conn = http.client.HTTPConnection(host, port, timeout=timeout_s)
            try:
                conn.request(method.upper(), path, body=body, headers=headers)
                raw = conn.getresponse()
                data = raw.read()
                response = Response(
                    url=url,
                    status=raw.status,
                    headers=list(raw.getheaders()),
                    body=data,
                )
            finally:
                conn.close()
        except socket.gaierror as exc:
            raise NameResolutionError(f"cannot resolve {host}: {exc}") from exc
        except ssl.SSLCertVerificationError as exc:
            raise classify_tls_error(exc) from exc
        except ssl.SSLError as exc:
            raise classify_tls_error(exc) from exc
        except socket.timeout as exc:
            raise TimeoutError_(f"request to {url} timed out") from exc
        except ConnectionError as exc:
            raise ConnectError(f"connection to {host}:{port} failed: {exc}") from exc
        except http.client.HTTPException as exc:
            raise ConnectError(f"invalid HTTP response from {host}:{port}: {exc}") from exc
        except OSError as exc:
            raise ConnectError(f"connection to {host}:{port} failed: {exc}") from exc

        for set_cookie in response.header_values("Set-Cookie"):
            self.cookies.set_from_header(target, set_cookie)
        return response
