"""Local test harness: the controlled counterpart for server-cooperative probes.

One process binds the primary/alt/bait HTTP origins (distinct ports on one
host stand in for distinct origins), the WebSocket echo ground-truth
listeners, the deliberately invalid TLS listeners, and the report
collector. /manifest describes every bound port so the probe suite can
self-configure.
"""

from __future__ import annotations

import base64
import hashlib
import json
import socket
import struct
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Any
from urllib.parse import parse_qs, urlparse

import ssl

from ..model import utcnow
from ..serialization import SchemaError, parse_report
from .certs import HarnessCerts, generate_harness_certs

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

FRAME_PAGE = """<!doctype html>
<html><head><title>Harness Frame</title></head>
<body>
<div id="frame-content">cross-origin frame content</div>
<script>document.cookie = "origin_tag={role}; path=/";</script>
</body></html>
"""

CSP_PAGE = """<!doctype html>
<html><head><title>CSP Test Page</title>{meta}</head>
<body><div id="csp-root">policy enforcement target</div></body></html>
"""

ISOLATED_PAGE = """<!doctype html>
<html><head><title>Isolated Page</title></head>
<body><div id="isolated-root">cross-origin isolated context</div></body></html>
"""

SANDBOX_CHILD_PAGE = """<!doctype html>
<html><head><title>Sandbox Child</title></head>
<body>
<script>
function probeParentAccess() { try { void parent.document.title; parent.postMessage("PARENT_ACCESS_OK", "*"); } catch (e) { parent.postMessage("PARENT_ACCESS_BLOCKED", "*"); } }
window.__sandboxSentinel__ = true;
parent.postMessage("CHILD_SCRIPT_RAN", "*");
probeParentAccess();
</script>
</body></html>
"""

BAIT_PAGE = """<!doctype html>
<html><head><title>Bait Frame</title></head>
<body>
<script>parent.postMessage("IFRAME_LOADED", "*");</script>
</body></html>
"""

TLS_PAGE = "<!doctype html><html><head><title>TLS Listener</title></head><body>ok</body></html>"

OK_JS = "window.__cspControl__ = true;\n"
EVIL_JS = "window.__cspExternal__ = true;\n"
PAC_OPEN = 'function FindProxyForURL(url, host) { return "DIRECT"; }\n'


@dataclass
class HarnessConfig:
    host: str = "127.0.0.1"
    primary_port: int = 0
    alt_origin_port: int = 0
    bait_port: int = 0
    open_ws_ports: list[int] = field(default_factory=lambda: [0, 0, 0])
    data_dir: Path = field(default_factory=lambda: Path("harness-data"))
    allowed_report_origin: str | None = None  # default: the primary origin

    def __post_init__(self) -> None:
        explicit = [
            p
            for p in [self.primary_port, self.alt_origin_port, self.bait_port, *self.open_ws_ports]
            if p
        ]
        if len(explicit) != len(set(explicit)):
            raise ValueError("harness ports must be distinct")


class _Counters:
    def __init__(self) -> None:
        self._lock = threading.Lock()
        self.preflights = 0
        self.requests = 0

    def bump(self, preflight: bool) -> None:
        with self._lock:
            if preflight:
                self.preflights += 1
            else:
                self.requests += 1

    def snapshot(self) -> dict[str, int]:
        with self._lock:
            return {"preflights": self.preflights, "requests": self.requests}


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server: "_RoleServer"

    # -- plumbing -----------------------------------------------------------

    def log_message(self, fmt: str, *args: Any) -> None:  # silence
        pass

    def _reply(
        self,
        status: int,
        body: bytes = b"",
        content_type: str = "text/html; charset=utf-8",
        headers: list[tuple[str, str]] | None = None,
    ) -> None:
        self.send_response(status)
        if body or status not in (204, 304):
            self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        for name, value in headers or []:
            self.send_header(name, value)
        self.end_headers()
        if body:
            self.wfile.write(body)

    @property
    def harness(self) -> "Harness":
        return self.server.harness

    @property
    def role(self) -> str:
        return self.server.role

    # -- request dispatch -----------------------------------------------------

    def do_GET(self) -> None:
        self._route("GET")

    def do_PUT(self) -> None:
        self._route("PUT")

    def do_POST(self) -> None:
        self._route("POST")

    def do_OPTIONS(self) -> None:
        self._route("OPTIONS")

    def _route(self, method: str) -> None:
        parsed = urlparse(self.path)
        path = parsed.path
        query = parse_qs(parsed.query, keep_blank_values=True)

        if path.startswith("/cors/"):
            self._cors(method, path)
            return
        if method == "GET":
            if path == "/manifest" and self.role == "primary":
                body = json.dumps(self.harness.manifest()).encode()
                self._reply(200, body, "application/json")
                return
            if path == "/health":
                self._reply(200, b"ok", "text/plain")
                return
            if path == "/pages/frame":
                body = FRAME_PAGE.replace("{role}", self.role).encode()
                self._reply(
                    200, body, headers=[("Set-Cookie", f"origin_tag={self.role}; Path=/")]
                )
                return
            if path == "/pages/csp-strict":
                body = CSP_PAGE.replace("{meta}", "").encode()
                self._reply(
                    200, body, headers=[("Content-Security-Policy", "script-src 'self'")]
                )
                return
            if path == "/pages/csp-meta":
                meta = '<meta http-equiv="Content-Security-Policy" content="script-src \'self\'">'
                self._reply(200, CSP_PAGE.replace("{meta}", meta).encode())
                return
            if path == "/pages/isolated":
                self._reply(
                    200,
                    ISOLATED_PAGE.encode(),
                    headers=[
                        ("Cross-Origin-Opener-Policy", "same-origin"),
                        ("Cross-Origin-Embedder-Policy", "require-corp"),
                    ],
                )
                return
            if path == "/pages/reflect":
                payload = query.get("q", [""])[0]
                body = (
                    "<!doctype html>\n<html><head><title>Reflect</title></head>\n"
                    f'<body><div id="reflection">{payload}</div></body></html>\n'
                ).encode()
                headers = []
                if query.get("xss", ["0"])[0] == "1":
                    headers.append(("X-XSS-Protection", "1; mode=block"))
                if query.get("csp", ["0"])[0] == "1":
                    headers.append(("Content-Security-Policy", "script-src 'none'"))
                self._reply(200, body, headers=headers)
                return
            if path == "/pages/sandbox-child":
                self._reply(200, SANDBOX_CHILD_PAGE.encode())
                return
            if path == "/pages/frame-bait" and self.role == "bait":
                self._reply(200, BAIT_PAGE.encode())
                return
            if path == "/static/ok.js":
                self._reply(200, OK_JS.encode(), "text/javascript")
                return
            if path == "/static/evil.js":
                self._reply(200, EVIL_JS.encode(), "text/javascript")
                return
            if path == "/fixtures/pac-open":
                self._reply(
                    200,
                    PAC_OPEN.encode(),
                    "application/x-ns-proxy-autoconfig",
                    headers=[("Access-Control-Allow-Origin", "*")],
                )
                return
        if method == "POST" and path == "/collect" and self.role == "primary":
            self._collect()
            return
        self._reply(404, b"not found", "text/plain")

    # -- CORS matrix ------------------------------------------------------------

    def _cors(self, method: str, path: str) -> None:
        if path == "/cors/status":
            body = json.dumps(self.harness.counters.snapshot()).encode()
            self._reply(200, body, "application/json")
            return
        if path not in ("/cors/none", "/cors/wildcard", "/cors/allow"):
            self._reply(404, b"not found", "text/plain")
            return

        origin = self.headers.get("Origin", "")
        if method == "OPTIONS":
            self.harness.counters.bump(preflight=True)
            if path == "/cors/allow":
                self._reply(
                    204,
                    headers=[
                        ("Access-Control-Allow-Origin", origin or "*"),
                        ("Access-Control-Allow-Methods", "GET, PUT, OPTIONS"),
                        ("Access-Control-Allow-Headers", "x-probe-token"),
                        ("Access-Control-Max-Age", "0"),
                    ],
                )
            else:
                self._reply(204)
            return

        self.harness.counters.bump(preflight=False)
        body = json.dumps({"endpoint": path, "method": method}).encode()
        if path == "/cors/none":
            self._reply(200, body, "application/json")
        elif path == "/cors/wildcard":
            self._reply(
                200, body, "application/json", headers=[("Access-Control-Allow-Origin", "*")]
            )
        else:  # /cors/allow
            headers = [("Access-Control-Allow-Origin", origin)] if origin else []
            self._reply(200, body, "application/json", headers=headers)

    # -- collector ------------------------------------------------------------

    def _collect(self) -> None:
        origin = self.headers.get("Origin")
        if origin is not None and origin != self.harness.allowed_report_origin:
            self._reply(403, b"origin not allowed", "text/plain")
            return
        length = int(self.headers.get("Content-Length", "0"))
        raw = self.rfile.read(length)
        try:
            parse_report(raw.decode("utf-8"))
        except (SchemaError, UnicodeDecodeError) as exc:
            path = exc.path if isinstance(exc, SchemaError) else "$"
            self._reply(400, path.encode(), "text/plain")
            return
        line = json.dumps(
            {
                "received_at": utcnow().isoformat().replace("+00:00", "Z"),
                "remote_note": f"{self.client_address[0]}:{self.client_address[1]}",
                "report": json.loads(raw.decode("utf-8")),
            },
            ensure_ascii=False,
            separators=(",", ":"),
        )
        self.harness.append_report_line(line)
        self._reply(204)


class _RoleServer(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, harness: "Harness", role: str, host: str, port: int):
        self.harness = harness
        self.role = role
        super().__init__((host, port), _Handler)


class _WsEcho:
    """One-listener WebSocket echo service (ground truth for the scanner)."""

    def __init__(self, host: str, port: int):
        self.sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self.sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self.sock.bind((host, port))
        self.sock.listen(16)
        self.port = self.sock.getsockname()[1]
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._serve, daemon=True)

    def start(self) -> None:
        self._thread.start()

    def _serve(self) -> None:
        while not self._stop.is_set():
            try:
                conn, _ = self.sock.accept()
            except OSError:
                return
            threading.Thread(target=self._handle, args=(conn,), daemon=True).start()

    def _handle(self, conn: socket.socket) -> None:
        conn.settimeout(10)
        try:
            data = b""
            while b"\r\n\r\n" not in data and len(data) < 16384:
                chunk = conn.recv(4096)
                if not chunk:
                    return
                data += chunk
            key = None
            for line in data.split(b"\r\n"):
                if line.lower().startswith(b"sec-websocket-key:"):
                    key = line.split(b":", 1)[1].strip().decode("ascii")
            if key is None:
                conn.sendall(b"HTTP/1.1 400 Bad Request\r\nContent-Length: 0\r\n\r\n")
                return
            accept = base64.b64encode(
                hashlib.sha1((key + _WS_GUID).encode("ascii")).digest()
            ).decode("ascii")
            conn.sendall(
                (
                    "HTTP/1.1 101 Switching Protocols\r\n"
                    "Upgrade: websocket\r\n"
                    "Connection: Upgrade\r\n"
                    f"Sec-WebSocket-Accept: {accept}\r\n\r\n"
                ).encode("ascii")
            )
            self._echo_frames(conn)
        except OSError:
            pass
        finally:
            try:
                conn.close()
            except OSError:
                pass

    def _echo_frames(self, conn: socket.socket) -> None:
        def read_exact(n: int) -> bytes:
            buf = b""
            while len(buf) < n:
                chunk = conn.recv(n - len(buf))
                if not chunk:
                    raise OSError("closed")
                buf += chunk
            return buf

        while True:
            header = read_exact(2)
            opcode = header[0] & 0x0F
            masked = bool(header[1] & 0x80)
            length = header[1] & 0x7F
            if length == 126:
                length = struct.unpack(">H", read_exact(2))[0]
            elif length == 127:
                length = struct.unpack(">Q", read_exact(8))[0]
            mask = read_exact(4) if masked else b""
            payload = read_exact(length)
            if masked:
                payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
            if opcode == 0x8:  # close
                conn.sendall(bytes([0x88, 0x00]))
                return
            if opcode in (0x1, 0x2):
                frame = bytearray([0x80 | opcode])
                if len(payload) < 126:
                    frame.append(len(payload))
                elif len(payload) < 65536:
                    frame.append(126)
                    frame += struct.pack(">H", len(payload))
                else:
                    frame.append(127)
                    frame += struct.pack(">Q", len(payload))
                conn.sendall(bytes(frame) + payload)

    def stop(self) -> None:
        self._stop.set()
        try:
            self.sock.close()
        except OSError:
            pass


class Harness:
    def __init__(self, config: HarnessConfig | None = None):
        self.config = config or HarnessConfig()
        self.counters = _Counters()
        self._report_lock = threading.Lock()
        self._servers: list[_RoleServer] = []
        self._tls_servers: list[ThreadingHTTPServer] = []
        self._ws: list[_WsEcho] = []
        self._threads: list[threading.Thread] = []
        self.certs: HarnessCerts | None = None
        self.verified_unbound_port: int | None = None
        self.tls_ports: dict[str, int] = {}
        self.started = False

    # -- lifecycle -----------------------------------------------------------

    def start(self) -> "Harness":
        cfg = self.config
        cfg.data_dir.mkdir(parents=True, exist_ok=True)
        self.certs = generate_harness_certs(cfg.data_dir, cfg.host)

        for role, port in (
            ("primary", cfg.primary_port),
            ("alt", cfg.alt_origin_port),
            ("bait", cfg.bait_port),
        ):
            server = _RoleServer(self, role, cfg.host, port)
            self._servers.append(server)

        for name, material in self.certs.profiles.items():
            ctx = ssl.SSLContext(ssl.PROTOCOL_TLS_SERVER)
            ctx.load_cert_chain(str(material.cert_path), str(material.key_path))
            server = _RoleServer(self, f"tls:{name}", cfg.host, 0)
            server.socket = ctx.wrap_socket(server.socket, server_side=True)
            self._tls_servers.append(server)
            self.tls_ports[name] = server.server_address[1]

        for port in cfg.open_ws_ports:
            ws = _WsEcho(cfg.host, port)
            self._ws.append(ws)

        # Prove a port is free, then release it: closed-port ground truth.
        probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        probe.bind((cfg.host, 0))
        self.verified_unbound_port = probe.getsockname()[1]
        probe.close()

        for server in [*self._servers, *self._tls_servers]:
            thread = threading.Thread(target=server.serve_forever, daemon=True)
            thread.start()
            self._threads.append(thread)
        for ws in self._ws:
            ws.start()
        self.started = True
        return self

    def stop(self) -> None:
        for server in [*self._servers, *self._tls_servers]:
            server.shutdown()
            server.server_close()
        for ws in self._ws:
            ws.stop()
        self.started = False

    def __enter__(self) -> "Harness":
        return self.start()

    def __exit__(self, *exc: Any) -> None:
        self.stop()

    # -- wiring ---------------------------------------------------------------

    def _port(self, role: str) -> int:
        for server in self._servers:
            if server.role == role:
                return server.server_address[1]
        raise RuntimeError(f"no server for role {role}")

    @property
    def primary_port(self) -> int:
        return self._port("primary")

    @property
    def alt_port(self) -> int:
        return self._port("alt")

    @property
    def bait_port(self) -> int:
        return self._port("bait")

    @property
    def base_url(self) -> str:
        return f"http://{self.config.host}:{self.primary_port}"

    @property
    def alt_url(self) -> str:
        return f"http://{self.config.host}:{self.alt_port}"

    @property
    def bait_url(self) -> str:
        return f"http://{self.config.host}:{self.bait_port}"

    @property
    def allowed_report_origin(self) -> str:
        return self.config.allowed_report_origin or self.base_url

    @property
    def ws_ports(self) -> list[int]:
        return [ws.port for ws in self._ws]

    @property
    def reports_path(self) -> Path:
        return self.config.data_dir / "reports.jsonl"

    def append_report_line(self, line: str) -> None:
        with self._report_lock:
            with open(self.reports_path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")

    def manifest(self) -> dict[str, Any]:
        assert self.certs is not None
        return {
            "primary_port": self.primary_port,
            "alt_origin_port": self.alt_port,
            "bait_port": self.bait_port,
            "open_ws_ports": self.ws_ports,
            "verified_unbound_port": self.verified_unbound_port,
            "tls": dict(self.tls_ports),
            "cert_fingerprints": {
                name: material.fingerprint_sha256
                for name, material in self.certs.profiles.items()
            },
        }
