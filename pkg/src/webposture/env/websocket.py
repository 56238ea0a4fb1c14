"""Hand-rolled RFC 6455 client: enough for echo checks and port probing.

The port scanner cares about *how* a connection attempt dies, not about
full protocol support: a refused TCP connect, an HTTP answer to the
upgrade, a garbage answer, a clean 101, or silence are all distinct
signals.
"""

from __future__ import annotations

import base64
import os
import socket
import ssl
import time
from dataclasses import dataclass

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


class WebSocketError(Exception):
    pass


@dataclass
class WsAttempt:
    """Outcome of one connection attempt."""

    phase: str  # refused | timeout | handshake_ok | http_response | garbage | reset | tls_error | resolve_error
    latency_ms: float
    detail: str = ""


def _handshake_request(host: str, port: int, path: str = "/") -> tuple[bytes, str]:
    key = base64.b64encode(os.urandom(16)).decode("ascii")
    request = (
        f"GET {path} HTTP/1.1\r\n"
        f"Host: {host}:{port}\r\n"
        "Upgrade: websocket\r\n"
        "Connection: Upgrade\r\n"
        f"Sec-WebSocket-Key: {key}\r\n"
        "Sec-WebSocket-Version: 13\r\n"
        "\r\n"
    )
    return request.encode("ascii"), key


def _read_until_headers_end(sock: socket.socket, limit: int = 16384) -> bytes:
    data = b""
    while b"\r\n\r\n" not in data and len(data) < limit:
        chunk = sock.recv(4096)
        if not chunk:
            break
        data += chunk
    return data


def attempt_handshake(
    host: str,
    port: int,
    timeout_s: float = 3.0,
    tls: bool = False,
    ssl_context: ssl.SSLContext | None = None,
) -> WsAttempt:
    """Try a WebSocket handshake and classify how far it got."""
    start = time.perf_counter()

    def took() -> float:
        return (time.perf_counter() - start) * 1000.0

    try:
        raw = socket.create_connection((host, port), timeout=timeout_s)
    except socket.gaierror as exc:
        return WsAttempt("resolve_error", took(), str(exc))
    except ConnectionRefusedError as exc:
        return WsAttempt("refused", took(), str(exc))
    except (socket.timeout, TimeoutError):
        return WsAttempt("timeout", took(), "no connection within budget")
    except OSError as exc:
        return WsAttempt("refused", took(), str(exc))

    try:
        sock: socket.socket = raw
        if tls:
            ctx = ssl_context or ssl.create_default_context()
            try:
                sock = ctx.wrap_socket(raw, server_hostname=host)
            except ssl.SSLError as exc:
                return WsAttempt("tls_error", took(), str(exc))
        request, _ = _handshake_request(host, port)
        sock.sendall(request)
        try:
            data = _read_until_headers_end(sock)
        except (socket.timeout, TimeoutError):
            return WsAttempt("timeout", took(), "no handshake answer within budget")
        except ConnectionResetError as exc:
            return WsAttempt("reset", took(), str(exc))
        if not data:
            return WsAttempt("reset", took(), "peer closed without answering")
        head = data.split(b"\r\n", 1)[0]
        if head.startswith(b"HTTP/1.1 101") or head.startswith(b"HTTP/1.0 101"):
            return WsAttempt("handshake_ok", took(), head.decode("latin-1"))
        if head.startswith(b"HTTP/"):
            return WsAttempt("http_response", took(), head.decode("latin-1"))
        return WsAttempt("garbage", took(), head[:64].decode("latin-1", "replace"))
    finally:
        try:
            raw.close()
        except OSError:
            pass


class WsClient:
    """Single-connection client for the harness echo listeners."""

    def __init__(
        self,
        host: str,
        port: int,
        timeout_s: float = 5.0,
        tls: bool = False,
        ssl_context: ssl.SSLContext | None = None,
        path: str = "/",
    ):
        raw = socket.create_connection((host, port), timeout=timeout_s)
        if tls:
            ctx = ssl_context or ssl.create_default_context()
            raw = ctx.wrap_socket(raw, server_hostname=host)
        self._sock = raw
        request, _ = _handshake_request(host, port, path)
        self._sock.sendall(request)
        answer = _read_until_headers_end(self._sock)
        if b" 101" not in answer.split(b"\r\n", 1)[0]:
            self._sock.close()
            raise WebSocketError(f"handshake refused: {answer[:80]!r}")

    def send_text(self, message: str) -> None:
        payload = message.encode("utf-8")
        mask = os.urandom(4)
        header = bytearray([0x81])
        n = len(payload)
        if n < 126:
            header.append(0x80 | n)
        elif n < 65536:
            header.append(0x80 | 126)
            header += n.to_bytes(2, "big")
        else:
            header.append(0x80 | 127)
            header += n.to_bytes(8, "big")
        header += mask
        masked = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
        self._sock.sendall(bytes(header) + masked)

    def _read_exact(self, n: int) -> bytes:
        data = b""
        while len(data) < n:
            chunk = self._sock.recv(n - len(data))
            if not chunk:
                raise WebSocketError("connection closed mid-frame")
            data += chunk
        return data

    def recv_text(self) -> str:
        first = self._read_exact(2)
        opcode = first[0] & 0x0F
        masked = bool(first[1] & 0x80)
        length = first[1] & 0x7F
        if length == 126:
            length = int.from_bytes(self._read_exact(2), "big")
        elif length == 127:
            length = int.from_bytes(self._read_exact(8), "big")
        mask = self._read_exact(4) if masked else b""
        payload = self._read_exact(length)
        if masked:
            payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
        if opcode == 0x8:
            raise WebSocketError("peer sent close frame")
        return payload.decode("utf-8")

    def close(self) -> None:
        try:
            self._sock.sendall(bytes([0x88, 0x80]) + os.urandom(4))
        except OSError:
            pass
        finally:
            self._sock.close()
