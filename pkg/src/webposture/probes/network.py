"""Network probes: invalid-TLS blocking with an interception cross-check,
connection-error port discovery, and network-level content-filter detection."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from urllib.parse import urlparse

from ..env.net import ConnectError, FetchError, TimeoutError_, TlsError
from ..env.websocket import WsAttempt, attempt_handshake
from ..model import Polarity, TestStatus
from ..registry import ProbeDescriptor
from ..scheduler import Outcome, ProbeContext

DEFAULT_FAST_THRESHOLD_MS = 100.0
_THRESHOLD_CLAMP = (50.0, 500.0)

_PORT_RISK_NOTES = {
    22: "SSH",
    80: "HTTP",
    443: "HTTPS",
    3389: "RDP (remote desktop)",
    5900: "VNC (remote desktop)",
    8080: "HTTP proxy / dev server",
}

TLS_PROFILE_ORDER = ["expired", "self_signed", "wrong_host", "untrusted_root"]


@dataclass
class TlsEndpointSet:
    expired: str
    self_signed: str
    wrong_host: str
    untrusted_root: str
    no_sct: str | None = None

    def __post_init__(self) -> None:
        for name in ("expired", "self_signed", "wrong_host", "untrusted_root"):
            url = getattr(self, name)
            scheme = urlparse(url).scheme
            if scheme not in ("https", "wss"):
                raise ValueError(f"{name} endpoint must be https/wss, got {url!r}")

    @classmethod
    def from_config_map(cls, endpoints: dict[str, str]) -> "TlsEndpointSet | None":
        try:
            return cls(
                expired=endpoints["expired"],
                self_signed=endpoints["self_signed"],
                wrong_host=endpoints["wrong_host"],
                untrusted_root=endpoints.get("untrusted_root", endpoints["self_signed"]),
                no_sct=endpoints.get("no_sct"),
            )
        except KeyError:
            return None


@dataclass
class PortFinding:
    host: str
    port: int
    classification: str  # open | closed | filtered_or_blocked | unknown
    error_latency_ms: float
    signal: str = ""

    def summary(self) -> str:
        return f"{self.classification} ({self.error_latency_ms:.1f} ms, {self.signal})"


# ---------------------------------------------------------------------------
# Certificate validation
# ---------------------------------------------------------------------------


def _try_load(ctx: ProbeContext, url: str, timeout_s: float) -> tuple[str, str]:
    """(verdict, detail): blocked | loaded | unreachable, per one channel."""
    try:
        ctx.browser.fetch(url, mode="no-cors", timeout_s=timeout_s)
        return "loaded", "response received"
    except TlsError as exc:
        return "blocked", f"{exc.category}: {exc}"
    except (ConnectError, TimeoutError_) as exc:
        return "unreachable", str(exc)
    except FetchError as exc:
        return "blocked", str(exc)


def _tls_probe(profile_name: str, title_note: str):
    async def run(ctx: ProbeContext) -> Outcome:
        url = ctx.config.bad_tls_endpoints.get(profile_name)
        if not url:
            return Outcome(
                TestStatus.NOT_APPLICABLE,
                f"No {profile_name} endpoint configured.",
            )
        timeout_s = min(ctx.budget_ms / 1000.0 / 2.0, 5.0)
        # Image-load analog plus a fetch: both channels must refuse.
        image_verdict, image_detail = await ctx.io(_try_load, ctx, url, timeout_s)
        fetch_verdict, fetch_detail = await ctx.io(_try_load, ctx, url, timeout_s)
        evidence = {
            "url": url,
            "image_load": f"{image_verdict}: {image_detail}",
            "fetch": f"{fetch_verdict}: {fetch_detail}",
        }
        if "unreachable" in (image_verdict, fetch_verdict):
            return Outcome(
                TestStatus.INCONCLUSIVE,
                "Endpoint unreachable at the TCP level; cannot distinguish "
                "blocking from absence.",
                evidence,
            )
        if "loaded" in (image_verdict, fetch_verdict):
            host = urlparse(url).hostname or ""
            port = urlparse(url).port or 443
            ctx.browser.__dict__.setdefault("_tls_anomalies", []).append((host, port))
            ctx.error(f"{title_note} certificate was accepted; cross-check scheduled.")
            return Outcome(
                TestStatus.DETECTED,
                "Connection succeeded despite an invalid certificate: possible "
                "interception or trust-store modification.",
                evidence,
            )
        ctx.success(f"{title_note} Certificate Test: PASSED (browser refused the connection)")
        return Outcome(
            TestStatus.PASS,
            f"{title_note} certificate was rejected (browser refused the connection).",
            evidence,
        )

    return run


async def certificate_transparency(ctx: ProbeContext) -> Outcome:
    url = ctx.config.bad_tls_endpoints.get("no_sct")
    if not url:
        return Outcome(
            TestStatus.NOT_APPLICABLE,
            "No unlogged-certificate endpoint available (offline harness).",
        )
    verdict, detail = await ctx.io(_try_load, ctx, url, 5.0)
    evidence = {"url": url, "fetch": f"{verdict}: {detail}"}
    if verdict == "blocked":
        return Outcome(
            TestStatus.PASS, "Unlogged certificate was rejected (CT enforced).", evidence
        )
    if verdict == "unreachable":
        return Outcome(TestStatus.INCONCLUSIVE, "CT endpoint unreachable.", evidence)
    return Outcome(
        TestStatus.NOT_APPLICABLE,
        "Engine does not enforce certificate transparency; behavior recorded.",
        evidence,
    )


async def detect_tls_interception(ctx: ProbeContext, host: str | None = None) -> Outcome:
    anomalies = getattr(ctx.browser, "_tls_anomalies", [])
    if host is None:
        if not anomalies:
            return Outcome(
                TestStatus.NOT_APPLICABLE,
                "No unexpected TLS success occurred; cross-check not triggered.",
            )
        host, port = anomalies[0]
    else:
        port = 443
        for known_host, known_port in anomalies:
            if known_host == host:
                port = known_port
    attempt = await ctx.io(
        attempt_handshake,
        host,
        port,
        3.0,
        True,
        ctx.browser.network.ssl_context(),
    )
    evidence = {"host": f"{host}:{port}", "wss_phase": attempt.phase, "detail": attempt.detail}
    if attempt.phase in ("tls_error", "reset"):
        return Outcome(
            TestStatus.DETECTED,
            "Plain fetch succeeded but the secure WebSocket failed: TLS "
            "interception proxy present.",
            evidence,
        )
    return Outcome(
        TestStatus.DETECTED,
        "Both channels accepted the invalid certificate: trust store modified "
        "or permissive validation; flag for IT.",
        evidence,
    )


# ---------------------------------------------------------------------------
# Port scan
# ---------------------------------------------------------------------------


def classify_attempt(attempt: WsAttempt, fast_threshold_ms: float) -> str:
    if attempt.phase in ("handshake_ok", "http_response", "garbage"):
        return "open"
    if attempt.phase == "reset":
        # Connected then slammed shut: something answered the TCP handshake.
        return "open"
    if attempt.phase == "refused":
        return "closed"
    if attempt.phase in ("timeout", "tls_error"):
        return "filtered_or_blocked"
    return "unknown"


def scan_internal_ports_sync(
    browser,
    targets: list[str],
    ports: list[int],
    per_probe_timeout_ms: int = 3000,
    throttle_ms: int = 150,
    control_port: int | None = None,
    calibration_port: int | None = None,
) -> tuple[list[PortFinding], dict[str, str]]:
    """Sequential throttled sweep; returns findings plus scan metadata."""
    meta: dict[str, str] = {}
    threshold = DEFAULT_FAST_THRESHOLD_MS
    blocked = getattr(browser.profile, "block_local_scan", False)

    def probe(host: str, port: int) -> WsAttempt:
        if blocked:
            return WsAttempt("refused", 0.1, "blocked by engine policy")
        return attempt_handshake(host, port, per_probe_timeout_ms / 1000.0)

    if calibration_port is not None and not blocked:
        baseline = attempt_handshake(targets[0] if targets else "127.0.0.1", calibration_port, 1.0)
        if baseline.phase == "refused":
            threshold = min(max(3.0 * baseline.latency_ms, _THRESHOLD_CLAMP[0]), _THRESHOLD_CLAMP[1])
        meta["calibrated_threshold_ms"] = f"{threshold:.1f}"

    pairs: list[tuple[str, int]] = []
    non_loopback = 0
    for host in targets:
        loopback = host in ("127.0.0.1", "localhost", "::1")
        for port in ports:
            if not loopback:
                non_loopback += 1
                if non_loopback > 32:
                    continue  # LAN sweep cap
            pairs.append((host, port))
    if control_port is not None:
        pairs.append((targets[0] if targets else "127.0.0.1", control_port))

    findings: list[PortFinding] = []
    last_start = 0.0
    for host, port in pairs:
        wait = (last_start + throttle_ms / 1000.0) - time.perf_counter()
        if wait > 0 and findings:
            time.sleep(wait)
        last_start = time.perf_counter()
        attempt = probe(host, port)
        findings.append(
            PortFinding(
                host=host,
                port=port,
                classification=classify_attempt(attempt, threshold),
                error_latency_ms=attempt.latency_ms,
                signal=f"{attempt.phase}: {attempt.detail}"[:120],
            )
        )
    meta["threshold_ms"] = f"{threshold:.1f}"
    return findings, meta


async def scan_internal_ports(
    ctx: ProbeContext,
    targets: list[str] | None = None,
    ports: list[int] | None = None,
    per_probe_timeout_ms: int = 3000,
    throttle_ms: int = 150,
) -> Outcome:
    targets = targets or ctx.config.scan_targets
    ports = ports or ctx.config.scan_ports
    control_port = (
        ctx.config.ws_control_ports[0] if ctx.config.ws_control_ports else None
    )
    findings, meta = await ctx.io(
        scan_internal_ports_sync,
        ctx.browser,
        targets,
        ports,
        per_probe_timeout_ms,
        throttle_ms,
        control_port,
        ctx.config.verified_unbound_port,
    )
    evidence = dict(meta)
    for finding in findings:
        evidence[f"{finding.host}:{finding.port}"] = finding.summary()

    control_dead = control_port is not None and all(
        f.classification != "open" for f in findings if f.port == control_port
    )
    instant_uniform = all(
        f.classification in ("closed", "filtered_or_blocked") and f.error_latency_ms < 5.0
        for f in findings
    )
    if control_port is not None and control_dead and instant_uniform:
        return Outcome(
            TestStatus.PASS,
            "Browser blocked internal scan attempt – protective feature detected",
            evidence,
        )

    open_findings = [
        f for f in findings if f.classification == "open" and f.port != control_port
    ]
    if open_findings:
        notes = []
        for f in open_findings:
            service = _PORT_RISK_NOTES.get(f.port, "unidentified service")
            notes.append(f"Port {f.port} on {f.host} responded ({service})")
            ctx.warning(notes[-1])
        return Outcome(
            TestStatus.DETECTED,
            "Reachable internal services: " + "; ".join(notes) + ".",
            evidence,
        )
    return Outcome(
        TestStatus.NOT_DETECTED,
        "No internal services were reachable from web content.",
        evidence,
    )


# ---------------------------------------------------------------------------
# Network-level content filter
# ---------------------------------------------------------------------------


async def test_content_filter_network(
    ctx: ProbeContext, bait_url: str | None = None, timeout_ms: int = 5000
) -> Outcome:
    if bait_url is None:
        if not ctx.config.bait_origin_url:
            return Outcome(
                TestStatus.INCONCLUSIVE,
                "No bait origin configured; probe needs the harness.",
            )
        bait_url = ctx.config.bait_origin_url + "/pages/frame-bait"
    frame = await ctx.io(
        ctx.browser.create_frame, bait_url, None, True, timeout_ms / 1000.0
    )
    ctx.add_cleanup(lambda: ctx.browser.remove_frame(frame))
    evidence = {"bait_url": bait_url, "load_event": str(frame.load_event)}

    if frame.load_event == "error":
        return Outcome(
            TestStatus.DETECTED, "Content blocked (error event)", evidence
        )
    if frame.load_event is None:
        return Outcome(
            TestStatus.DETECTED, "Content likely blocked (no response)", evidence
        )
    # Loaded: wait briefly for the handshake message.
    waited = 0.0
    messages: list[str] = []
    while waited <= timeout_ms:
        messages += ctx.browser.poll_messages(frame)
        if "IFRAME_LOADED" in messages:
            return Outcome(
                TestStatus.NOT_DETECTED,
                "Blocked content was allowed (filter not present)",
                evidence,
            )
        await ctx.sleep(0.05)
        waited += 50.0
    evidence["messages"] = ", ".join(messages) or "(none)"
    return Outcome(
        TestStatus.INCONCLUSIVE,
        "Bait frame loaded but its script never reported: loaded but script "
        "suppressed.",
        evidence,
    )


# ---------------------------------------------------------------------------
# Descriptors and operation fronts
# ---------------------------------------------------------------------------


def descriptors() -> list[ProbeDescriptor]:
    mk = ProbeDescriptor
    # The interception cross-check consumes anomalies the certificate
    # probes record, so the TLS family is chained even under concurrency.
    items = [
        mk("tls.expired", "network", "Expired Certificate Blocking",
           _tls_probe("expired", "Expired"), polarity=Polarity.DETECTED_IS_BAD,
           sequential_group="tls"),
        mk("tls.self_signed", "network", "Self-Signed Certificate Blocking",
           _tls_probe("self_signed", "Self-signed"), polarity=Polarity.DETECTED_IS_BAD,
           sequential_group="tls"),
        mk("tls.wrong_host", "network", "Wrong-Host Certificate Blocking",
           _tls_probe("wrong_host", "Wrong-host"), polarity=Polarity.DETECTED_IS_BAD,
           sequential_group="tls"),
        mk("tls.untrusted_root", "network", "Untrusted-Root Certificate Blocking",
           _tls_probe("untrusted_root", "Untrusted-root"), polarity=Polarity.DETECTED_IS_BAD,
           sequential_group="tls"),
        mk("tls.ct", "network", "Certificate Transparency Enforcement",
           certificate_transparency, sequential_group="tls"),
        mk("tls.interception", "network", "TLS Interception Cross-Check",
           detect_tls_interception, polarity=Polarity.DETECTED_IS_BAD,
           sequential_group="tls"),
        mk("scan.ports", "network", "Internal Port Scan", scan_internal_ports,
           default_budget_ms=20_000.0, polarity=Polarity.DETECTED_IS_BAD),
        mk("filter.network", "network", "Network Content Filtering",
           test_content_filter_network, polarity=Polarity.DETECTED_IS_GOOD),
    ]
    return items


def test_certificate_validation(endpoints: TlsEndpointSet, browser, config=None):
    from ..config import RunConfig
    from .common import run_descriptors

    config = config or RunConfig()
    config.bad_tls_endpoints = {
        "expired": endpoints.expired,
        "self_signed": endpoints.self_signed,
        "wrong_host": endpoints.wrong_host,
        "untrusted_root": endpoints.untrusted_root,
    }
    if endpoints.no_sct:
        config.bad_tls_endpoints["no_sct"] = endpoints.no_sct
    family = [d for d in descriptors() if d.test_id.startswith(("tls.expired", "tls.self", "tls.wrong", "tls.untrusted", "tls.ct"))]
    return run_descriptors(family, browser, config)
