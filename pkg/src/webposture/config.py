"""Run configuration: harness endpoints, budgets, enabled probes."""

from __future__ import annotations

import json
import urllib.request
from dataclasses import dataclass, field
from typing import Any
from urllib.parse import urlparse

from .model import Baseline

DEFAULT_SCAN_PORTS = [22, 80, 443, 3389, 5900]
DEFAULT_WPAD_URL = "http://wpad/wpad.dat"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Everything a suite run needs; validated on construction.

    ``enabled_tests=None`` runs the whole registered battery; an explicit
    empty set runs nothing.
    """

    harness_base_url: str = ""
    enabled_tests: set[str] | None = None
    bad_tls_endpoints: dict[str, str] = field(default_factory=dict)
    scan_targets: list[str] = field(default_factory=lambda: ["127.0.0.1"])
    scan_ports: list[int] = field(default_factory=lambda: list(DEFAULT_SCAN_PORTS))
    budgets: dict[str, float] = field(default_factory=dict)
    concurrency: int = 1
    baseline: Baseline | None = None
    collector_url: str | None = None

    # Harness-derived wiring (filled by from_manifest for self-configuration).
    alt_origin_url: str = ""
    bait_origin_url: str = ""
    ws_control_ports: list[int] = field(default_factory=list)
    verified_unbound_port: int | None = None
    wpad_url: str = DEFAULT_WPAD_URL
    #: Reference digest for the self-integrity check; None disables it.
    expected_bundle_digest: str | None = None

    def __post_init__(self) -> None:
        if self.concurrency < 1:
            raise ConfigError("concurrency must be >= 1")
        for test_id, budget in self.budgets.items():
            if budget <= 0:
                raise ConfigError(f"budget for {test_id} must be > 0")
        for port in self.scan_ports:
            if not 1 <= port <= 65535:
                raise ConfigError(f"scan port {port} outside [1, 65535]")
        for name, url in self.bad_tls_endpoints.items():
            scheme = urlparse(url).scheme
            if scheme not in ("https", "wss"):
                raise ConfigError(f"bad_tls_endpoints[{name}] must be https/wss, got {url!r}")

    @classmethod
    def from_manifest(cls, harness_base_url: str, **overrides: Any) -> "RunConfig":
        """Self-configure from the harness's /manifest ports document."""
        base = harness_base_url.rstrip("/")
        with urllib.request.urlopen(f"{base}/manifest", timeout=10) as resp:
            manifest = json.loads(resp.read().decode("utf-8"))
        host = urlparse(base).hostname or "127.0.0.1"
        tls = manifest.get("tls", {})
        bad_tls = {
            "expired": f"https://{host}:{tls['expired_untrusted']}/",
            "self_signed": f"https://{host}:{tls['self_signed']}/",
            "wrong_host": f"https://{host}:{tls['wrong_host']}/",
        }
        if "untrusted_root" in tls:
            bad_tls["untrusted_root"] = f"https://{host}:{tls['untrusted_root']}/"
        kwargs: dict[str, Any] = dict(
            harness_base_url=base,
            alt_origin_url=f"http://{host}:{manifest['alt_origin_port']}",
            bait_origin_url=f"http://{host}:{manifest['bait_port']}",
            ws_control_ports=list(manifest.get("open_ws_ports", [])),
            verified_unbound_port=manifest.get("verified_unbound_port"),
            bad_tls_endpoints=bad_tls,
        )
        kwargs.update(overrides)
        return cls(**kwargs)
