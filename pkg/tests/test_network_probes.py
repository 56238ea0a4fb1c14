from __future__ import annotations

import asyncio
import socket

import pytest

from webposture.config import RunConfig
from webposture.env import Browser, BrowserProfile, ContentFilter
from webposture.model import TestStatus
from webposture.probes.common import run_descriptors
from webposture.probes.network import (
    TlsEndpointSet,
    descriptors,
    scan_internal_ports_sync,
    test_certificate_validation as run_cert_validation,
)
from webposture.registry import ProbeDescriptor
from webposture.scheduler import run_probe
from webposture.testing import FakeInterceptingProxy


def _config(harness) -> RunConfig:
    return RunConfig.from_manifest(harness.base_url)


def _by_id(results):
    return {r.test_id: r for r in results}


def _run_one(test_id: str, browser, config):
    descriptor = {d.test_id: d for d in descriptors()}[test_id]
    return asyncio.run(run_probe(descriptor, browser, config))


def _endpoint_set(harness) -> TlsEndpointSet:
    host = harness.config.host
    ports = harness.tls_ports
    return TlsEndpointSet(
        expired=f"https://{host}:{ports['expired_untrusted']}/",
        self_signed=f"https://{host}:{ports['self_signed']}/",
        wrong_host=f"https://{host}:{ports['wrong_host']}/",
        untrusted_root=f"https://{host}:{ports['untrusted_root']}/",
    )


class TestCertificateValidation:
    def test_all_defective_listeners_blocked(self, harness, browser):
        results = _by_id(run_cert_validation(_endpoint_set(harness), browser))
        for test_id in ("tls.expired", "tls.self_signed", "tls.wrong_host", "tls.untrusted_root"):
            assert results[test_id].status is TestStatus.PASS, test_id
            assert "refused the connection" in results[test_id].details

    def test_ct_entry_not_applicable_offline(self, harness, browser):
        results = _by_id(run_cert_validation(_endpoint_set(harness), browser))
        assert results["tls.ct"].status is TestStatus.NOT_APPLICABLE

    def test_ct_entry_passes_when_unlogged_endpoint_blocked(self, harness, browser):
        endpoints = _endpoint_set(harness)
        # Stand in for an unlogged certificate with a listener the verifying
        # client rejects: blocked means CT (or chain) enforcement engaged.
        endpoints.no_sct = endpoints.untrusted_root
        results = _by_id(run_cert_validation(endpoints, browser))
        assert results["tls.ct"].status is TestStatus.PASS

    def test_ct_entry_recorded_not_failed_when_engine_accepts(self, harness):
        browser = Browser(
            page_url=harness.base_url + "/",
            profile=BrowserProfile(extra_ca_pem=harness.certs.ca_pem),
        )
        endpoints = _endpoint_set(harness)
        endpoints.no_sct = endpoints.untrusted_root
        results = _by_id(run_cert_validation(endpoints, browser))
        assert results["tls.ct"].status is TestStatus.NOT_APPLICABLE
        assert "does not enforce" in results["tls.ct"].details

    def test_unreachable_endpoint_is_inconclusive(self, harness, browser):
        endpoints = _endpoint_set(harness)
        endpoints.expired = "https://127.0.0.1:1/"
        results = _by_id(run_cert_validation(endpoints, browser))
        assert results["tls.expired"].status is TestStatus.INCONCLUSIVE

    def test_error_categories_with_trusted_ca(self, harness):
        # A verifying client that trusts the ephemeral CA sees the *reason*
        # each profile is defective, not just an untrusted chain.
        from webposture.env.net import TlsError

        browser = Browser(
            page_url=harness.base_url + "/",
            profile=BrowserProfile(extra_ca_pem=harness.certs.ca_pem),
        )
        cases = {
            "expired_untrusted": "expired",
            "self_signed": "self_signed",
            "wrong_host": "hostname_mismatch",
        }
        for profile_name, category in cases.items():
            with pytest.raises(TlsError) as exc:
                browser.fetch(
                    f"https://{harness.config.host}:{harness.tls_ports[profile_name]}/",
                    mode="no-cors",
                )
            assert exc.value.category == category, profile_name


class TestInterceptionCrossCheck:
    def test_without_anomaly_not_applicable(self, harness, browser):
        result = _run_one("tls.interception", browser, _config(harness))
        assert result.status is TestStatus.NOT_APPLICABLE

    def test_proxy_interception_detected(self, harness):
        host = harness.config.host
        port = harness.tls_ports["expired_untrusted"]
        proxy = FakeInterceptingProxy(hosts={host}, ports={port})
        browser = Browser(
            page_url=harness.base_url + "/",
            profile=BrowserProfile(tls_interceptor=proxy),
        )
        config = _config(harness)
        results = _by_id(
            run_descriptors(
                [d for d in descriptors() if d.test_id in ("tls.expired", "tls.interception")],
                browser,
                config,
            )
        )
        assert results["tls.expired"].status is TestStatus.DETECTED
        assert "interception or trust-store" in results["tls.expired"].details
        assert results["tls.interception"].status is TestStatus.DETECTED
        assert "interception proxy present" in results["tls.interception"].details

    def test_trust_store_anomaly_detected(self, harness):
        # Engine trusts the bogus chain outright: fetch succeeds, and the
        # wss cross-check also completes its TLS handshake.
        browser = Browser(
            page_url=harness.base_url + "/",
            profile=BrowserProfile(extra_ca_pem=harness.certs.ca_pem),
        )
        config = _config(harness)
        results = _by_id(
            run_descriptors(
                [d for d in descriptors() if d.test_id in ("tls.untrusted_root", "tls.interception")],
                browser,
                config,
            )
        )
        assert results["tls.untrusted_root"].status is TestStatus.DETECTED
        assert results["tls.interception"].status is TestStatus.DETECTED
        assert "trust store modified" in results["tls.interception"].details


class TestPortScan:
    def test_ground_truth_classification(self, harness, browser):
        findings, _ = scan_internal_ports_sync(
            browser,
            targets=["127.0.0.1"],
            ports=harness.ws_ports + [harness.verified_unbound_port],
            control_port=None,
            calibration_port=harness.verified_unbound_port,
        )
        by_port = {f.port: f for f in findings}
        for port in harness.ws_ports:
            assert by_port[port].classification == "open", port
        assert by_port[harness.verified_unbound_port].classification == "closed"

    def test_http_port_classified_open_via_handshake_answer(self, harness, browser):
        findings, _ = scan_internal_ports_sync(
            browser, ["127.0.0.1"], [harness.primary_port]
        )
        assert findings[0].classification == "open"
        assert "http_response" in findings[0].signal or "handshake" in findings[0].signal

    def test_probe_summary_detects_open_services(self, harness, browser):
        config = _config(harness)
        # ws_ports[0] serves as the scan's known-open control; probe another.
        config.scan_ports = [harness.ws_ports[1], harness.verified_unbound_port]
        result = _run_one("scan.ports", browser, config)
        assert result.status is TestStatus.DETECTED
        assert "responded" in result.details

    def test_clean_loopback_not_detected(self, harness, browser):
        config = _config(harness)
        config.scan_ports = [harness.verified_unbound_port]
        result = _run_one("scan.ports", browser, config)
        assert result.status is TestStatus.NOT_DETECTED

    def test_engine_blocking_scans_is_hardening_pass(self, harness):
        browser = Browser(
            page_url=harness.base_url + "/",
            profile=BrowserProfile(block_local_scan=True),
        )
        config = _config(harness)
        result = _run_one("scan.ports", browser, config)
        assert result.status is TestStatus.PASS
        assert result.details == (
            "Browser blocked internal scan attempt – protective feature detected"
        )

    def test_scan_is_throttled_and_sequential(self, harness, browser):
        import time

        ports = [harness.verified_unbound_port] * 1 + harness.ws_ports[:2]
        t0 = time.perf_counter()
        scan_internal_ports_sync(browser, ["127.0.0.1"], ports, throttle_ms=120)
        elapsed_ms = (time.perf_counter() - t0) * 1000
        assert elapsed_ms >= 2 * 120  # at least throttle_ms between initiations


class TestContentFilterNetwork:
    def test_unfiltered_message_arrives(self, harness, browser):
        result = _run_one("filter.network", browser, _config(harness))
        assert result.status is TestStatus.NOT_DETECTED
        assert result.details == "Blocked content was allowed (filter not present)"

    def test_blocking_filter_error_event(self, harness):
        bait_host = harness.config.host
        browser = Browser(
            page_url=harness.base_url + "/",
            profile=BrowserProfile(
                content_filter=ContentFilter(blocked_hosts={bait_host}, mode="error")
            ),
        )
        config = _config(harness)
        config.harness_base_url = ""  # keep the filter from interfering elsewhere
        result = _run_one("filter.network", browser, config)
        assert result.status is TestStatus.DETECTED
        assert result.details == "Content blocked (error event)"

    def test_stalling_filter_times_out_as_blocked(self, harness):
        from webposture.probes.network import test_content_filter_network

        bait_host = harness.config.host
        browser = Browser(
            page_url=harness.base_url + "/",
            profile=BrowserProfile(
                content_filter=ContentFilter(blocked_hosts={bait_host}, mode="stall")
            ),
        )
        descriptor = ProbeDescriptor(
            "filter.network", "network", "t",
            lambda ctx: test_content_filter_network(ctx, timeout_ms=400),
        )
        config = _config(harness)
        result = asyncio.run(run_probe(descriptor, browser, config))
        assert result.status is TestStatus.DETECTED
        assert result.details == "Content likely blocked (no response)"

    def test_loaded_but_silent_is_inconclusive(self, harness, browser):
        from webposture.probes.network import test_content_filter_network

        descriptor = ProbeDescriptor(
            "filter.network", "network", "t",
            lambda ctx: test_content_filter_network(
                ctx, bait_url=harness.alt_url + "/pages/frame", timeout_ms=300
            ),
        )
        result = asyncio.run(run_probe(descriptor, browser, _config(harness)))
        assert result.status is TestStatus.INCONCLUSIVE


class TestEndpointSetValidation:
    def test_non_https_rejected(self):
        with pytest.raises(ValueError):
            TlsEndpointSet(
                expired="http://x/",
                self_signed="https://x/",
                wrong_host="https://x/",
                untrusted_root="https://x/",
            )
