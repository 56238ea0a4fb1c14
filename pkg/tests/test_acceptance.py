"""Acceptance criteria, one test per criterion, each printing a verdict line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines as they complete. Timed criteria measure the full default battery
against the live local harness fixture.
"""

from __future__ import annotations

import asyncio
import random
import time

import pytest

from webposture.config import RunConfig
from webposture.env import Browser
from webposture.model import TestStatus
from webposture.probes.crypto import compute_rng_stats, rng_gate
from webposture.probes.memory import LeakProbeParams, analyze_cadence, probe_dom_reference_leak
from webposture.probes.network import scan_internal_ports_sync
from webposture.registry import ProbeDescriptor, default_battery
from webposture.scheduler import run_probe, run_suite
from webposture.serialization import parse_report, serialize_report
from webposture.testing import HolderScript, count_marked_nodes

from tests.test_crypto_probes import brute_force_rng_stats
from tests.test_memory_probes import brute_force_cadence
from tests.test_scoring import EVALUATION_EXCERPT_ROWS, _column
from tests.test_serialization import make_report

SEQUENTIAL_BOUND_S = 300.0
CONCURRENT_BOUND_S = 30.0
TIMED_RUNS = 3

#: Battery rows the enforcement-pattern criterion pins, by probe id.
PATTERN_ROWS = {
    "SOP": ["sop.same_origin", "sop.iframe", "sop.mutate", "sop.cookie", "sop.domain", "sop.hash"],
    "CORS": ["cors.none", "cors.wildcard", "cors.preflight"],
    "CSP": ["csp.inline", "csp.external", "csp.control"],
    "sandbox": ["sandbox.scripts", "sandbox.parent", "sandbox.control"],
    "certificate validation": [
        "tls.expired",
        "tls.self_signed",
        "tls.wrong_host",
        "tls.untrusted_root",
    ],
    "SubtleCrypto roundtrip": ["crypto.roundtrip", "crypto.digest"],
    "algorithm support": ["crypto.alg.aes_gcm", "crypto.alg.rsa_oaep", "crypto.alg.ecdsa"],
    "RNG quality": ["crypto.rng"],
    "SharedArrayBuffer gating": ["sab.gating", "sab.isolated"],
    "autofill guard": ["autofill.silent", "autofill.read_guard"],
    "PAC exposure": ["pac.exposure"],
    "GC cadence": ["memory.gc_cadence"],
    "CPU-load absence": ["cpu.pressure"],
}


def _verdict(name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[ACCEPTANCE] {name}: {status}{suffix}")
    assert ok, f"{name} failed{suffix}"


@pytest.fixture(scope="module")
def timed_runs(harness):
    """3 sequential + 3 concurrent full-battery runs with wall times."""
    runs = {"sequential": [], "concurrent": []}
    for mode, concurrency in (("sequential", 1), ("concurrent", 4)):
        for _ in range(TIMED_RUNS):
            config = RunConfig.from_manifest(harness.base_url, concurrency=concurrency)
            browser = Browser(page_url=harness.base_url + "/")
            t0 = time.perf_counter()
            report = run_suite(config, browser=browser)
            wall = time.perf_counter() - t0
            runs[mode].append((wall, report, browser))
    return runs


def test_acceptance_runtime_envelope(timed_runs):
    sequential = [wall for wall, _, _ in timed_runs["sequential"]]
    concurrent = [wall for wall, _, _ in timed_runs["concurrent"]]
    ok = all(w < SEQUENTIAL_BOUND_S for w in sequential) and all(
        w < CONCURRENT_BOUND_S for w in concurrent
    )
    _verdict(
        "Suite runtime envelope",
        ok,
        f"sequential {[f'{w:.1f}s' for w in sequential]} < {SEQUENTIAL_BOUND_S:.0f}s, "
        f"concurrent {[f'{w:.1f}s' for w in concurrent]} < {CONCURRENT_BOUND_S:.0f}s",
    )


def test_acceptance_enforcement_battery_pattern(timed_runs):
    failures = []
    for mode in ("sequential", "concurrent"):
        _, report, _ = timed_runs[mode][-1]
        statuses = {r.test_id: r.status for r in report.results}
        for row, test_ids in PATTERN_ROWS.items():
            for test_id in test_ids:
                observed = statuses.get(test_id)
                if observed not in (TestStatus.PASS, TestStatus.NOT_DETECTED):
                    failures.append(f"{mode}:{row}:{test_id}={observed and observed.value}")
                if observed is TestStatus.NOT_DETECTED:
                    # These rows are enforcement checks; each must literally pass.
                    failures.append(f"{mode}:{row}:{test_id}=not_detected (expected pass)")
    _verdict(
        "Enforcement battery pattern (exact statuses)",
        not failures,
        "; ".join(failures) if failures else f"{len(PATTERN_ROWS)} rows exact",
    )


def test_acceptance_weakref_leak_oracle(harness):
    params = LeakProbeParams(
        stabilization_ms=20,
        pressure_iterations=6,
        pressure_interval_ms=25,
        pressure_alloc_elements=200_000,
    )
    descriptor = ProbeDescriptor(
        "memory.leak", "memory", "leak",
        lambda ctx: probe_dom_reference_leak(ctx, params),
        default_budget_ms=30_000,
    )

    with_holder = []
    for _ in range(10):
        browser = Browser(page_url=harness.base_url + "/")
        HolderScript().install(browser)
        result = asyncio.run(run_probe(descriptor, browser, RunConfig()))
        with_holder.append(result.status)

    without_holder = []
    for _ in range(10):
        browser = Browser(page_url=harness.base_url + "/")
        result = asyncio.run(run_probe(descriptor, browser, RunConfig()))
        without_holder.append(result.status)

    detected = sum(1 for s in with_holder if s is TestStatus.DETECTED)
    clean_ok = all(
        s in (TestStatus.NOT_DETECTED, TestStatus.INCONCLUSIVE) for s in without_holder
    )
    never_detected = TestStatus.DETECTED not in without_holder
    _verdict(
        "WeakRef leak oracle",
        detected >= 9 and clean_ok and never_detected,
        f"holder detected {detected}/10, clean {[s.value for s in without_holder].count('not_detected')}"
        f"/10 not_detected, never detected without holder: {never_detected}",
    )


def test_acceptance_rng_analyzer_oracle_equivalence():
    rng = random.Random(20260810)
    mismatches = 0
    cases = []
    for _ in range(100):
        buffer = bytes(rng.randrange(256) for _ in range(1024))
        batches = [bytes(rng.randrange(256) for _ in range(256)) for _ in range(8)]
        cases.append((buffer, batches))
    cases.append((b"\x00" * 1024, [b"\x00" * 256] * 8))  # all-zero edge
    identical = bytes(rng.randrange(256) for _ in range(256))
    cases.append((identical * 4, [identical] * 8))  # all-identical edge

    for buffer, batches in cases:
        ours = compute_rng_stats(buffer, batches)
        oracle = brute_force_rng_stats(buffer, batches)
        if (
            ours.zero_pct != oracle.zero_pct
            or ours.sequential_repeats != oracle.sequential_repeats
            or ours.identical_batches != oracle.identical_batches
        ):
            mismatches += 1
            continue
        expected_gate = (
            abs(oracle.zero_pct - 50.0) < 5.0
            and oracle.sequential_repeats <= 10
            and oracle.identical_batches == 0
        )
        if rng_gate(ours) != expected_gate:
            mismatches += 1
    _verdict(
        "RNG analyzer oracle equivalence",
        mismatches == 0,
        f"{len(cases)} cases (100 random + all-zero + all-identical), 0 mismatches"
        if mismatches == 0
        else f"{mismatches} mismatches",
    )


def test_acceptance_port_scan_ground_truth(harness):
    browser = Browser(page_url=harness.base_url + "/")
    open_ports = harness.ws_ports
    unbound = harness.verified_unbound_port
    assert len(open_ports) >= 3
    exact_runs = 0
    for _ in range(5):
        findings, _ = scan_internal_ports_sync(
            browser,
            targets=["127.0.0.1"],
            ports=open_ports + [unbound],
            calibration_port=unbound,
        )
        by_port = {f.port: f.classification for f in findings}
        if all(by_port[p] == "open" for p in open_ports) and by_port[unbound] == "closed":
            exact_runs += 1
    _verdict("Port-scan ground truth", exact_runs == 5, f"{exact_runs}/5 exact runs")


def test_acceptance_score_arithmetic():
    from webposture.scoring import compute_score

    chrome = compute_score(_column("chrome"))
    firefox = compute_score(_column("firefox"))
    ok = (
        chrome.score == 0.64
        and (chrome.applicable, chrome.passed) == (25, 16)
        and firefox.score == 0.68
        and (firefox.applicable, firefox.passed) == (25, 17)
        and len(EVALUATION_EXCERPT_ROWS) == 25
    )
    _verdict(
        "Score arithmetic (published columns)",
        ok,
        f"chrome {chrome.passed}/{chrome.applicable}={chrome.score}, "
        f"firefox {firefox.passed}/{firefox.applicable}={firefox.score}",
    )


def test_acceptance_cadence_analyzer_property():
    rng = random.Random(99)
    worst = 0.0
    flag_failures = 0
    for _ in range(1000):
        n = rng.randint(0, 60)
        timestamps = sorted(rng.uniform(0, 20_000) for _ in range(n))
        ours = analyze_cadence(timestamps)
        oracle = brute_force_cadence(timestamps)
        assert ours.cycles == oracle.cycles
        worst = max(
            worst,
            abs(ours.mean_interval_ms - oracle.mean_interval_ms),
            abs(ours.interval_cv - oracle.interval_cv),
        )
    for _ in range(100):
        n = rng.randint(5, 30)
        spacing = rng.uniform(51, 5000)
        start = rng.uniform(0, 1000)
        equal = [start + i * spacing for i in range(n)]
        if not analyze_cadence(equal).deterministic_flag:
            flag_failures += 1
    _verdict(
        "Cadence analyzer property",
        worst < 1e-9 and flag_failures == 0,
        f"1000 random lists, worst oracle delta {worst:.2e}; "
        f"equal-spacing flag failures {flag_failures}/100",
    )


def test_acceptance_report_round_trip():
    rng = random.Random(31337)
    bad = 0
    for i in range(1000):
        report = make_report(rng, n_results=rng.randint(0, 12))
        text = serialize_report(report)
        again = serialize_report(parse_report(text))
        if text != again:
            bad += 1
    _verdict("Report round-trip byte stability", bad == 0, f"1000 reports, {bad} unstable")


def test_acceptance_cleanup_invariant(timed_runs):
    leftovers = []
    for mode in ("sequential", "concurrent"):
        for _, report, browser in timed_runs[mode]:
            count = count_marked_nodes(browser)
            if count:
                leftovers.append(f"{mode}: {count} marked nodes")
    _verdict(
        "Cleanup invariant (zero marker-attributed nodes)",
        not leftovers,
        "; ".join(leftovers) if leftovers else f"{2 * TIMED_RUNS} full runs clean",
    )


def test_acceptance_battery_registration():
    registry = default_battery()
    ids = registry.ids()
    _verdict(
        "Battery registration (one probe per spec sub-result)",
        len(ids) == len(set(ids)) == 48,
        f"{len(ids)} probes registered",
    )
