from __future__ import annotations

import asyncio
import gc
import random

import pytest
from hypothesis import given, settings, strategies as st

from webposture.config import RunConfig
from webposture.env import Browser
from webposture.model import TestStatus
from webposture.probes.memory import (
    BURST_WINDOW_MS,
    GcCadence,
    LeakProbeParams,
    analyze_cadence,
    descriptors,
    measure_gc_cadence,
    probe_dom_reference_leak,
)
from webposture.registry import ProbeDescriptor
from webposture.scheduler import run_probe
from webposture.testing import HolderScript, count_marked_nodes

FAST_PARAMS = LeakProbeParams(
    stabilization_ms=20,
    pressure_iterations=6,
    pressure_interval_ms=25,
    pressure_alloc_elements=200_000,
)


def brute_force_cadence(timestamps: list[float]) -> GcCadence:
    """Independent recomputation: explicit burst walk plus textbook stats."""
    bursts: list[list[float]] = []
    for t in timestamps:
        if bursts and t - bursts[-1][-1] <= BURST_WINDOW_MS:
            bursts[-1].append(t)
        else:
            bursts.append([t])
    starts = [b[0] for b in bursts]
    intervals = [starts[i + 1] - starts[i] for i in range(len(starts) - 1)]
    if intervals:
        mean = sum(intervals) / len(intervals)
    else:
        mean = 0.0
    if len(intervals) >= 2 and mean > 0:
        variance = sum((x - mean) ** 2 for x in intervals) / len(intervals)
        cv = variance**0.5 / mean
    else:
        cv = 0.0
    return GcCadence(
        finalization_times_ms=list(timestamps),
        cycles=len(bursts),
        mean_interval_ms=mean,
        interval_cv=cv,
        deterministic_flag=len(bursts) >= 5 and cv < 0.05,
    )


def _leak_descriptor(params: LeakProbeParams, browser_profile_kwargs=None) -> ProbeDescriptor:
    return ProbeDescriptor(
        test_id="memory.leak",
        module="memory",
        title="leak",
        run=lambda ctx: probe_dom_reference_leak(ctx, params),
        default_budget_ms=30_000,
    )


def _run(descriptor: ProbeDescriptor, browser: Browser):
    return asyncio.run(run_probe(descriptor, browser, RunConfig()))


class TestAnalyzeCadence:
    def test_empty_input(self):
        cadence = analyze_cadence([])
        assert (cadence.cycles, cadence.interval_cv, cadence.deterministic_flag) == (0, 0.0, False)

    def test_fifty_ms_clustering_merges_nearby_timestamps(self):
        cadence = analyze_cadence([100.0, 120.0, 3000.0])
        assert cadence.cycles == 2

    def test_equal_spacing_sets_deterministic_flag(self):
        cadence = analyze_cadence([1000.0, 2000.0, 3000.0, 4000.0, 5000.0, 6000.0])
        assert cadence.cycles == 6
        assert cadence.interval_cv == 0.0
        assert cadence.deterministic_flag is True

    def test_unsorted_input_rejected(self):
        with pytest.raises(ValueError):
            analyze_cadence([5.0, 1.0])

    def test_random_timestamps_match_brute_force_oracle(self):
        rng = random.Random(1234)
        timestamps = sorted(rng.uniform(0, 60_000) for _ in range(1000))
        ours = analyze_cadence(timestamps)
        oracle = brute_force_cadence(timestamps)
        assert ours.cycles == oracle.cycles
        assert abs(ours.mean_interval_ms - oracle.mean_interval_ms) < 1e-9
        assert abs(ours.interval_cv - oracle.interval_cv) < 1e-9

    @settings(max_examples=200)
    @given(
        st.lists(st.floats(min_value=0, max_value=1e6, allow_nan=False), max_size=200)
    )
    def test_property_matches_oracle(self, values):
        timestamps = sorted(values)
        ours = analyze_cadence(timestamps)
        oracle = brute_force_cadence(timestamps)
        assert ours.cycles == oracle.cycles
        assert abs(ours.mean_interval_ms - oracle.mean_interval_ms) <= 1e-9 * max(
            1.0, abs(oracle.mean_interval_ms)
        )
        assert abs(ours.interval_cv - oracle.interval_cv) <= 1e-9 * max(
            1.0, abs(oracle.interval_cv)
        )

    @settings(max_examples=100)
    @given(
        st.lists(
            st.floats(min_value=0, max_value=1e6, allow_nan=False), min_size=2, max_size=100
        ),
        st.floats(min_value=0, max_value=1e7, allow_nan=False),
    )
    def test_shift_invariance(self, values, shift):
        base = sorted(values)
        shifted = [t + shift for t in base]
        a, b = analyze_cadence(base), analyze_cadence(shifted)
        assert a.cycles == b.cycles
        assert abs(a.mean_interval_ms - b.mean_interval_ms) < 1e-6
        assert abs(a.interval_cv - b.interval_cv) < 1e-9


class TestLeakProbe:
    def test_clean_browser_not_detected(self):
        browser = Browser()
        result = _run(_leak_descriptor(FAST_PARAMS), browser)
        assert result.status is TestStatus.NOT_DETECTED
        assert "No unauthorized DOM references detected" in result.details
        assert count_marked_nodes(browser) == 0

    def test_holder_fixture_triggers_detection(self):
        browser = Browser()
        holder = HolderScript()
        holder.install(browser)
        result = _run(_leak_descriptor(FAST_PARAMS), browser)
        assert result.status is TestStatus.DETECTED
        assert "never collected" in result.details
        assert holder.captured, "fixture should have captured the bait"
        holder.release()
        assert count_marked_nodes(browser) == 0

    def test_cyclic_card_form_bait_still_collected(self):
        params = LeakProbeParams(
            bait_kind="card_form",
            stabilization_ms=20,
            pressure_iterations=8,
            pressure_interval_ms=25,
            pressure_alloc_elements=200_000,
        )
        result = _run(_leak_descriptor(params), Browser())
        assert result.status is TestStatus.NOT_DETECTED

    def test_weakref_capability_gate(self):
        browser = Browser()
        browser.profile.weakref_available = False
        result = _run(_leak_descriptor(FAST_PARAMS), browser)
        assert result.status is TestStatus.NOT_APPLICABLE

    def test_no_gc_observed_is_inconclusive_not_detected(self):
        # With the cycle collector off, neither the cyclic bait nor the
        # cyclic canary can be reclaimed: the probe must refuse to call it.
        params = LeakProbeParams(
            bait_kind="card_form",
            stabilization_ms=20,
            pressure_iterations=2,
            pressure_interval_ms=25,
            pressure_alloc_elements=50_000,
        )
        gc.collect()
        gc.disable()
        try:
            result = _run(_leak_descriptor(params), Browser())
        finally:
            gc.enable()
            gc.collect()
        assert result.status is TestStatus.INCONCLUSIVE
        assert "suspicious" in result.details

    def test_param_validation(self):
        with pytest.raises(ValueError):
            LeakProbeParams(pressure_iterations=0)
        with pytest.raises(ValueError):
            LeakProbeParams(stabilization_ms=0)
        with pytest.raises(ValueError):
            LeakProbeParams(bait_kind="poster_frame")


class TestGcCadenceProbe:
    def test_observational_pass_with_evidence(self):
        browser = Browser()
        descriptor = ProbeDescriptor(
            test_id="memory.gc_cadence",
            module="memory",
            title="cadence",
            run=lambda ctx: measure_gc_cadence(ctx, n_objects=500, observation_ms=2000),
            default_budget_ms=10_000,
        )
        result = _run(descriptor, browser)
        assert result.status is TestStatus.PASS
        assert "cycles" in result.evidence

    def test_no_finalizations_reports_no_pressure(self):
        browser = Browser()
        descriptor = ProbeDescriptor(
            test_id="memory.gc_cadence",
            module="memory",
            title="cadence",
            run=lambda ctx: measure_gc_cadence(ctx, n_objects=200, observation_ms=400),
            default_budget_ms=10_000,
        )
        gc.collect()
        gc.disable()
        try:
            result = _run(descriptor, browser)
        finally:
            gc.enable()
            gc.collect()
        assert result.status is TestStatus.PASS
        assert "GC not observed (no pressure)" in result.details


def test_module_descriptors_have_memory_budget():
    for descriptor in descriptors():
        assert descriptor.default_budget_ms == 8000.0
