from __future__ import annotations

import asyncio
import json

import pytest

from webposture.config import RunConfig
from webposture.env import Browser
from webposture.model import TestStatus
from webposture.registry import ProbeDescriptor, ProbeRegistry
from webposture.scheduler import Outcome, run_probe, run_suite, run_suite_async
from webposture.testing import count_marked_nodes


def _registry(*descriptors: ProbeDescriptor) -> ProbeRegistry:
    registry = ProbeRegistry()
    for d in descriptors:
        registry.register(d)
    return registry


def _descriptor(test_id: str, fn, **kwargs) -> ProbeDescriptor:
    return ProbeDescriptor(test_id=test_id, module="m", title=test_id, run=fn, **kwargs)


async def _ok(ctx) -> Outcome:
    return Outcome(TestStatus.PASS, "fine")


class TestRunProbe:
    def test_budget_expiry_marks_inconclusive_and_runs_cleanup(self):
        cleaned = []

        async def slow(ctx) -> Outcome:
            ctx.add_cleanup(lambda: cleaned.append(True))
            await asyncio.sleep(10)
            return Outcome(TestStatus.PASS)

        browser = Browser()
        config = RunConfig(budgets={"slow": 80})
        result = asyncio.run(run_probe(_descriptor("slow", slow), browser, config))
        assert result.status is TestStatus.INCONCLUSIVE
        assert "budget" in result.details.lower()
        assert cleaned == [True]
        assert count_marked_nodes(browser) == 0

    def test_probe_exception_becomes_error_result(self):
        async def boom(ctx) -> Outcome:
            raise RuntimeError("kaput")

        result = asyncio.run(run_probe(_descriptor("boom", boom), Browser(), RunConfig()))
        assert result.status is TestStatus.ERROR
        assert "kaput" in result.details

    def test_crashing_probe_leaves_no_marked_nodes(self):
        async def messy(ctx) -> Outcome:
            stray = ctx.create_element("div", id="stray")
            ctx.browser.document.body.append_child(stray)
            raise RuntimeError("mid-probe crash")

        browser = Browser()
        result = asyncio.run(run_probe(_descriptor("messy", messy), browser, RunConfig()))
        assert result.status is TestStatus.ERROR
        assert count_marked_nodes(browser) == 0

    def test_started_at_set_and_duration_measured(self):
        async def nap(ctx) -> Outcome:
            await asyncio.sleep(0.05)
            return Outcome(TestStatus.PASS)

        result = asyncio.run(run_probe(_descriptor("nap", nap), Browser(), RunConfig()))
        assert result.duration_ms >= 45.0
        assert result.started_at.tzinfo is not None


class TestRunSuite:
    def test_zero_enabled_tests_yields_empty_report(self):
        report = run_suite(
            RunConfig(enabled_tests=set()), browser=Browser(), registry=_registry()
        )
        assert report.results == []
        assert (report.score.applicable, report.score.passed) == (0, 0)
        assert report.score.score == 0.0

    def test_single_probe_failure_never_aborts_the_suite(self):
        async def boom(ctx) -> Outcome:
            raise ValueError("nope")

        registry = _registry(_descriptor("a", _ok), _descriptor("b", boom), _descriptor("c", _ok))
        report = run_suite(RunConfig(), browser=Browser(), registry=registry)
        statuses = {r.test_id: r.status for r in report.results}
        assert statuses == {
            "a": TestStatus.PASS,
            "b": TestStatus.ERROR,
            "c": TestStatus.PASS,
        }

    def test_results_follow_registration_order_even_with_concurrency(self):
        async def staggered(delay):
            async def fn(ctx):
                await asyncio.sleep(delay)
                return Outcome(TestStatus.PASS)

            return fn

        descriptors = []
        for i, delay in enumerate([0.2, 0.05, 0.12, 0.01]):
            async def fn(ctx, _d=delay):
                await asyncio.sleep(_d)
                return Outcome(TestStatus.PASS)

            descriptors.append(_descriptor(f"p{i}", fn))
        report = run_suite(
            RunConfig(concurrency=4), browser=Browser(), registry=_registry(*descriptors)
        )
        assert [r.test_id for r in report.results] == ["p0", "p1", "p2", "p3"]

    def test_concurrency_bound_holds(self):
        active = {"now": 0, "peak": 0}

        def make(i):
            async def fn(ctx):
                active["now"] += 1
                active["peak"] = max(active["peak"], active["now"])
                await asyncio.sleep(0.05)
                active["now"] -= 1
                return Outcome(TestStatus.PASS)

            return _descriptor(f"p{i}", fn)

        registry = _registry(*[make(i) for i in range(12)])
        run_suite(RunConfig(concurrency=3), browser=Browser(), registry=registry)
        assert active["peak"] <= 3
        assert active["peak"] >= 2  # it did actually parallelize

    def test_exclusive_probe_runs_alone(self):
        active = {"now": 0, "during_exclusive": []}

        def normal(i):
            async def fn(ctx):
                active["now"] += 1
                await asyncio.sleep(0.05)
                active["now"] -= 1
                return Outcome(TestStatus.PASS)

            return _descriptor(f"n{i}", fn)

        async def exclusive_fn(ctx):
            active["during_exclusive"].append(active["now"])
            await asyncio.sleep(0.02)
            return Outcome(TestStatus.PASS)

        registry = _registry(
            normal(0),
            normal(1),
            _descriptor("solo", exclusive_fn, exclusive=True),
            normal(2),
        )
        run_suite(RunConfig(concurrency=4), browser=Browser(), registry=registry)
        assert active["during_exclusive"] == [0]

    def test_sequential_group_never_overlaps(self):
        trace: list[str] = []

        def member(i):
            async def fn(ctx):
                trace.append(f"start{i}")
                await asyncio.sleep(0.03)
                trace.append(f"end{i}")
                return Outcome(TestStatus.PASS)

            return _descriptor(f"g{i}", fn, sequential_group="grp")

        registry = _registry(*[member(i) for i in range(3)])
        run_suite(RunConfig(concurrency=4), browser=Browser(), registry=registry)
        assert trace == ["start0", "end0", "start1", "end1", "start2", "end2"]

    def test_control_downgrade_applies(self):
        async def failing_control(ctx):
            return Outcome(TestStatus.FAIL, "control broken")

        async def dependent(ctx):
            return Outcome(TestStatus.PASS, "looked fine")

        registry = _registry(
            _descriptor("ctl", failing_control, is_control=True),
            _descriptor("dep", dependent, control_id="ctl"),
        )
        report = run_suite(RunConfig(), browser=Browser(), registry=registry)
        by_id = {r.test_id: r for r in report.results}
        assert by_id["ctl"].status is TestStatus.FAIL
        assert by_id["dep"].status is TestStatus.INCONCLUSIVE
        assert by_id["dep"].evidence["pre_control_status"] == "pass"

    def test_enabled_subset_runs_exactly_that_subset(self):
        registry = _registry(*[_descriptor(f"p{i}", _ok) for i in range(5)])
        report = run_suite(
            RunConfig(enabled_tests={"p1", "p3"}), browser=Browser(), registry=registry
        )
        assert [r.test_id for r in report.results] == ["p1", "p3"]


class TestCollectorSubmission:
    def test_report_posted_exactly_once(self, harness, browser, run_config):
        before = harness.reports_path.read_text().count("\n") if harness.reports_path.exists() else 0
        registry = _registry(_descriptor("only", _ok))
        run_config.enabled_tests = None
        run_config.collector_url = harness.base_url + "/collect"
        asyncio.run(run_suite_async(run_config, browser=browser, registry=registry))
        after = harness.reports_path.read_text().count("\n")
        assert after == before + 1
        line = harness.reports_path.read_text().splitlines()[-1]
        stored = json.loads(line)
        assert stored["report"]["results"][0]["test_id"] == "only"
