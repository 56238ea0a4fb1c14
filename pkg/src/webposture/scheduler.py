"""Suite execution: budgets, concurrency bound, cleanup enforcement.

One registered probe yields exactly one TestResult. Probes start in
registration order as slots free up (so report order is deterministic),
sequential groups are chained, and exclusive probes get a drained,
quiescent scheduler. Cleanup hooks and DOM-region teardown run on every
exit path, including budget expiry and crashes.
"""

from __future__ import annotations

import asyncio
import time
from dataclasses import dataclass, field
from typing import Any, Awaitable, Callable, Sequence

from . import __version__
from .config import RunConfig
from .env import Browser, Element, PROBE_MARKER_ATTR
from .env.net import FetchError
from .model import (
    LogEntry,
    LogLevel,
    PostureReport,
    TestResult,
    TestStatus,
    utcnow,
)
from .registry import ProbeDescriptor, ProbeRegistry, default_battery
from .scoring import compute_score


@dataclass
class Outcome:
    """What a probe body reports back; the scheduler adds timing and logs."""

    status: TestStatus
    details: str = ""
    evidence: dict[str, str] = field(default_factory=dict)


class ProbeContext:
    """Per-probe handle: logging, timing, DOM region, cleanup registration."""

    def __init__(self, browser: Browser, config: RunConfig, descriptor: ProbeDescriptor):
        self.browser = browser
        self.config = config
        self.descriptor = descriptor
        self.logs: list[LogEntry] = []
        self._start = time.perf_counter()
        self._cleanups: list[Callable[[], None]] = []
        self.region = Element("div", id=f"probe-region-{descriptor.test_id}")
        self.region.attributes[PROBE_MARKER_ATTR] = descriptor.test_id
        browser.document.body.append_child(self.region)

    # -- logging ---------------------------------------------------------------

    def _log(self, level: LogLevel, message: str) -> None:
        at_ms = (time.perf_counter() - self._start) * 1000.0
        self.logs.append(LogEntry(level=level, message=message, at_ms=at_ms))

    def info(self, message: str) -> None:
        self._log(LogLevel.INFO, message)

    def success(self, message: str) -> None:
        self._log(LogLevel.SUCCESS, message)

    def warning(self, message: str) -> None:
        self._log(LogLevel.WARNING, message)

    def error(self, message: str) -> None:
        self._log(LogLevel.ERROR, message)

    # -- plumbing ----------------------------------------------------------------

    async def sleep(self, seconds: float) -> None:
        await asyncio.sleep(seconds)

    async def io(self, fn: Callable[..., Any], *args: Any, **kwargs: Any) -> Any:
        """Run blocking I/O off the event loop."""
        return await asyncio.to_thread(fn, *args, **kwargs)

    def add_cleanup(self, fn: Callable[[], None]) -> None:
        self._cleanups.append(fn)

    def create_element(self, tag: str, **attributes: str) -> Element:
        element = Element(tag, **attributes)
        element.attributes[PROBE_MARKER_ATTR] = self.descriptor.test_id
        return element

    @property
    def budget_ms(self) -> float:
        return self.config.budgets.get(
            self.descriptor.test_id, self.descriptor.default_budget_ms
        )

    def _teardown(self) -> None:
        for fn in reversed(self._cleanups):
            try:
                fn()
            except Exception:
                pass
        self.region.remove()
        # Region removal drops everything parked inside it; anything a probe
        # attached elsewhere still carries the marker, so sweep those too.
        for node in self.browser.document.marked_nodes():
            if node.attributes.get(PROBE_MARKER_ATTR) == self.descriptor.test_id:
                node.remove()


ProbeFn = Callable[[ProbeContext], Awaitable[Outcome]]


async def run_probe(
    descriptor: ProbeDescriptor, browser: Browser, config: RunConfig
) -> TestResult:
    """Execute one probe under its budget with enforced teardown."""
    started_at = utcnow()
    ctx = ProbeContext(browser, config, descriptor)
    t0 = time.perf_counter()
    try:
        try:
            outcome: Outcome = await asyncio.wait_for(
                descriptor.run(ctx), timeout=ctx.budget_ms / 1000.0
            )
            status, details, evidence = outcome.status, outcome.details, outcome.evidence
        except asyncio.TimeoutError:
            status = TestStatus.INCONCLUSIVE
            details = f"Probe budget of {ctx.budget_ms:.0f} ms expired."
            evidence = {}
            ctx.warning(details)
        except asyncio.CancelledError:
            raise
        except Exception as exc:
            status = TestStatus.ERROR
            details = f"{type(exc).__name__}: {exc}"
            evidence = {}
            ctx.error(details)
    finally:
        ctx._teardown()
    duration_ms = (time.perf_counter() - t0) * 1000.0
    return TestResult(
        test_id=descriptor.test_id,
        module=descriptor.module,
        title=descriptor.title,
        status=status,
        details=details,
        evidence=evidence,
        duration_ms=duration_ms,
        started_at=started_at,
        logs=ctx.logs,
    )


def apply_control_downgrades(
    results: list[TestResult], descriptors: Sequence[ProbeDescriptor]
) -> None:
    """Non-pass controls make their siblings' negative verdicts untrustworthy.

    Only absence-based conclusions (pass = "it was blocked", not_detected =
    "nothing happened") depend on the control; positively observed
    violations stand on their own evidence.
    """
    negative = (TestStatus.PASS, TestStatus.NOT_DETECTED)
    by_id = {r.test_id: r for r in results}
    for descriptor in descriptors:
        if descriptor.control_id is None:
            continue
        control = by_id.get(descriptor.control_id)
        result = by_id.get(descriptor.test_id)
        if control is None or result is None:
            continue
        if control.status is TestStatus.PASS:
            continue
        if result.status in negative:
            result.evidence["pre_control_status"] = result.status.value
            result.evidence["control"] = (
                f"control {descriptor.control_id} reported {control.status.value}"
            )
            result.status = TestStatus.INCONCLUSIVE
            result.details += " [downgraded: control check did not pass]"


async def run_suite_async(
    config: RunConfig,
    browser: Browser | None = None,
    registry: ProbeRegistry | None = None,
    on_result: Callable[[TestResult], None] | None = None,
    cancel_event: asyncio.Event | None = None,
) -> PostureReport:
    registry = registry or default_battery()
    if browser is None:
        page_url = (config.harness_base_url.rstrip("/") + "/") if config.harness_base_url else "http://127.0.0.1:1/"
        browser = Browser(page_url=page_url)

    if config.enabled_tests is None:
        enabled = [registry.get(tid) for tid in registry.ids()]
    else:
        enabled = [registry.get(tid) for tid in registry.ids() if tid in config.enabled_tests]

    run_started = utcnow()
    results: dict[str, TestResult] = {}
    order: list[str] = []
    semaphore = asyncio.Semaphore(config.concurrency)
    group_tail: dict[str, asyncio.Task] = {}
    tasks: list[asyncio.Task] = []

    async def execute(descriptor: ProbeDescriptor, predecessor: asyncio.Task | None) -> None:
        if predecessor is not None:
            try:
                await asyncio.shield(predecessor)
            except Exception:
                pass
        if cancel_event is not None and cancel_event.is_set():
            return  # not attempted: stays out of the report
        async with semaphore:
            if cancel_event is not None and cancel_event.is_set():
                return
            result = await run_probe(descriptor, browser, config)
            results[descriptor.test_id] = result
            if on_result is not None:
                on_result(result)

    for descriptor in enabled:
        if cancel_event is not None and cancel_event.is_set():
            break
        order.append(descriptor.test_id)
        if descriptor.exclusive:
            # Quiescent slot: drain everything in flight, run alone.
            if tasks:
                await asyncio.gather(*tasks, return_exceptions=True)
                tasks.clear()
            if cancel_event is not None and cancel_event.is_set():
                continue
            result = await run_probe(descriptor, browser, config)
            results[descriptor.test_id] = result
            if on_result is not None:
                on_result(result)
            continue
        predecessor = (
            group_tail.get(descriptor.sequential_group)
            if descriptor.sequential_group
            else None
        )
        task = asyncio.create_task(execute(descriptor, predecessor))
        tasks.append(task)
        if descriptor.sequential_group:
            group_tail[descriptor.sequential_group] = task

    if tasks:
        await asyncio.gather(*tasks, return_exceptions=True)

    ordered_results = [results[tid] for tid in order if tid in results]
    apply_control_downgrades(ordered_results, enabled)

    report = PostureReport(
        agent_version=__version__,
        user_agent=browser.user_agent,
        secure_context=browser.secure_context,
        cross_origin_isolated=browser.cross_origin_isolated,
        run_started=run_started,
        results=ordered_results,
        score=compute_score(ordered_results, registry.polarities()),
    )

    if config.collector_url:
        submit_report(report, config.collector_url, browser)
    return report


def submit_report(report: PostureReport, collector_url: str, browser: Browser) -> int | None:
    """POST the canonical JSON once; returns the status or None on failure."""
    from .serialization import serialize_report

    body = serialize_report(report).encode("utf-8")
    try:
        response = browser.fetch(
            collector_url,
            method="POST",
            headers={"Content-Type": "application/json"},
            body=body,
        )
        return response.status
    except FetchError:
        return None


def run_suite(
    config: RunConfig,
    browser: Browser | None = None,
    registry: ProbeRegistry | None = None,
    on_result: Callable[[TestResult], None] | None = None,
) -> PostureReport:
    return asyncio.run(run_suite_async(config, browser, registry, on_result))
