"""Weak-reference probes: retained-bait detection and collection cadence.

The bait is a decoy sensitive element. Once removed and unreferenced it is
only reachable by whoever secretly captured it; a weak handle polled under
memory pressure tells the two cases apart. A cyclic canary object is the
witness that the collector actually ran, so "still alive" is only damning
once collection has been observed.
"""

from __future__ import annotations

import statistics
import weakref
from dataclasses import dataclass, field

from ..model import Polarity, TestStatus
from ..registry import ProbeDescriptor
from ..scheduler import Outcome, ProbeContext

#: Finalizations closer together than this are one collection burst.
BURST_WINDOW_MS = 50.0


@dataclass
class LeakProbeParams:
    bait_kind: str = "password_input"  # password_input | username_input | card_form
    stabilization_ms: int = 200
    pressure_iterations: int = 10
    pressure_interval_ms: int = 500
    pressure_alloc_elements: int = 1_000_000

    def __post_init__(self) -> None:
        if self.stabilization_ms <= 0 or self.pressure_interval_ms <= 0:
            raise ValueError("durations must be > 0")
        if self.pressure_iterations < 1:
            raise ValueError("pressure_iterations must be >= 1")
        if self.bait_kind not in ("password_input", "username_input", "card_form"):
            raise ValueError(f"unknown bait kind {self.bait_kind!r}")


@dataclass
class GcCadence:
    finalization_times_ms: list[float] = field(default_factory=list)
    cycles: int = 0
    mean_interval_ms: float = 0.0
    interval_cv: float = 0.0
    deterministic_flag: bool = False


def analyze_cadence(timestamps_ms: list[float]) -> GcCadence:
    """Cluster finalization timestamps into bursts and measure regularity.

    Timestamps must be sorted ascending. Consecutive timestamps within
    ``BURST_WINDOW_MS`` of each other merge into one burst; intervals are
    measured between burst starts. The coefficient of variation is 0 when
    fewer than two intervals exist.
    """
    ts = list(timestamps_ms)
    if any(b < a for a, b in zip(ts, ts[1:])):
        raise ValueError("timestamps must be sorted ascending")

    burst_starts: list[float] = []
    previous: float | None = None
    for t in ts:
        if previous is None or t - previous > BURST_WINDOW_MS:
            burst_starts.append(t)
        previous = t

    intervals = [b - a for a, b in zip(burst_starts, burst_starts[1:])]
    mean_interval = sum(intervals) / len(intervals) if intervals else 0.0
    if len(intervals) >= 2 and mean_interval > 0:
        cv = statistics.pstdev(intervals) / mean_interval
    else:
        cv = 0.0
    cycles = len(burst_starts)
    return GcCadence(
        finalization_times_ms=ts,
        cycles=cycles,
        mean_interval_ms=mean_interval,
        interval_cv=cv,
        deterministic_flag=cycles >= 5 and cv < 0.05,
    )


class _Cycle:
    """Self-referencing object: reclaimable only by the cycle collector."""

    def __init__(self) -> None:
        self.loop = self


def _allocate_pressure(alloc_elements: int) -> int:
    # Large flat allocation (the visible pressure) plus enough container
    # churn to tick the generational collector organically.
    data = list(range(alloc_elements))
    churn = [[i] for i in range(max(1000, alloc_elements // 1000))]
    return len(data) + len(churn)


def _build_bait(ctx: ProbeContext, kind: str):
    if kind == "card_form":
        form = ctx.create_element("form", id="test-card-form")
        for name in ("cardnumber", "cvc", "expiry"):
            field_el = ctx.create_element("input", type="text", id=f"test-{name}")
            field_el.value = "sensitive-data"
            form.append_child(field_el)
        return form
    input_type = "password" if kind == "password_input" else "text"
    element_id = "test-password" if kind == "password_input" else "test-username"
    bait = ctx.create_element("input", type=input_type, id=element_id)
    bait.value = "sensitive-data"
    return bait


async def probe_dom_reference_leak(
    ctx: ProbeContext, params: LeakProbeParams | None = None
) -> Outcome:
    params = params or LeakProbeParams()
    if not getattr(ctx.browser.profile, "weakref_available", True):
        return Outcome(
            TestStatus.NOT_APPLICABLE,
            "Weak references / finalization registry not available.",
        )

    collected = {"bait": False, "canary": False}
    bait = _build_bait(ctx, params.bait_kind)
    ctx.region.append_child(bait)  # insertion is what a capturing agent sees
    ctx.info(f"Inserted bait element #{bait.id}")

    bait_ref = weakref.ref(bait)
    weakref.finalize(bait, collected.__setitem__, "bait", True)

    await ctx.sleep(params.stabilization_ms / 1000.0)
    bait.remove()
    bait_id = bait.id
    del bait  # null out the strong reference

    canary = _Cycle()
    weakref.finalize(canary, collected.__setitem__, "canary", True)
    del canary

    rounds_run = 0
    for i in range(params.pressure_iterations):
        rounds_run = i + 1
        await ctx.io(_allocate_pressure, params.pressure_alloc_elements)
        await ctx.sleep(params.pressure_interval_ms / 1000.0)
        if bait_ref() is None or collected["bait"]:
            ctx.success(f'Element "{bait_id}" was garbage collected')
            return Outcome(
                TestStatus.NOT_DETECTED,
                "No unauthorized DOM references detected.",
                {"rounds": str(rounds_run), "gc_observed": str(collected["canary"])},
            )

    if bait_ref() is None or collected["bait"]:
        ctx.success(f'Element "{bait_id}" was garbage collected')
        return Outcome(
            TestStatus.NOT_DETECTED,
            "No unauthorized DOM references detected.",
            {"rounds": str(rounds_run), "gc_observed": str(collected["canary"])},
        )
    if collected["canary"]:
        ctx.error(f'Element "{bait_id}" was never collected despite observed GC')
        return Outcome(
            TestStatus.DETECTED,
            "Bait element was never collected and thus reports a potential "
            "unauthorized reference.",
            {"rounds": str(rounds_run), "gc_observed": "True"},
        )
    return Outcome(
        TestStatus.INCONCLUSIVE,
        "No garbage collection was observed during the window; result is "
        "suspicious rather than a definitive verdict.",
        {"rounds": str(rounds_run), "gc_observed": "False"},
    )


async def measure_gc_cadence(
    ctx: ProbeContext, n_objects: int = 1000, observation_ms: int = 5000
) -> Outcome:
    if not getattr(ctx.browser.profile, "weakref_available", True):
        return Outcome(
            TestStatus.NOT_APPLICABLE, "Finalization registry not available."
        )
    times: list[float] = []
    clock = ctx.browser.now_ms
    t0 = clock()

    def note(_token: object = None) -> None:
        times.append(clock() - t0)

    batch = []
    for _ in range(n_objects):
        obj = _Cycle()
        weakref.finalize(obj, note)
        batch.append(obj)
    batch.clear()

    while clock() - t0 < observation_ms:
        await ctx.io(_allocate_pressure, 100_000)
        await ctx.sleep(0.1)
        if len(times) >= n_objects:
            break

    cadence = analyze_cadence(sorted(times))
    evidence = {
        "finalizations": str(len(times)),
        "cycles": str(cadence.cycles),
        "mean_interval_ms": f"{cadence.mean_interval_ms:.3f}",
        "interval_cv": f"{cadence.interval_cv:.6f}",
        "deterministic": str(cadence.deterministic_flag),
    }
    if cadence.cycles == 0:
        details = "GC not observed (no pressure)"
    elif cadence.deterministic_flag:
        details = (
            f"Observed {cadence.cycles} very regular collection cycles "
            f"(CV {cadence.interval_cv:.4f}); possibly an instrumented environment."
        )
    else:
        details = (
            f"Observed {cadence.cycles} collection cycle(s), mean interval "
            f"{cadence.mean_interval_ms:.0f} ms; timing shows expected variability."
        )
    ctx.info(details)
    return Outcome(TestStatus.PASS, details, evidence)


def descriptors() -> list[ProbeDescriptor]:
    return [
        ProbeDescriptor(
            "memory.leak",
            "memory",
            "WeakRef DOM Leakage",
            probe_dom_reference_leak,
            default_budget_ms=8000.0,
            polarity=Polarity.DETECTED_IS_BAD,
            sequential_group="memory",
        ),
        ProbeDescriptor(
            "memory.gc_cadence",
            "memory",
            "GC Cadence Observation",
            measure_gc_cadence,
            default_budget_ms=8000.0,
            sequential_group="memory",
        ),
    ]
