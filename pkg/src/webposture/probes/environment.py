"""Environment probes: VM/sandbox fingerprinting, CPU pressure, DOM-level
content-filter bait detection."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..env import MutationObserver
from ..env.hardware import timer_frequency_indicators
from ..env.pressure import average_idle_ms, sample_idle_slots
from ..model import Polarity, TestStatus
from ..registry import ProbeDescriptor
from ..scheduler import Outcome, ProbeContext

_SOFTWARE_RENDERERS = ("microsoft basic render driver", "swiftshader", "llvmpipe")
_VM_DRIVER_RENDERERS = ("vmware", "virtualbox", "vbox", "parallels")


@dataclass
class EnvFingerprint:
    gl_vendor: str = ""
    gl_renderer: str = ""
    device_memory_gb: float | None = None
    hardware_concurrency: int | None = None
    worker_core_estimate: int | None = None
    timer_frequency_hz: float | None = None
    vm_indicators: list[str] = field(default_factory=list)
    vm_suspected: bool = False


@dataclass
class CpuPressureResult:
    mode: str  # pressure_observer | idle_fallback
    peak_level: str | None = None
    avg_idle_ms: float | None = None
    slots: int | None = None
    high_load: bool = False


def evaluate_fingerprint(
    gl_vendor: str,
    gl_renderer: str,
    device_memory_gb: float | None,
    hardware_concurrency: int | None,
    worker_core_estimate: int | None,
    timer_quantum_s: float,
    webdriver: bool,
) -> EnvFingerprint:
    """Pure indicator evaluation; every indicator names its source field."""
    indicators: list[str] = []
    lowered = gl_renderer.lower()
    if any(marker in lowered for marker in _SOFTWARE_RENDERERS):
        indicators.append(f"gl_renderer: software renderer (headless/virtual GPU): {gl_renderer}")
    if any(marker in lowered for marker in _VM_DRIVER_RENDERERS):
        indicators.append(f"gl_renderer: virtualization driver renderer: {gl_renderer}")
    if device_memory_gb is not None and device_memory_gb <= 0.5:
        indicators.append(
            f"device_memory_gb: implausibly low RAM quota ({device_memory_gb} GB)"
        )
    if (
        hardware_concurrency is not None
        and hardware_concurrency <= 2
        and worker_core_estimate is not None
        and worker_core_estimate <= 2
    ):
        indicators.append(
            "hardware_concurrency: low core count confirmed by worker timing "
            f"({hardware_concurrency} reported, {worker_core_estimate} measured)"
        )
    matched = timer_frequency_indicators(timer_quantum_s)
    frequency = 1.0 / timer_quantum_s if timer_quantum_s > 0 else None
    for f in matched:
        indicators.append(
            f"timer_frequency_hz: high-resolution clock near hypervisor frequency {f:.0f} Hz"
        )
    if webdriver:
        indicators.append(
            "webdriver: automation flag present (partial command-line artifact coverage)"
        )
    return EnvFingerprint(
        gl_vendor=gl_vendor,
        gl_renderer=gl_renderer,
        device_memory_gb=device_memory_gb,
        hardware_concurrency=hardware_concurrency,
        worker_core_estimate=worker_core_estimate,
        timer_frequency_hz=frequency,
        vm_indicators=indicators,
        vm_suspected=bool(indicators),
    )


async def fingerprint_environment(ctx: ProbeContext) -> Outcome:
    hw = ctx.browser.profile.hardware
    worker_estimate = await ctx.io(hw.worker_core_estimate)
    quantum = await ctx.io(hw.timer_quantum_s)
    fp = evaluate_fingerprint(
        gl_vendor=hw.gl_vendor,
        gl_renderer=hw.gl_renderer,
        device_memory_gb=hw.device_memory_gb,
        hardware_concurrency=hw.hardware_concurrency,
        worker_core_estimate=worker_estimate,
        timer_quantum_s=quantum,
        webdriver=hw.webdriver,
    )
    evidence = {
        "gl_vendor": fp.gl_vendor,
        "gl_renderer": fp.gl_renderer,
        "device_memory_gb": str(fp.device_memory_gb),
        "hardware_concurrency": str(fp.hardware_concurrency),
        "worker_core_estimate": str(fp.worker_core_estimate),
        "timer_quantum_ns": f"{quantum * 1e9:.1f}",
    }
    for i, indicator in enumerate(fp.vm_indicators):
        evidence[f"indicator.{i}"] = indicator
    if fp.vm_suspected:
        return Outcome(
            TestStatus.DETECTED,
            "Virtualization/sandbox indicators present: "
            + "; ".join(fp.vm_indicators),
            evidence,
        )
    return Outcome(
        TestStatus.NOT_DETECTED, "No virtualization indicators observed.", evidence
    )


async def measure_cpu_pressure(ctx: ProbeContext, window_ms: int = 5000) -> Outcome:
    profile = ctx.browser.profile
    if profile.pressure.available:
        levels = profile.pressure.observe(window_ms)
        peak = "critical" if "critical" in levels else (levels[-1] if levels else "nominal")
        result = CpuPressureResult(
            mode="pressure_observer",
            peak_level=peak,
            high_load="critical" in levels,
        )
        evidence = {
            "mode": result.mode,
            "peak_level": str(result.peak_level),
            "readings": str(len(levels)),
        }
        if result.high_load:
            ctx.error("CPU Pressure: CRITICAL - heavy load detected")
            return Outcome(
                TestStatus.FAIL, "CPU Pressure: CRITICAL - heavy load detected", evidence
            )
        return Outcome(
            TestStatus.PASS, "CPU pressure stayed below critical.", evidence
        )

    if not getattr(profile, "idle_callbacks_available", True):
        return Outcome(
            TestStatus.NOT_APPLICABLE,
            "Neither a pressure observer nor idle callbacks are available.",
        )

    if profile.idle_remaining_provider is not None:
        remaining = profile.idle_remaining_provider(window_ms)
    else:
        remaining = await sample_idle_slots(window_ms)
    avg_idle = average_idle_ms(remaining)
    result = CpuPressureResult(
        mode="idle_fallback",
        avg_idle_ms=avg_idle,
        slots=len(remaining),
        high_load=avg_idle < 10.0,
    )
    evidence = {
        "mode": result.mode,
        "avg_idle_ms": f"{avg_idle:.3f}",
        "slots": str(result.slots),
    }
    if result.high_load:
        ctx.error("High CPU usage detected (low idle time)")
        return Outcome(
            TestStatus.FAIL, "High CPU usage detected (low idle time)", evidence
        )
    return Outcome(
        TestStatus.PASS,
        f"Ample idle headroom ({avg_idle:.1f} ms average per slot).",
        evidence,
    )


# ---------------------------------------------------------------------------
# DOM-level content filtering
# ---------------------------------------------------------------------------

DOM_FILTER_WINDOW_MS = 3000.0


def default_bait_specs() -> list[dict[str, str]]:
    return [
        {"tag": "div", "id": "ads-banner", "text": "Advertisement"},
        {"tag": "img", "id": "tracker-pixel", "src": "/pixel.gif"},
        {"tag": "div", "id": "popup-overlay", "text": "Special offer"},
    ]


async def test_dom_filtering(
    ctx: ProbeContext, bait_specs: list[dict[str, str]] | None = None
) -> Outcome:
    specs = bait_specs or default_bait_specs()
    detections: list[str] = []
    baits = []

    def on_mutations(records) -> None:
        for record in records:
            if record.kind == "childList":
                for node in record.removed:
                    if node in baits:
                        detections.append(f"removed test element #{node.id}")
            elif record.kind == "attributes":
                if record.target in baits and record.attribute_name in ("style", "class", "hidden"):
                    style = record.target.style.replace(" ", "").lower()
                    if "display:none" in style or "visibility:hidden" in style or record.attribute_name == "hidden":
                        detections.append(
                            f"modified attributes of test element #{record.target.id}"
                        )

    observer = MutationObserver(on_mutations)
    observer.observe(ctx.region, child_list=True, attributes=True, subtree=True)
    ctx.add_cleanup(observer.disconnect)

    for spec in specs:
        attrs = {k: v for k, v in spec.items() if k not in ("tag", "text")}
        bait = ctx.create_element(spec.get("tag", "div"), **attrs)
        bait.text = spec.get("text", "")
        baits.append(bait)
        ctx.region.append_child(bait)

    waited = 0.0
    while waited < DOM_FILTER_WINDOW_MS and not detections:
        await ctx.sleep(0.1)
        waited += 100.0
        for bait in baits:
            if not ctx.browser.document.contains(bait) and not any(
                bait.id in d for d in detections
            ):
                detections.append(f"test element missing #{bait.id}")

    # Verdict is fixed before teardown, so our own cleanup never counts.
    observer.disconnect()
    evidence = {"window_ms": str(int(DOM_FILTER_WINDOW_MS))}
    for i, d in enumerate(detections):
        evidence[f"detection.{i}"] = d
    if detections:
        return Outcome(
            TestStatus.DETECTED,
            "DOM content filter active: " + "; ".join(sorted(set(detections))) + ".",
            evidence,
        )
    return Outcome(
        TestStatus.NOT_DETECTED,
        "No DOM filtering detected (test element still present)",
        evidence,
    )


def descriptors() -> list[ProbeDescriptor]:
    mk = ProbeDescriptor
    return [
        mk("env.fingerprint", "environment", "VM/Sandbox Fingerprint",
           fingerprint_environment, polarity=Polarity.DETECTED_IS_BAD),
        mk("cpu.pressure", "environment", "CPU Pressure", measure_cpu_pressure,
           exclusive=True),
        mk("filter.dom", "environment", "DOM Content Filtering", test_dom_filtering,
           polarity=Polarity.DETECTED_IS_GOOD),
    ]
