"""Machine-signal sources used by the environment fingerprint probe."""

from __future__ import annotations

import hashlib
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

#: SHA-256 over buffers this large releases the GIL, so spin workers on
#: threads genuinely parallelize across cores.
_SPIN_BUFFER = b"\x5a" * (1 << 20)
_SPIN_ROUNDS = 48

HYPERVISOR_CLOCK_HZ = (10_000_000.0, 3_579_545.0)


def _spin() -> None:
    digest = b""
    for _ in range(_SPIN_ROUNDS):
        digest = hashlib.sha256(_SPIN_BUFFER + digest).digest()


def _timed_batch(workers: int) -> float:
    start = time.perf_counter()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for future in [pool.submit(_spin) for _ in range(workers)]:
            future.result()
    return time.perf_counter() - start


def estimate_worker_cores(candidates: tuple[int, ...] = (1, 2, 4, 8)) -> int:
    """Largest worker count whose wall time stays within 1.5x the solo run."""
    solo = _timed_batch(1)
    estimate = 1
    for n in candidates[1:]:
        if _timed_batch(n) <= 1.5 * solo:
            estimate = n
        else:
            break
    return estimate


def measure_timer_quantum(samples: int = 100_000) -> float:
    """Smallest positive delta between consecutive high-resolution readings (seconds)."""
    best = float("inf")
    previous = time.perf_counter()
    for _ in range(samples):
        now = time.perf_counter()
        delta = now - previous
        if 0.0 < delta < best:
            best = delta
        previous = now
    return best if best != float("inf") else 0.0


def timer_frequency_indicators(quantum_s: float, tolerance: float = 0.01) -> list[float]:
    """Hypervisor clock frequencies within ``tolerance`` of 1/quantum."""
    if quantum_s <= 0.0:
        return []
    freq = 1.0 / quantum_s
    return [f for f in HYPERVISOR_CLOCK_HZ if abs(freq - f) / f <= tolerance]


@dataclass
class HardwareSignals:
    """Fingerprint inputs; every field independently optional/overridable."""

    gl_vendor: str = "Generic GPU Vendor"
    gl_renderer: str = "Generic Discrete GPU Renderer"
    device_memory_gb: float | None = None
    hardware_concurrency: int | None = field(default_factory=os.cpu_count)
    webdriver: bool = False
    #: Test seams; None means "measure for real".
    worker_core_estimate_override: int | None = None
    timer_quantum_override_s: float | None = None

    def worker_core_estimate(self) -> int | None:
        if self.worker_core_estimate_override is not None:
            return self.worker_core_estimate_override
        try:
            return estimate_worker_cores()
        except RuntimeError:
            return None

    def timer_quantum_s(self) -> float:
        if self.timer_quantum_override_s is not None:
            return self.timer_quantum_override_s
        return measure_timer_quantum()
