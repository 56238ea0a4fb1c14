"""CPU load signals: pressure readings when available, idle timing otherwise."""

from __future__ import annotations

import asyncio
import time
from dataclasses import dataclass
from typing import Callable, Sequence

#: Nominal idle budget handed to each callback slot, matching the ~50 ms
#: frame-idle ceiling the fallback was designed around.
IDLE_SLOT_BUDGET_MS = 50.0
_SLOT_SLEEP_S = 0.004


def average_idle_ms(remaining_times_ms: Sequence[float]) -> float:
    """Mean remaining idle time per slot; 0.0 with no slots."""
    if not remaining_times_ms:
        return 0.0
    return sum(remaining_times_ms) / len(remaining_times_ms)


async def sample_idle_slots(window_ms: float) -> list[float]:
    """Measure per-slot idle headroom on the running event loop.

    Each slot schedules a short sleep and treats scheduling lateness as
    consumed idle budget: an unloaded loop reports close to the full
    budget, a loop starved by other work reports near zero.
    """
    remaining: list[float] = []
    deadline = time.perf_counter() + window_ms / 1000.0
    while time.perf_counter() < deadline:
        start = time.perf_counter()
        await asyncio.sleep(_SLOT_SLEEP_S)
        lateness_ms = (time.perf_counter() - start - _SLOT_SLEEP_S) * 1000.0
        remaining.append(max(0.0, IDLE_SLOT_BUDGET_MS - max(0.0, lateness_ms)))
    return remaining


@dataclass
class PressureSource:
    """Optional observer-style source: levels sampled once per second.

    ``readings_provider`` is the seam: real deployments would bind the
    platform observer; tests inject synthetic level sequences. When None,
    the interface is treated as unsupported and callers fall back to idle
    sampling.
    """

    readings_provider: Callable[[float], list[str]] | None = None

    @property
    def available(self) -> bool:
        return self.readings_provider is not None

    def observe(self, window_ms: float) -> list[str]:
        if self.readings_provider is None:
            raise RuntimeError("pressure observer interface not available")
        return self.readings_provider(window_ms)
