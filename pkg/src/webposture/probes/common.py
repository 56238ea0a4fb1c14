"""Shared front for running probe families outside the full suite."""

from __future__ import annotations

import asyncio
from typing import Sequence

from ..config import RunConfig
from ..env import Browser
from ..model import TestResult
from ..registry import ProbeDescriptor
from ..scheduler import apply_control_downgrades, run_probe


def run_descriptors(
    descriptors: Sequence[ProbeDescriptor],
    browser: Browser,
    config: RunConfig | None = None,
) -> list[TestResult]:
    """Run a family of probes sequentially and apply control downgrades."""
    config = config or RunConfig()

    async def _go() -> list[TestResult]:
        results = [await run_probe(d, browser, config) for d in descriptors]
        apply_control_downgrades(results, descriptors)
        return results

    return asyncio.run(_go())
