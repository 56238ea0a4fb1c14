"""The probe battery: one registered descriptor per runnable check."""

from __future__ import annotations

from ..integrity import verify_self_integrity
from ..model import TestStatus
from ..registry import ProbeDescriptor, ProbeRegistry
from ..scheduler import Outcome, ProbeContext
from . import crypto, environment, memory, network, platform, policy


async def _self_integrity(ctx: ProbeContext) -> Outcome:
    expected = getattr(ctx.config, "expected_bundle_digest", None)
    result = verify_self_integrity(expected)
    return Outcome(result.status, result.details, result.evidence)


def core_descriptors() -> list[ProbeDescriptor]:
    return [
        ProbeDescriptor(
            "core.self_integrity", "core", "Agent Self-Integrity", _self_integrity
        )
    ]


def build_default_battery() -> ProbeRegistry:
    registry = ProbeRegistry()
    for descriptor in (
        *policy.descriptors(),
        *memory.descriptors(),
        *crypto.descriptors(),
        *platform.descriptors(),
        *network.descriptors(),
        *environment.descriptors(),
        *core_descriptors(),
    ):
        registry.register(descriptor)
    return registry
