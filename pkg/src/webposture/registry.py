"""Probe registry: ordered descriptors keyed by stable test ids."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Awaitable, Callable, Iterator

from .model import Polarity

ProbeRunner = Callable[..., Awaitable[Any]]


class RegistrationError(ValueError):
    pass


@dataclass
class ProbeDescriptor:
    test_id: str
    module: str
    title: str
    run: ProbeRunner
    default_budget_ms: float = 10_000.0
    polarity: Polarity = Polarity.ENFORCEMENT
    #: Probes sharing a group run sequentially (shared frames/sentinels).
    sequential_group: str | None = None
    #: Probe must run with no concurrent probes (quiescent scheduler slot).
    exclusive: bool = False
    #: test_id of this probe's control sibling; a non-pass control downgrades
    #: this probe's verdict to inconclusive.
    control_id: str | None = None
    #: This probe is a control for its sequential_group.
    is_control: bool = False


@dataclass
class ProbeRegistry:
    _probes: dict[str, ProbeDescriptor] = field(default_factory=dict)

    def register(self, descriptor: ProbeDescriptor) -> None:
        if descriptor.test_id in self._probes:
            raise RegistrationError(f"test_id already registered: {descriptor.test_id}")
        self._probes[descriptor.test_id] = descriptor

    def __len__(self) -> int:
        return len(self._probes)

    def __contains__(self, test_id: str) -> bool:
        return test_id in self._probes

    def __iter__(self) -> Iterator[ProbeDescriptor]:
        return iter(self._probes.values())

    def get(self, test_id: str) -> ProbeDescriptor:
        try:
            return self._probes[test_id]
        except KeyError:
            raise KeyError(f"unknown test_id: {test_id}") from None

    def ids(self) -> list[str]:
        return list(self._probes)

    def polarities(self) -> dict[str, Polarity]:
        return {tid: d.polarity for tid, d in self._probes.items()}


def default_battery() -> ProbeRegistry:
    """The full built-in battery, in its canonical execution order."""
    from .probes import build_default_battery

    return build_default_battery()


def default_battery_ids() -> list[str]:
    return default_battery().ids()
