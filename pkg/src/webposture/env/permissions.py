"""Permission states and the query/request surfaces."""

from __future__ import annotations

from dataclasses import dataclass, field

DEFAULT_PERMISSION_NAMES = [
    "geolocation",
    "camera",
    "microphone",
    "notifications",
    "clipboard-read",
    "clipboard-write",
    "background-sync",
]

#: Queryable but outside the core audit set; reported as informational only.
EXTRA_QUERYABLE = ["persistent-storage", "autoplay"]


class PermissionQueryError(Exception):
    """The engine does not know this permission name."""


@dataclass
class PermissionStore:
    states: dict[str, str] = field(default_factory=dict)
    supported: set[str] = field(
        default_factory=lambda: set(DEFAULT_PERMISSION_NAMES) | set(EXTRA_QUERYABLE)
    )
    #: When False the whole query interface is absent (legacy engine).
    query_available: bool = True

    def query(self, name: str) -> str:
        if not self.query_available:
            raise PermissionQueryError("permissions query interface not available")
        if name not in self.supported:
            raise PermissionQueryError(f"unknown permission {name!r}")
        return self.states.get(name, "prompt")

    def set(self, name: str, state: str) -> None:
        self.states[name] = state
