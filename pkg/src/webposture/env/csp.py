"""Content-Security-Policy evaluation for script sources.

Only the slice the probes exercise: script-src / default-src with 'self',
'unsafe-inline', '*', and explicit origin entries.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .net import Origin


@dataclass
class CspPolicy:
    directives: dict[str, list[str]] = field(default_factory=dict)
    source: str = "header"  # "header" | "meta"

    @classmethod
    def parse(cls, policy_text: str, source: str = "header") -> "CspPolicy":
        directives: dict[str, list[str]] = {}
        for part in policy_text.split(";"):
            tokens = part.strip().split()
            if tokens:
                directives[tokens[0].lower()] = tokens[1:]
        return cls(directives=directives, source=source)

    def _script_sources(self) -> list[str] | None:
        if "script-src" in self.directives:
            return self.directives["script-src"]
        return self.directives.get("default-src")

    def allows_inline_script(self) -> bool:
        sources = self._script_sources()
        if sources is None:
            return True
        return "'unsafe-inline'" in sources

    def allows_script_from(self, script_url: str, page_origin: Origin) -> bool:
        sources = self._script_sources()
        if sources is None:
            return True
        try:
            script_origin = Origin.from_url(script_url)
        except ValueError:
            return False
        for entry in sources:
            if entry == "*":
                return True
            if entry == "'self'":
                if script_origin == page_origin:
                    return True
                continue
            if entry.startswith("'"):
                continue
            wanted = entry if "://" in entry else f"{page_origin.scheme}://{entry}"
            try:
                if Origin.from_url(wanted) == script_origin:
                    return True
            except ValueError:
                continue
        return False


@dataclass
class CspViolation:
    directive: str
    blocked_uri: str  # "inline" or the script URL
    policy_source: str
