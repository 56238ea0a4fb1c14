"""Result model shared by every probe and by the report pipeline."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from datetime import datetime, timezone


class TestStatus(str, enum.Enum):
    """Verdict for a single probe.

    ``pass``/``fail`` belong to enforcement-style probes, ``detected``/
    ``not_detected`` to presence-style probes (leak, filter, interception).
    ``inconclusive`` covers budget expiry and ambiguous signals,
    ``error`` a crashed probe, ``not_applicable`` a missing capability.
    """

    PASS = "pass"
    FAIL = "fail"
    DETECTED = "detected"
    NOT_DETECTED = "not_detected"
    NOT_APPLICABLE = "not_applicable"
    INCONCLUSIVE = "inconclusive"
    ERROR = "error"


#: Statuses that enter the score denominator (subject to polarity).
APPLICABLE_STATUSES = frozenset(
    {TestStatus.PASS, TestStatus.FAIL, TestStatus.DETECTED, TestStatus.NOT_DETECTED}
)


class Polarity(str, enum.Enum):
    """How a detector verdict maps onto the score.

    Enforcement probes score on pass/fail literally. For detectors the
    meaning of ``detected`` flips with intent: a reference leak being
    detected is a failure point, an expected content filter being
    detected is a pass.
    """

    ENFORCEMENT = "enforcement"
    DETECTED_IS_BAD = "detected_is_bad"
    DETECTED_IS_GOOD = "detected_is_good"


class LogLevel(str, enum.Enum):
    INFO = "info"
    SUCCESS = "success"
    WARNING = "warning"
    ERROR = "error"


@dataclass
class LogEntry:
    level: LogLevel
    message: str
    at_ms: float  # offset from test start


@dataclass
class TestResult:
    """One probe's verdict plus its evidence and log trail."""

    test_id: str
    module: str
    title: str
    status: TestStatus
    details: str = ""
    evidence: dict[str, str] = field(default_factory=dict)
    duration_ms: float = 0.0
    started_at: datetime = field(default_factory=lambda: datetime.now(timezone.utc))
    logs: list[LogEntry] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.duration_ms < 0:
            raise ValueError("duration_ms must be non-negative")


@dataclass
class ScoreSummary:
    applicable: int
    passed: int
    score: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise ValueError("score must lie in [0, 1]")


@dataclass
class PostureReport:
    """Browser metadata plus the ordered probe results; the wire artifact."""

    agent_version: str
    user_agent: str
    secure_context: bool
    cross_origin_isolated: bool
    run_started: datetime
    results: list[TestResult]
    score: ScoreSummary

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for r in self.results:
            if r.test_id in seen:
                raise ValueError(f"duplicate test_id in report: {r.test_id}")
            seen.add(r.test_id)


@dataclass
class Baseline:
    """Expected status per test id and expected permission states."""

    expected: dict[str, TestStatus] = field(default_factory=dict)
    expected_permissions: dict[str, str] = field(default_factory=dict)


@dataclass
class Deviation:
    test_id: str
    expected: str
    observed: str


class Severity(str, enum.Enum):
    INFO = "info"
    WARNING = "warning"
    CRITICAL = "critical"


@dataclass
class Recommendation:
    trigger_test_id: str
    severity: Severity
    text: str


def utcnow() -> datetime:
    return datetime.now(timezone.utc)
