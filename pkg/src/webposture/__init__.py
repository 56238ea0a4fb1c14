"""In-browser-style security posture assessment, run against an emulated browsing context."""

__version__ = "0.1.0"

from .advisor import advise
from .baseline import compare_baseline
from .config import RunConfig
from .integrity import verify_self_integrity
from .model import (
    Baseline,
    Deviation,
    LogEntry,
    LogLevel,
    Polarity,
    PostureReport,
    Recommendation,
    ScoreSummary,
    Severity,
    TestResult,
    TestStatus,
)
from .registry import ProbeDescriptor, ProbeRegistry, RegistrationError, default_battery
from .scheduler import run_suite, run_suite_async
from .scoring import compute_score
from .serialization import SchemaError, parse_report, serialize_report

__all__ = [
    "Baseline",
    "Deviation",
    "LogEntry",
    "LogLevel",
    "Polarity",
    "PostureReport",
    "ProbeDescriptor",
    "ProbeRegistry",
    "Recommendation",
    "RegistrationError",
    "RunConfig",
    "SchemaError",
    "ScoreSummary",
    "Severity",
    "TestResult",
    "TestStatus",
    "__version__",
    "advise",
    "compare_baseline",
    "compute_score",
    "default_battery",
    "parse_report",
    "run_suite",
    "run_suite_async",
    "serialize_report",
    "verify_self_integrity",
]
