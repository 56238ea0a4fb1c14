"""Canonical JSON wire format for posture reports.

Field order is fixed to the report schema so that re-serializing a parsed
report is byte-stable (reports can be hashed or diffed as text).
"""

from __future__ import annotations

import json
from datetime import datetime, timezone
from typing import Any

from .model import (
    LogEntry,
    LogLevel,
    PostureReport,
    ScoreSummary,
    TestResult,
    TestStatus,
)


class SchemaError(ValueError):
    """Report text violates the wire schema; ``path`` names the first offender."""

    def __init__(self, path: str, reason: str):
        self.path = path
        self.reason = reason
        super().__init__(f"{path}: {reason}")


def _iso_utc(dt: datetime) -> str:
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def _parse_ts(value: str, path: str) -> datetime:
    try:
        return datetime.fromisoformat(value.replace("Z", "+00:00"))
    except ValueError:
        raise SchemaError(path, "not an ISO-8601 timestamp") from None


def result_to_dict(r: TestResult) -> dict[str, Any]:
    return {
        "test_id": r.test_id,
        "module": r.module,
        "title": r.title,
        "status": r.status.value,
        "details": r.details,
        "evidence": dict(r.evidence),
        "duration_ms": r.duration_ms,
        "started_at": _iso_utc(r.started_at),
        "logs": [
            {"level": e.level.value, "message": e.message, "at_ms": e.at_ms}
            for e in r.logs
        ],
    }


def report_to_dict(report: PostureReport) -> dict[str, Any]:
    """Schema-ordered plain-dict form of a report."""
    return {
        "agent_version": report.agent_version,
        "user_agent": report.user_agent,
        "secure_context": report.secure_context,
        "cross_origin_isolated": report.cross_origin_isolated,
        "run_started": _iso_utc(report.run_started),
        "results": [result_to_dict(r) for r in report.results],
        "score": {
            "applicable": report.score.applicable,
            "passed": report.score.passed,
            "score": report.score.score,
        },
    }


def serialize_report(report: PostureReport) -> str:
    return json.dumps(report_to_dict(report), ensure_ascii=False, separators=(",", ":"))


def _require(obj: dict[str, Any], key: str, kind: type | tuple[type, ...], path: str) -> Any:
    if key not in obj:
        raise SchemaError(f"{path}.{key}", "required field missing")
    value = obj[key]
    if kind is float:
        kind = (int, float)
    if not isinstance(value, kind) or isinstance(value, bool) and kind != bool:
        raise SchemaError(f"{path}.{key}", f"expected {getattr(kind, '__name__', kind)}")
    return value


def _parse_log(obj: Any, path: str) -> LogEntry:
    if not isinstance(obj, dict):
        raise SchemaError(path, "expected object")
    level = _require(obj, "level", str, path)
    try:
        lv = LogLevel(level)
    except ValueError:
        raise SchemaError(f"{path}.level", f"unknown log level {level!r}") from None
    message = _require(obj, "message", str, path)
    at_ms = _require(obj, "at_ms", float, path)
    return LogEntry(level=lv, message=message, at_ms=float(at_ms))


def _parse_result(obj: Any, path: str) -> TestResult:
    if not isinstance(obj, dict):
        raise SchemaError(path, "expected object")
    test_id = _require(obj, "test_id", str, path)
    module = _require(obj, "module", str, path)
    title = _require(obj, "title", str, path)
    status_raw = _require(obj, "status", str, path)
    try:
        status = TestStatus(status_raw)
    except ValueError:
        raise SchemaError(f"{path}.status", f"unknown status {status_raw!r}") from None
    details = _require(obj, "details", str, path)
    evidence_raw = _require(obj, "evidence", dict, path)
    evidence: dict[str, str] = {}
    for k, v in evidence_raw.items():
        if not isinstance(v, str):
            raise SchemaError(f"{path}.evidence.{k}", "expected string")
        evidence[k] = v
    duration = _require(obj, "duration_ms", float, path)
    if duration < 0:
        raise SchemaError(f"{path}.duration_ms", "must be non-negative")
    started_at = _parse_ts(_require(obj, "started_at", str, path), f"{path}.started_at")
    logs_raw = _require(obj, "logs", list, path)
    logs = [_parse_log(e, f"{path}.logs[{i}]") for i, e in enumerate(logs_raw)]
    return TestResult(
        test_id=test_id,
        module=module,
        title=title,
        status=status,
        details=details,
        evidence=evidence,
        duration_ms=float(duration),
        started_at=started_at,
        logs=logs,
    )


def parse_report(text: str) -> PostureReport:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"invalid JSON: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise SchemaError("$", "expected object")

    agent_version = _require(obj, "agent_version", str, "$")
    user_agent = _require(obj, "user_agent", str, "$")
    secure_context = _require(obj, "secure_context", bool, "$")
    cross_origin_isolated = _require(obj, "cross_origin_isolated", bool, "$")
    run_started = _parse_ts(_require(obj, "run_started", str, "$"), "$.run_started")
    results_raw = _require(obj, "results", list, "$")
    results = [_parse_result(r, f"$.results[{i}]") for i, r in enumerate(results_raw)]
    seen: set[str] = set()
    for i, r in enumerate(results):
        if r.test_id in seen:
            raise SchemaError(f"$.results[{i}].test_id", f"duplicate test_id {r.test_id!r}")
        seen.add(r.test_id)
    score_raw = _require(obj, "score", dict, "$")
    applicable = _require(score_raw, "applicable", int, "$.score")
    passed = _require(score_raw, "passed", int, "$.score")
    score_val = _require(score_raw, "score", float, "$.score")
    if not 0.0 <= float(score_val) <= 1.0:
        raise SchemaError("$.score.score", "must lie in [0, 1]")

    return PostureReport(
        agent_version=agent_version,
        user_agent=user_agent,
        secure_context=secure_context,
        cross_origin_isolated=cross_origin_isolated,
        run_started=run_started,
        results=results,
        score=ScoreSummary(applicable=int(applicable), passed=int(passed), score=float(score_val)),
    )
