from __future__ import annotations

import json
import random
from datetime import datetime, timedelta, timezone

import pytest

from webposture.model import (
    LogEntry,
    LogLevel,
    PostureReport,
    ScoreSummary,
    TestResult,
    TestStatus,
)
from webposture.serialization import SchemaError, parse_report, serialize_report

SCHEMA_FIELDS = [
    "agent_version",
    "user_agent",
    "secure_context",
    "cross_origin_isolated",
    "run_started",
    "results",
    "score",
]

RESULT_FIELDS = [
    "test_id",
    "module",
    "title",
    "status",
    "details",
    "evidence",
    "duration_ms",
    "started_at",
    "logs",
]


def make_report(rng: random.Random | None = None, n_results: int = 3) -> PostureReport:
    rng = rng or random.Random(0)
    statuses = list(TestStatus)
    levels = list(LogLevel)
    base = datetime(2024, 5, 1, 12, 0, 0, tzinfo=timezone.utc)
    results = []
    for i in range(n_results):
        results.append(
            TestResult(
                test_id=f"probe.{i}",
                module=rng.choice(["policy", "memory", "crypto"]),
                title=f"Probe {i} — ünïcode ✓ {rng.randint(0, 999)}",
                status=rng.choice(statuses),
                details="détails " + "x" * rng.randint(0, 30),
                evidence={f"k{j}": f"v{rng.random()!r}" for j in range(rng.randint(0, 4))},
                duration_ms=rng.random() * 1000,
                started_at=base + timedelta(seconds=i),
                logs=[
                    LogEntry(rng.choice(levels), f"msg {rng.random()!r}", rng.random() * 100)
                    for _ in range(rng.randint(0, 3))
                ],
            )
        )
    passed = sum(1 for r in results if r.status is TestStatus.PASS)
    applicable = sum(
        1
        for r in results
        if r.status
        in (TestStatus.PASS, TestStatus.FAIL, TestStatus.DETECTED, TestStatus.NOT_DETECTED)
    )
    return PostureReport(
        agent_version="0.1.0",
        user_agent="TestAgent/1 (unit)",
        secure_context=True,
        cross_origin_isolated=False,
        run_started=base,
        results=results,
        score=ScoreSummary(applicable, passed, passed / applicable if applicable else 0.0),
    )


class TestRoundTrip:
    def test_empty_results_report_round_trips(self):
        report = make_report(n_results=0)
        assert parse_report(serialize_report(report)) == report

    def test_round_trip_structural_equality(self):
        report = make_report(random.Random(7), n_results=5)
        assert parse_report(serialize_report(report)) == report

    def test_reserialization_is_byte_stable(self):
        report = make_report(random.Random(42), n_results=8)
        text = serialize_report(report)
        assert serialize_report(parse_report(text)) == text

    def test_field_order_is_schema_order(self):
        report = make_report(n_results=2)
        obj = json.loads(serialize_report(report))
        assert list(obj.keys()) == SCHEMA_FIELDS
        assert list(obj["results"][0].keys()) == RESULT_FIELDS
        assert list(obj["score"].keys()) == ["applicable", "passed", "score"]
        for entry in obj["results"][0]["logs"]:
            assert list(entry.keys()) == ["level", "message", "at_ms"]

    def test_run_started_is_iso_utc(self):
        obj = json.loads(serialize_report(make_report()))
        assert obj["run_started"] == "2024-05-01T12:00:00Z"


class TestSchemaErrors:
    def test_missing_user_agent_names_path(self):
        obj = json.loads(serialize_report(make_report()))
        del obj["user_agent"]
        with pytest.raises(SchemaError) as exc:
            parse_report(json.dumps(obj))
        assert exc.value.path == "$.user_agent"

    def test_empty_object_reports_first_missing_field(self):
        with pytest.raises(SchemaError) as exc:
            parse_report("{}")
        assert exc.value.path == "$.agent_version"

    def test_bad_status_path_includes_result_index(self):
        obj = json.loads(serialize_report(make_report(n_results=2)))
        obj["results"][1]["status"] = "bogus"
        with pytest.raises(SchemaError) as exc:
            parse_report(json.dumps(obj))
        assert exc.value.path == "$.results[1].status"

    def test_non_string_evidence_value_rejected(self):
        obj = json.loads(serialize_report(make_report(n_results=1)))
        obj["results"][0]["evidence"] = {"k": 3}
        with pytest.raises(SchemaError) as exc:
            parse_report(json.dumps(obj))
        assert exc.value.path.startswith("$.results[0].evidence")

    def test_malformed_json_rejected(self):
        with pytest.raises(SchemaError):
            parse_report("{not json")

    def test_duplicate_test_id_rejected(self):
        obj = json.loads(serialize_report(make_report(n_results=2)))
        obj["results"][1]["test_id"] = obj["results"][0]["test_id"]
        with pytest.raises(SchemaError) as exc:
            parse_report(json.dumps(obj))
        assert "test_id" in exc.value.path

    def test_negative_duration_rejected(self):
        obj = json.loads(serialize_report(make_report(n_results=1)))
        obj["results"][0]["duration_ms"] = -5
        with pytest.raises(SchemaError) as exc:
            parse_report(json.dumps(obj))
        assert exc.value.path == "$.results[0].duration_ms"
