from __future__ import annotations

from webposture.advisor import CPU_PRESSURE_ADVICE, FILTER_INACTIVE_ADVICE, advise
from webposture.model import Baseline, Severity, TestResult, TestStatus


def _result(test_id: str, status: TestStatus, title: str = "", details: str = "") -> TestResult:
    return TestResult(
        test_id=test_id, module="m", title=title or test_id, status=status, details=details
    )


class TestSeededRules:
    def test_cpu_pressure_failure_uses_the_published_text(self):
        recs = advise([_result("cpu.pressure", TestStatus.FAIL)])
        assert len(recs) == 1
        assert recs[0].text.startswith(
            "High CPU load detected consistently during browser idle time"
        )
        assert recs[0].text == CPU_PRESSURE_ADVICE

    def test_inactive_filter_with_baseline_expectation(self):
        baseline = Baseline(expected={"filter.network": TestStatus.DETECTED})
        recs = advise([_result("filter.network", TestStatus.NOT_DETECTED)], baseline)
        assert len(recs) == 1
        assert recs[0].text.startswith("Expected content filtering mechanisms appear inactive")
        assert recs[0].text == FILTER_INACTIVE_ADVICE

    def test_inactive_filter_without_baseline_is_silent(self):
        assert advise([_result("filter.network", TestStatus.NOT_DETECTED)]) == []

    def test_all_pass_yields_no_recommendations(self):
        results = [_result(f"t{i}", TestStatus.PASS) for i in range(10)]
        assert advise(results) == []


class TestDeterminismAndOrdering:
    def _mixed(self) -> list[TestResult]:
        return [
            _result("scan.ports", TestStatus.DETECTED, details="port 22 open"),
            _result("cpu.pressure", TestStatus.FAIL),
            _result("sop.iframe", TestStatus.FAIL, details="leaked title"),
            _result("memory.leak", TestStatus.DETECTED),
            _result("zz.err", TestStatus.ERROR, details="boom"),
            _result("csp.inline", TestStatus.FAIL, details="ran"),
        ]

    def test_repeated_invocation_equality(self):
        results = self._mixed()
        assert advise(results) == advise(results)

    def test_ordered_by_severity_then_test_id(self):
        recs = advise(self._mixed())
        keys = [(rec.severity, rec.trigger_test_id) for rec in recs]
        rank = {Severity.CRITICAL: 0, Severity.WARNING: 1, Severity.INFO: 2}
        assert keys == sorted(keys, key=lambda k: (rank[k[0]], k[1]))
        assert keys[0][0] is Severity.CRITICAL

    def test_every_recommendation_names_a_non_pass_result(self):
        results = self._mixed() + [_result("ok", TestStatus.PASS)]
        by_id = {r.test_id: r for r in results}
        for rec in advise(results):
            assert by_id[rec.trigger_test_id].status is not TestStatus.PASS
