"""Deterministic rule-based interpretation of probe results.

The advisor is a pluggable seam: anything implementing ``ResultAnalyzer``
can be swapped in (e.g. a model-backed analyzer); the default is a fixed
rule table so identical results always produce identical advice.
"""

from __future__ import annotations

from typing import Iterable, Protocol, Sequence

from .model import Baseline, Recommendation, Severity, TestResult, TestStatus

CPU_PRESSURE_ADVICE = (
    "High CPU load detected consistently during browser idle time. This may "
    "indicate cryptomining malware or resource-intensive scripts. Recommend "
    "reviewing browser extensions, checking for unknown scripts or tabs "
    "consuming high resources, and conducting malware scans to ensure system "
    "integrity."
)

FILTER_INACTIVE_ADVICE = (
    "Expected content filtering mechanisms appear inactive or misconfigured, "
    "potentially exposing users to unwanted or malicious content. Verify "
    "firewall and proxy configurations, confirm enterprise browser policies "
    "are correctly deployed, and re-run tests post-remediation."
)

_SEVERITY_RANK = {Severity.CRITICAL: 0, Severity.WARNING: 1, Severity.INFO: 2}

#: Probes whose failure means a platform security policy was not enforced.
_ENFORCEMENT_PREFIXES = ("sop.", "cors.", "csp.", "sandbox.", "sab.", "autofill.", "pac.")


class ResultAnalyzer(Protocol):
    def analyze(
        self, results: Sequence[TestResult], baseline: Baseline | None = None
    ) -> list[Recommendation]: ...


class RuleAdvisor:
    """Fixed rule table mapping non-pass results to operator guidance."""

    def analyze(
        self, results: Sequence[TestResult], baseline: Baseline | None = None
    ) -> list[Recommendation]:
        recs: list[Recommendation] = []
        for r in results:
            rec = self._rule_for(r, baseline)
            if rec is not None:
                recs.append(rec)
        recs.sort(key=lambda rec: (_SEVERITY_RANK[rec.severity], rec.trigger_test_id))
        return recs

    def _rule_for(
        self, r: TestResult, baseline: Baseline | None
    ) -> Recommendation | None:
        if r.status is TestStatus.PASS or r.status is TestStatus.NOT_APPLICABLE:
            return None

        if r.test_id == "cpu.pressure" and r.status is TestStatus.FAIL:
            return Recommendation(r.test_id, Severity.WARNING, CPU_PRESSURE_ADVICE)

        if (
            r.test_id == "filter.network"
            and r.status is TestStatus.NOT_DETECTED
            and baseline is not None
            and baseline.expected.get("filter.network") is TestStatus.DETECTED
        ):
            return Recommendation(r.test_id, Severity.WARNING, FILTER_INACTIVE_ADVICE)

        if r.status is TestStatus.FAIL:
            severity = (
                Severity.CRITICAL
                if r.test_id.startswith(_ENFORCEMENT_PREFIXES)
                else Severity.WARNING
            )
            return Recommendation(
                r.test_id,
                severity,
                f"{r.title} reported a failed enforcement check: {r.details} "
                "Review the browser configuration and applicable policies.",
            )

        if r.status is TestStatus.DETECTED:
            if r.test_id.startswith("tls."):
                return Recommendation(
                    r.test_id,
                    Severity.CRITICAL,
                    "An invalid TLS endpoint was reachable; this points at an "
                    "interception proxy or a modified trust store. Escalate to IT "
                    "and audit the machine's root certificates.",
                )
            if r.test_id == "memory.leak":
                return Recommendation(
                    r.test_id,
                    Severity.WARNING,
                    "A decoy sensitive element was never reclaimed, so something "
                    "in the page is holding a reference to it. Review installed "
                    "extensions and any injected scripts.",
                )
            if r.test_id == "scan.ports":
                return Recommendation(
                    r.test_id,
                    Severity.WARNING,
                    "Local services were reachable from web content. Close the "
                    "exposed ports or block browser access to them: " + r.details,
                )
            if r.test_id == "env.fingerprint":
                return Recommendation(
                    r.test_id,
                    Severity.INFO,
                    "Virtualization or sandbox indicators are present: " + r.details,
                )
            # Filter detectors firing is the expected enterprise posture.
            if r.test_id.startswith("filter."):
                return None
            return Recommendation(
                r.test_id, Severity.WARNING, f"{r.title}: {r.details}"
            )

        if r.status is TestStatus.ERROR:
            return Recommendation(
                r.test_id,
                Severity.INFO,
                f"{r.title} crashed ({r.details}); re-run the probe, optionally "
                "with an extended budget.",
            )
        return None


_DEFAULT_ADVISOR = RuleAdvisor()


def advise(
    results: Iterable[TestResult],
    baseline: Baseline | None = None,
    analyzer: ResultAnalyzer | None = None,
) -> list[Recommendation]:
    """Deterministic recommendations, ordered by severity then test id."""
    analyzer = analyzer or _DEFAULT_ADVISOR
    return analyzer.analyze(list(results), baseline)
