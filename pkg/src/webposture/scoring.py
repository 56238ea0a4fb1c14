"""Posture score arithmetic."""

from __future__ import annotations

from typing import Iterable, Mapping

from .model import APPLICABLE_STATUSES, Polarity, ScoreSummary, TestResult, TestStatus


def _counts_as_pass(status: TestStatus, polarity: Polarity) -> bool:
    if status is TestStatus.PASS:
        return True
    if status is TestStatus.FAIL:
        return False
    if status is TestStatus.DETECTED:
        return polarity is Polarity.DETECTED_IS_GOOD
    if status is TestStatus.NOT_DETECTED:
        return polarity is not Polarity.DETECTED_IS_GOOD
    raise ValueError(f"status {status} is not applicable")


def compute_score(
    results: Iterable[TestResult],
    polarities: Mapping[str, Polarity] | None = None,
) -> ScoreSummary:
    """Count applicable results and the fraction that came out secure.

    not_applicable / inconclusive / error are excluded from the
    denominator. Detector statuses count by the probe's declared polarity;
    probes without a declared polarity are treated conservatively
    (detected = failure point).
    """
    polarities = polarities or {}
    applicable = 0
    passed = 0
    for r in results:
        if r.status not in APPLICABLE_STATUSES:
            continue
        applicable += 1
        polarity = polarities.get(r.test_id, Polarity.DETECTED_IS_BAD)
        if _counts_as_pass(r.status, polarity):
            passed += 1
    score = passed / applicable if applicable else 0.0
    return ScoreSummary(applicable=applicable, passed=passed, score=score)
