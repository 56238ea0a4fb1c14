"""Deviation detection against an expected posture baseline."""

from __future__ import annotations

from typing import Collection

from .model import Baseline, Deviation, PostureReport, TestStatus

#: Evidence-key prefix the permissions audit uses to publish observed states.
PERMISSION_EVIDENCE_PREFIX = "permission."


class BaselineConfigError(ValueError):
    """Baseline references test ids that are not known to the suite."""

    def __init__(self, unknown_ids: list[str]):
        self.unknown_ids = unknown_ids
        super().__init__(
            "baseline references unknown test ids: " + ", ".join(sorted(unknown_ids))
        )


def _observed_permissions(report: PostureReport) -> dict[str, str]:
    states: dict[str, str] = {}
    for result in report.results:
        for key, value in result.evidence.items():
            if key.startswith(PERMISSION_EVIDENCE_PREFIX):
                states[key[len(PERMISSION_EVIDENCE_PREFIX):]] = value
    return states


def compare_baseline(
    report: PostureReport,
    baseline: Baseline,
    known_test_ids: Collection[str] | None = None,
) -> list[Deviation]:
    """One deviation per baseline entry the report does not satisfy.

    Tests the baseline expects but the report never attempted come back as
    observed = inconclusive. ``known_test_ids`` widens the id universe used
    to reject misconfigured baselines; by default the report's own ids plus
    the registered battery are accepted.
    """
    if known_test_ids is None:
        from .registry import default_battery_ids

        known_test_ids = set(default_battery_ids())
    known = set(known_test_ids) | {r.test_id for r in report.results}

    unknown = [tid for tid in baseline.expected if tid not in known]
    if unknown:
        raise BaselineConfigError(unknown)

    by_id = {r.test_id: r for r in report.results}
    deviations: list[Deviation] = []
    for test_id, expected in baseline.expected.items():
        result = by_id.get(test_id)
        observed = result.status if result is not None else TestStatus.INCONCLUSIVE
        if observed is not expected:
            deviations.append(
                Deviation(test_id=test_id, expected=expected.value, observed=observed.value)
            )

    observed_perms = _observed_permissions(report)
    for name, expected_state in baseline.expected_permissions.items():
        observed_state = observed_perms.get(name, "inconclusive")
        if observed_state != expected_state:
            deviations.append(
                Deviation(
                    test_id=f"{PERMISSION_EVIDENCE_PREFIX}{name}",
                    expected=expected_state,
                    observed=observed_state,
                )
            )
    return deviations
