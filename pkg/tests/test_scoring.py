from __future__ import annotations

import random

from hypothesis import given, strategies as st

from webposture.model import Polarity, TestResult, TestStatus
from webposture.scoring import compute_score

# The published cross-browser excerpt: 25 rows, per-browser pass/fail.
# Row order matches the table; True = the browser showed secure behavior.
EVALUATION_EXCERPT_ROWS = [
    ("extension_enumeration", {"chrome": False, "firefox": True}),
    ("running_latest_version", {"chrome": True, "firefox": True}),
    ("browser_exploitation", {"chrome": False, "firefox": False}),
    ("deterministic_gc", {"chrome": True, "firefox": True}),
    ("spectre_meltdown_mitigation", {"chrome": True, "firefox": True}),
    ("malicious_wasm_detection", {"chrome": True, "firefox": True}),
    ("lan_scanning_protection", {"chrome": False, "firefox": False}),
    ("xss_protection", {"chrome": False, "firefox": False}),
    ("malicious_js_payload", {"chrome": False, "firefox": False}),
    ("content_filtering_policy", {"chrome": False, "firefox": False}),
    ("dom_based_content_filtering", {"chrome": False, "firefox": False}),
    ("subresource_integrity", {"chrome": True, "firefox": True}),
    ("insecure_resource_loading", {"chrome": True, "firefox": True}),
    ("extensive_csp_validation", {"chrome": True, "firefox": True}),
    ("same_origin_policy", {"chrome": True, "firefox": True}),
    ("js_execution_environment", {"chrome": True, "firefox": True}),
    ("default_permissions", {"chrome": True, "firefox": True}),
    ("restricted_apis", {"chrome": True, "firefox": True}),
    ("crypto_rng", {"chrome": True, "firefox": True}),
    ("key_storage_security", {"chrome": True, "firefox": True}),
    ("crypto_algorithms", {"chrome": True, "firefox": True}),
    ("application_enumeration", {"chrome": False, "firefox": False}),
    ("shellcode_decoding", {"chrome": False, "firefox": False}),
    ("high_cpu_load_detection", {"chrome": True, "firefox": True}),
    ("long_tasks_monitoring", {"chrome": True, "firefox": True}),
]


def _column(browser: str) -> list[TestResult]:
    return [
        TestResult(
            test_id=name,
            module="evaluation",
            title=name,
            status=TestStatus.PASS if verdicts[browser] else TestStatus.FAIL,
        )
        for name, verdicts in EVALUATION_EXCERPT_ROWS
    ]


class TestPublishedColumns:
    def test_chrome_column_scores_16_of_25(self):
        summary = compute_score(_column("chrome"))
        assert (summary.applicable, summary.passed) == (25, 16)
        assert summary.score == 0.64

    def test_firefox_column_scores_17_of_25(self):
        summary = compute_score(_column("firefox"))
        assert (summary.applicable, summary.passed) == (25, 17)
        assert summary.score == 0.68

    def test_all_not_applicable_scores_zero(self):
        results = [
            TestResult(test_id=f"t{i}", module="m", title="t", status=TestStatus.NOT_APPLICABLE)
            for i in range(5)
        ]
        summary = compute_score(results)
        assert (summary.applicable, summary.passed, summary.score) == (0, 0, 0.0)


class TestPolarity:
    def _one(self, status: TestStatus) -> list[TestResult]:
        return [TestResult(test_id="d", module="m", title="t", status=status)]

    def test_detected_counts_against_by_default(self):
        assert compute_score(self._one(TestStatus.DETECTED)).passed == 0
        assert compute_score(self._one(TestStatus.NOT_DETECTED)).passed == 1

    def test_detector_good_polarity_flips(self):
        polarity = {"d": Polarity.DETECTED_IS_GOOD}
        assert compute_score(self._one(TestStatus.DETECTED), polarity).passed == 1
        assert compute_score(self._one(TestStatus.NOT_DETECTED), polarity).passed == 0

    def test_inconclusive_and_error_excluded(self):
        results = self._one(TestStatus.INCONCLUSIVE) + [
            TestResult(test_id="e", module="m", title="t", status=TestStatus.ERROR)
        ]
        assert compute_score(results).applicable == 0


_statuses = st.sampled_from(list(TestStatus))


@given(st.lists(_statuses, min_size=1, max_size=40), st.data())
def test_fail_to_pass_never_decreases_score(statuses, data):
    results = [
        TestResult(test_id=f"t{i}", module="m", title="t", status=s)
        for i, s in enumerate(statuses)
    ]
    before = compute_score(results).score
    fail_indices = [i for i, s in enumerate(statuses) if s is TestStatus.FAIL]
    if not fail_indices:
        return
    flip = data.draw(st.sampled_from(fail_indices))
    results[flip] = TestResult(test_id=f"t{flip}", module="m", title="t", status=TestStatus.PASS)
    assert compute_score(results).score >= before


@given(st.lists(_statuses, min_size=0, max_size=40))
def test_appending_a_fail_never_increases_score(statuses):
    results = [
        TestResult(test_id=f"t{i}", module="m", title="t", status=s)
        for i, s in enumerate(statuses)
    ]
    before = compute_score(results).score
    results.append(
        TestResult(test_id="extra", module="m", title="t", status=TestStatus.FAIL)
    )
    assert compute_score(results).score <= before


def test_score_matches_brute_force_on_random_mixes():
    rng = random.Random(9)
    for _ in range(200):
        results = [
            TestResult(
                test_id=f"t{i}",
                module="m",
                title="t",
                status=rng.choice(list(TestStatus)),
            )
            for i in range(rng.randint(0, 30))
        ]
        summary = compute_score(results)
        applicable = [
            r
            for r in results
            if r.status
            in (TestStatus.PASS, TestStatus.FAIL, TestStatus.DETECTED, TestStatus.NOT_DETECTED)
        ]
        passed = [
            r
            for r in applicable
            if r.status in (TestStatus.PASS, TestStatus.NOT_DETECTED)
        ]
        assert summary.applicable == len(applicable)
        assert summary.passed == len(passed)
        expected = len(passed) / len(applicable) if applicable else 0.0
        assert summary.score == expected
