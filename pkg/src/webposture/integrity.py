"""Self-integrity check: hash the shipped source bundle against a known digest."""

from __future__ import annotations

import hashlib
from pathlib import Path

from .model import TestResult, TestStatus, utcnow

_TEST_ID = "core.self_integrity"
_TITLE = "Agent Self-Integrity"


def bundle_digest(package_root: Path | None = None) -> str:
    """SHA-256 over the package's Python sources.

    The bundle is the concatenation of ``<relative posix path>\\n<bytes>\\n``
    for every ``*.py`` under the package directory in sorted path order.
    """
    root = package_root or Path(__file__).resolve().parent
    h = hashlib.sha256()
    for path in sorted(root.rglob("*.py")):
        rel = path.relative_to(root).as_posix()
        h.update(rel.encode("utf-8"))
        h.update(b"\n")
        h.update(path.read_bytes())
        h.update(b"\n")
    return h.hexdigest()


def verify_self_integrity(
    expected_digest: str | None = None, package_root: Path | None = None
) -> TestResult:
    started = utcnow()
    if expected_digest is None:
        return TestResult(
            test_id=_TEST_ID,
            module="core",
            title=_TITLE,
            status=TestStatus.NOT_APPLICABLE,
            details="No reference digest configured.",
            started_at=started,
        )
    try:
        actual = bundle_digest(package_root)
    except OSError as exc:
        return TestResult(
            test_id=_TEST_ID,
            module="core",
            title=_TITLE,
            status=TestStatus.INCONCLUSIVE,
            details=f"Could not read own source bundle: {exc}",
            started_at=started,
        )
    expected = expected_digest.strip().lower()
    if actual == expected:
        status, details = TestStatus.PASS, "Source bundle matches the reference digest."
    else:
        status, details = TestStatus.FAIL, "Source bundle does not match the reference digest."
    return TestResult(
        test_id=_TEST_ID,
        module="core",
        title=_TITLE,
        status=status,
        details=details,
        evidence={"expected": expected, "actual": actual},
        started_at=started,
    )
