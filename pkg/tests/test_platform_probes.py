from __future__ import annotations

import asyncio

import pytest

from webposture.config import RunConfig
from webposture.env import Browser, BrowserProfile, StoredCredential
from webposture.model import TestStatus
from webposture.probes.common import run_descriptors
from webposture.probes.platform import (
    descriptors,
    test_autofill_guard as run_autofill,
    test_notification_gesture_and_clipboard as run_gestures,
    test_pac_exposure as run_pac,
    test_shared_array_buffer as run_sab,
)
from webposture.registry import ProbeDescriptor
from webposture.scheduler import run_probe


def _config(harness) -> RunConfig:
    return RunConfig.from_manifest(harness.base_url)


def _by_id(results):
    return {r.test_id: r for r in results}


def _run_one(test_id: str, browser, config=None):
    descriptor = {d.test_id: d for d in descriptors()}[test_id]
    return asyncio.run(run_probe(descriptor, browser, config or RunConfig()))


class TestPermissionsAudit:
    def test_fresh_profile_all_prompt_passes(self, browser):
        result = _run_one("perms.audit", browser)
        assert result.status is TestStatus.PASS
        assert result.evidence["permission.geolocation"] == "prompt"
        assert result.evidence["permission.microphone"] == "prompt"

    def test_granted_permission_is_flagged_with_published_phrasing(self, harness):
        browser = Browser(page_url=harness.base_url + "/")
        browser.permissions.set("notifications", "granted")
        result = _run_one("perms.audit", browser)
        assert result.status is TestStatus.PASS
        assert "notifications" in result.details
        assert "granted (possibly via group policy or prior user consent)" in result.details
        warnings = [e for e in result.logs if e.level.value == "warning"]
        assert any("possibly via group policy" in e.message for e in warnings)

    def test_unsupported_name_maps_to_unsupported_entry(self, browser):
        browser.permissions.supported.discard("clipboard-read")
        from webposture.probes.platform import audit_permissions
        from webposture.registry import ProbeDescriptor as PD

        descriptor = PD(
            "perms.audit", "platform", "t",
            lambda ctx: audit_permissions(ctx, ["clipboard-read", "geolocation"]),
        )
        result = asyncio.run(run_probe(descriptor, browser, RunConfig()))
        assert result.status is TestStatus.PASS
        assert result.evidence["permission.clipboard-read"] == "unsupported"

    def test_query_interface_absent_is_not_applicable(self, browser):
        browser.permissions.query_available = False
        result = _run_one("perms.audit", browser)
        assert result.status is TestStatus.NOT_APPLICABLE

    def test_audit_never_prompts(self, browser):
        states_before = dict(browser.permissions.states)
        _run_one("perms.audit", browser)
        assert browser.permissions.states == states_before


class TestSharedArrayBuffer:
    def test_non_isolated_gating_passes(self, harness, browser):
        results = _by_id(run_sab(browser, _config(harness)))
        assert results["sab.gating"].status is TestStatus.PASS
        assert results["sab.gating"].evidence["cross_origin_isolated"] == "False"

    def test_isolated_page_confirms_configuration(self, harness, browser):
        results = _by_id(run_sab(browser, _config(harness)))
        assert results["sab.isolated"].status is TestStatus.PASS
        assert results["sab.isolated"].evidence["cross_origin_isolated"] == "True"

    def test_ungated_construction_fails_with_spectre_note(self, harness):
        browser = Browser(
            page_url=harness.base_url + "/",
            profile=BrowserProfile(sab_requires_isolation=False),
        )
        results = _by_id(run_sab(browser, _config(harness)))
        assert results["sab.gating"].status is TestStatus.FAIL
        assert "Spectre" in results["sab.gating"].details


class TestGestureGates:
    def test_notification_and_clipboard_pass_by_default(self, browser):
        results = _by_id(run_gestures(browser))
        assert results["gesture.notification"].status is TestStatus.PASS
        assert results["gesture.clipboard"].status is TestStatus.PASS

    def test_silent_grant_fails(self, harness):
        browser = Browser(
            page_url=harness.base_url + "/",
            profile=BrowserProfile(grant_notifications_without_gesture=True),
        )
        results = _by_id(run_gestures(browser))
        assert results["gesture.notification"].status is TestStatus.FAIL

    def test_notifications_api_absent_is_not_applicable(self, harness):
        browser = Browser(
            page_url=harness.base_url + "/",
            profile=BrowserProfile(notifications_available=False),
        )
        results = _by_id(run_gestures(browser))
        assert results["gesture.notification"].status is TestStatus.NOT_APPLICABLE

    def test_gestureless_clipboard_write_fails_when_permitted(self, harness):
        browser = Browser(
            page_url=harness.base_url + "/",
            profile=BrowserProfile(gesture_required=False),
        )
        results = _by_id(run_gestures(browser))
        assert results["gesture.clipboard"].status is TestStatus.FAIL


FAST_AUTOFILL = 300  # shorten the observation window for tests


def _autofill_results(browser):
    from webposture.probes.platform import autofill_script_read, autofill_silent

    built = [
        ProbeDescriptor(
            "autofill.silent", "platform", "t",
            lambda ctx: autofill_silent(ctx, observation_ms=FAST_AUTOFILL),
            sequential_group="autofill",
        ),
        ProbeDescriptor(
            "autofill.read_guard", "platform", "t", autofill_script_read,
            sequential_group="autofill",
        ),
    ]
    return _by_id(run_descriptors(built, browser))


class TestAutofillGuard:
    def test_no_stored_credentials_passes(self, browser):
        results = _autofill_results(browser)
        assert results["autofill.silent"].status is TestStatus.PASS
        assert results["autofill.read_guard"].status is TestStatus.PASS

    def test_credentials_with_hidden_fill_readable_fails(self, harness):
        browser = Browser(
            page_url=harness.base_url + "/",
            profile=BrowserProfile(
                stored_credentials=StoredCredential("u", "hunter2"),
                fill_hidden_forms=True,
                script_readable_autofill=True,
            ),
        )
        results = _autofill_results(browser)
        assert results["autofill.silent"].status is TestStatus.FAIL
        assert results["autofill.read_guard"].status is TestStatus.FAIL
        assert "readable by script" in results["autofill.read_guard"].details

    def test_filled_but_shielded_passes_read_guard(self, harness):
        browser = Browser(
            page_url=harness.base_url + "/",
            profile=BrowserProfile(
                stored_credentials=StoredCredential("u", "hunter2"),
                fill_hidden_forms=True,
                script_readable_autofill=False,
            ),
        )
        results = _autofill_results(browser)
        assert results["autofill.silent"].status is TestStatus.FAIL
        assert results["autofill.read_guard"].status is TestStatus.PASS
        assert results["autofill.read_guard"].evidence["autofill_occurred"] == "True"

    def test_visible_forms_are_not_what_we_measure(self, browser):
        # Hidden-form detection itself: a visible form may legitimately fill.
        assert browser._form_is_hidden(
            browser.document.create_element("form", style="position:absolute; left:-5000px")
        )
        assert not browser._form_is_hidden(browser.document.create_element("form"))


class TestPacExposure:
    def test_default_wpad_host_unresolvable_passes(self, browser):
        result = run_pac(browser)
        assert result.status is TestStatus.PASS
        assert result.evidence["outcome"] == "no wpad host"

    def test_cross_origin_pac_without_cors_is_opaque(self, harness, browser):
        # The harness frame page has no CORS headers: reading it cross-origin
        # must be blocked, which is the secure WPAD outcome.
        result = run_pac(browser, wpad_url=harness.alt_url + "/pages/frame")
        assert result.status is TestStatus.PASS
        assert result.evidence["outcome"] == "response opaque to script"

    def test_wildcard_cors_pac_is_readable_and_fails(self, harness, browser):
        result = run_pac(browser, wpad_url=harness.alt_url + "/fixtures/pac-open")
        assert result.status is TestStatus.FAIL
        assert result.evidence["find_proxy_for_url"] == "present"
