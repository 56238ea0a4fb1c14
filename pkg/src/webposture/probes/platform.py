"""Platform posture probes: permissions, shared-memory gating, gesture
requirements, autofill guard, and PAC exposure."""

from __future__ import annotations

from dataclasses import dataclass

from ..env import NotAllowedError, SecurityError
from ..env.net import (
    ConnectError,
    CorsError,
    FetchError,
    NameResolutionError,
    NetworkBlocked,
    TimeoutError_,
)
from ..env.permissions import DEFAULT_PERMISSION_NAMES, EXTRA_QUERYABLE, PermissionQueryError
from ..model import Polarity, TestStatus
from ..registry import ProbeDescriptor
from ..scheduler import Outcome, ProbeContext


@dataclass
class PermissionAuditEntry:
    name: str
    state: str  # granted | denied | prompt | unsupported
    flagged: bool


async def audit_permissions(
    ctx: ProbeContext, names: list[str] | None = None
) -> Outcome:
    store = ctx.browser.permissions
    if not store.query_available:
        return Outcome(
            TestStatus.NOT_APPLICABLE, "Permissions query interface not available."
        )
    names = names or list(DEFAULT_PERMISSION_NAMES)
    baseline = ctx.config.baseline.expected_permissions if ctx.config.baseline else {}
    entries: list[PermissionAuditEntry] = []
    evidence: dict[str, str] = {}
    for name in names:
        try:
            state = store.query(name)
        except PermissionQueryError:
            state = "unsupported"
        expected = baseline.get(name)
        flagged = state == "granted" or (expected is not None and expected != state)
        entries.append(PermissionAuditEntry(name=name, state=state, flagged=flagged))
        evidence[f"permission.{name}"] = state
        if state == "granted":
            ctx.warning(
                f"{name} permission is granted (possibly via group policy or "
                "prior user consent)"
            )

    # Informational extras and the cross-permission consistency note carry
    # no verdict of their own.
    for name in EXTRA_QUERYABLE:
        try:
            evidence[f"info.{name}"] = store.query(name)
        except PermissionQueryError:
            pass
    states = {e.name: e.state for e in entries}
    if states.get("camera") == "granted" and states.get("microphone") == "denied":
        evidence["consistency_note"] = (
            "camera granted but microphone denied; review prior consent"
        )

    flagged_names = [e.name for e in entries if e.flagged]
    if flagged_names:
        details = "Flagged permission states: " + ", ".join(flagged_names) + "."
        granted = [e.name for e in entries if e.state == "granted"]
        if granted:
            details += (
                f" {', '.join(granted)} granted (possibly via group policy or "
                "prior user consent)."
            )
    else:
        details = "All audited permissions are at safe defaults."
    return Outcome(TestStatus.PASS, details, evidence)


async def sab_gating(ctx: ProbeContext) -> Outcome:
    browser = ctx.browser
    evidence = {
        "cross_origin_isolated": str(browser.cross_origin_isolated),
        "atomics_wait": str(browser.atomics_wait_available()),
    }
    try:
        browser.new_shared_array_buffer(8)
        constructed = True
    except SecurityError as exc:
        constructed = False
        evidence["exception"] = str(exc)
    if browser.cross_origin_isolated:
        return Outcome(
            TestStatus.INCONCLUSIVE,
            "Main context unexpectedly isolated; gating not measurable here.",
            evidence,
        )
    if constructed:
        return Outcome(
            TestStatus.FAIL,
            "Shared memory was constructible without isolation, reintroducing "
            "Spectre risk.",
            evidence,
        )
    return Outcome(
        TestStatus.PASS,
        "Shared memory construction throws in a non-isolated context.",
        evidence,
    )


async def sab_isolated_context(ctx: ProbeContext) -> Outcome:
    if not ctx.config.harness_base_url:
        return Outcome(
            TestStatus.INCONCLUSIVE,
            "Harness origin not configured; probe needs a live harness.",
        )
    try:
        window = await ctx.io(
            ctx.browser.open_window,
            ctx.config.harness_base_url + "/pages/isolated",
            ctx.budget_ms / 1000.0,
        )
    except FetchError as exc:
        return Outcome(TestStatus.INCONCLUSIVE, f"Isolated page unreachable: {exc}")
    evidence = {"cross_origin_isolated": str(window.cross_origin_isolated)}
    if not window.cross_origin_isolated:
        return Outcome(
            TestStatus.FAIL,
            "Page served with isolation headers did not become cross-origin "
            "isolated.",
            evidence,
        )
    try:
        window.new_shared_array_buffer(8)
    except SecurityError as exc:
        evidence["exception"] = str(exc)
        return Outcome(
            TestStatus.FAIL,
            "Isolated context still refused shared memory construction.",
            evidence,
        )
    return Outcome(
        TestStatus.PASS,
        "Isolated context reports isolation and allows shared memory: "
        "configuration confirmed.",
        evidence,
    )


async def notification_gesture(ctx: ProbeContext) -> Outcome:
    browser = ctx.browser
    if not getattr(browser.profile, "notifications_available", True):
        return Outcome(TestStatus.NOT_APPLICABLE, "Notifications API not available.")
    before = browser.permissions.states.get("notifications", "prompt")
    result = browser.request_notification_permission()
    evidence = {"prior_state": before, "request_result": result}
    if result == "granted" and before != "granted":
        return Outcome(
            TestStatus.FAIL,
            "A gesture-free notification request was silently granted.",
            evidence,
        )
    return Outcome(
        TestStatus.PASS,
        "Gesture-free notification request did not yield a silent grant "
        "(anti-spam measure held).",
        evidence,
    )


async def clipboard_gesture(ctx: ProbeContext) -> Outcome:
    browser = ctx.browser
    try:
        browser.clipboard_write_text("posture-probe")
    except NotAllowedError as exc:
        return Outcome(
            TestStatus.PASS,
            "Gesture-free clipboard write was refused.",
            {"exception": str(exc)},
        )
    except AttributeError:
        return Outcome(TestStatus.NOT_APPLICABLE, "Clipboard API not available.")
    return Outcome(
        TestStatus.FAIL, "Clipboard write succeeded silently without a gesture."
    )


# ---------------------------------------------------------------------------
# Autofill guard
# ---------------------------------------------------------------------------

#: Off-viewport positioning rather than display:none — some engines skip
#: display:none forms categorically, which would mask the interesting case.
HIDDEN_FORM_STYLE = "position:absolute; left:-5000px; top:-5000px"


def _build_hidden_form(ctx: ProbeContext):
    form = ctx.create_element("form", id="posture-hidden-login", style=HIDDEN_FORM_STYLE)
    user = ctx.create_element("input", type="text", id="posture-hidden-user")
    password = ctx.create_element("input", type="password", id="posture-hidden-pass")
    form.append_child(user)
    form.append_child(password)
    ctx.region.append_child(form)
    return form, user, password


async def autofill_silent(ctx: ProbeContext, observation_ms: int = 4000) -> Outcome:
    form, user, password = _build_hidden_form(ctx)
    waited = 0.0
    while waited < observation_ms:
        ctx.browser.autofill_pass(form)
        if user.value or password.value:
            break
        await ctx.sleep(0.1)
        waited += 100.0
    if not user.value and not password.value:
        return Outcome(
            TestStatus.PASS,
            "Hidden form fields remained empty: no silent autofill.",
            {"observation_ms": str(observation_ms)},
        )
    return Outcome(
        TestStatus.FAIL,
        "The credential manager silently filled an off-screen form.",
        {"username_filled": str(bool(user.value)), "password_filled": str(bool(password.value))},
    )


async def autofill_script_read(ctx: ProbeContext) -> Outcome:
    form, user, password = _build_hidden_form(ctx)
    ctx.browser.autofill_pass(form)
    if not user.value and not password.value:
        return Outcome(
            TestStatus.PASS,
            "No autofilled value present for script to read.",
            {"autofill_occurred": "False"},
        )
    readable = ctx.browser.script_read_value(password) or ctx.browser.script_read_value(user)
    if readable:
        return Outcome(
            TestStatus.FAIL,
            "Autofilled credentials are readable by script: a serious "
            "vulnerability.",
            {"autofill_occurred": "True", "readable": "True"},
        )
    return Outcome(
        TestStatus.PASS,
        "Autofilled values are shielded from script access until user "
        "interaction.",
        {"autofill_occurred": "True", "readable": "False"},
    )


# ---------------------------------------------------------------------------
# PAC exposure
# ---------------------------------------------------------------------------


async def pac_exposure(ctx: ProbeContext, wpad_url: str | None = None) -> Outcome:
    url = wpad_url or ctx.config.wpad_url
    evidence = {"url": url}
    try:
        response = await ctx.io(
            ctx.browser.fetch, url, "GET", None, None, "cors", 3.0
        )
    except NameResolutionError:
        evidence["outcome"] = "no wpad host"
        return Outcome(
            TestStatus.PASS,
            "No WPAD host resolves; nothing to expose.",
            evidence,
        )
    except CorsError:
        evidence["outcome"] = "response opaque to script"
        return Outcome(
            TestStatus.PASS, "PAC file not accessible to web scripts.", evidence
        )
    except (ConnectError, NetworkBlocked) as exc:
        evidence["outcome"] = f"request rejected ({type(exc).__name__})"
        return Outcome(
            TestStatus.PASS, "PAC file not accessible to web scripts.", evidence
        )
    except TimeoutError_:
        evidence["outcome"] = "timeout"
        return Outcome(
            TestStatus.PASS,
            "WPAD request timed out without exposing anything.",
            evidence,
        )
    body = response.body.decode("utf-8", "replace")
    evidence["outcome"] = "body readable"
    if "FindProxyForURL" in body:
        evidence["find_proxy_for_url"] = "present"
    return Outcome(
        TestStatus.FAIL,
        "Web content can read the PAC file; internal proxy configuration is "
        "exposed.",
        evidence,
    )


# ---------------------------------------------------------------------------
# Descriptors and operation fronts
# ---------------------------------------------------------------------------


def descriptors() -> list[ProbeDescriptor]:
    mk = ProbeDescriptor
    return [
        mk("perms.audit", "platform", "Permissions Audit", audit_permissions),
        mk("sab.gating", "platform", "SharedArrayBuffer Isolation Gate", sab_gating),
        mk("sab.isolated", "platform", "Cross-Origin Isolated Context", sab_isolated_context),
        mk("gesture.notification", "platform", "Notification Gesture Requirement",
           notification_gesture),
        mk("gesture.clipboard", "platform", "Clipboard Gesture Requirement",
           clipboard_gesture),
        mk("autofill.silent", "platform", "Hidden-Form Autofill Guard", autofill_silent,
           sequential_group="autofill"),
        mk("autofill.read_guard", "platform", "Autofill Script-Read Guard",
           autofill_script_read, sequential_group="autofill"),
        mk("pac.exposure", "platform", "PAC/WPAD Exposure", pac_exposure),
    ]


def _family(prefix: tuple[str, ...]) -> list[ProbeDescriptor]:
    return [d for d in descriptors() if d.test_id.startswith(prefix)]


def test_shared_array_buffer(browser, config=None):
    from .common import run_descriptors

    return run_descriptors(_family(("sab.",)), browser, config)


def test_notification_gesture_and_clipboard(browser, config=None):
    from .common import run_descriptors

    return run_descriptors(_family(("gesture.",)), browser, config)


def test_autofill_guard(browser, config=None):
    from .common import run_descriptors

    return run_descriptors(_family(("autofill.",)), browser, config)


def test_pac_exposure(browser, wpad_url: str | None = None, config=None):
    from .common import run_descriptors

    descriptor = ProbeDescriptor(
        "pac.exposure",
        "platform",
        "PAC/WPAD Exposure",
        lambda ctx: pac_exposure(ctx, wpad_url),
    )
    return run_descriptors([descriptor], browser, config)[0]
