"""Enforcement probes: SOP, CORS, CSP, legacy XSS filtering, iframe sandboxing.

These cooperate with the harness: the alt-origin port supplies a genuinely
cross-origin document, /cors/* the header matrix, /pages/csp-strict the
policy context. All probes in this module share frames and sentinels and
therefore run sequentially relative to one another.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, field

from ..env import SecurityError
from ..env.net import ConnectError, CorsError, FetchError, TimeoutError_
from ..model import Polarity, TestStatus
from ..registry import ProbeDescriptor
from ..scheduler import Outcome, ProbeContext

#: Bounded settle for sentinel polling: execution is asynchronous, so the
#: absence of a sentinel only counts after this window.
SENTINEL_SETTLE_MS = 1000.0
_SENTINEL_POLL_S = 0.025

CUSTOM_PREFLIGHT_HEADER = "x-probe-token"


@dataclass
class CorsScenario:
    name: str
    endpoint_path: str
    method: str = "GET"
    custom_headers: dict[str, str] = field(default_factory=dict)
    expect_allowed: bool = False
    expect_preflight: bool = False

    def __post_init__(self) -> None:
        non_simple = self.method.upper() not in ("GET", "HEAD", "POST") or bool(
            self.custom_headers
        )
        if self.expect_preflight and not non_simple:
            raise ValueError(
                f"scenario {self.name!r} expects a preflight but is a simple request"
            )


def default_cors_scenarios() -> list[CorsScenario]:
    return [
        CorsScenario("none", "/cors/none", expect_allowed=False),
        CorsScenario("wildcard", "/cors/wildcard", expect_allowed=True),
        CorsScenario(
            "preflight-allow",
            "/cors/allow",
            method="PUT",
            custom_headers={CUSTOM_PREFLIGHT_HEADER: "1"},
            expect_allowed=True,
            expect_preflight=True,
        ),
    ]


async def _wait_sentinel(
    ctx: ProbeContext, frame, name: str, settle_ms: float = SENTINEL_SETTLE_MS
) -> bool:
    waited = 0.0
    while waited < settle_ms:
        if name in frame.sentinels:
            return True
        await ctx.sleep(_SENTINEL_POLL_S)
        waited += _SENTINEL_POLL_S * 1000.0
    return name in frame.sentinels


def _frame_page(ctx: ProbeContext, cross_origin: bool):
    base = ctx.config.alt_origin_url if cross_origin else ctx.config.harness_base_url
    if not base:
        return None
    return ctx.browser.create_frame(base + "/pages/frame", timeout_s=ctx.budget_ms / 1000.0)


def _harness_missing() -> Outcome:
    return Outcome(
        TestStatus.INCONCLUSIVE, "Harness origin not configured; probe needs a live harness."
    )


# ---------------------------------------------------------------------------
# SOP
# ---------------------------------------------------------------------------


async def sop_same_origin_control(ctx: ProbeContext) -> Outcome:
    frame = _frame_page(ctx, cross_origin=False)
    if frame is None:
        return _harness_missing()
    ctx.add_cleanup(lambda: ctx.browser.remove_frame(frame))
    if frame.load_event != "load":
        return Outcome(TestStatus.INCONCLUSIVE, f"Frame never loaded: {frame.load_detail}")
    try:
        title = ctx.browser.frame_title(frame)
    except SecurityError as exc:
        return Outcome(TestStatus.FAIL, f"Same-origin frame read was denied: {exc}")
    ctx.success(f"Same-origin frame title readable: {title!r}")
    return Outcome(
        TestStatus.PASS, "Same-origin frame access works.", {"title": title}
    )


async def sop_frame_read(ctx: ProbeContext) -> Outcome:
    frame = _frame_page(ctx, cross_origin=True)
    if frame is None:
        return _harness_missing()
    ctx.add_cleanup(lambda: ctx.browser.remove_frame(frame))
    if frame.load_event != "load":
        return Outcome(TestStatus.INCONCLUSIVE, f"Frame never loaded: {frame.load_detail}")
    try:
        title = ctx.browser.frame_title(frame)
    except SecurityError as exc:
        ctx.success("Cross-origin document read raised a security exception.")
        return Outcome(
            TestStatus.PASS,
            "Cross-origin frame document read was blocked.",
            {"exception": str(exc)},
        )
    ctx.error(f"Cross-origin title was readable: {title!r}")
    return Outcome(
        TestStatus.FAIL,
        "Cross-origin frame document was readable: a serious SOP violation.",
        {"leaked_title": title},
    )


async def sop_frame_mutate(ctx: ProbeContext) -> Outcome:
    frame = _frame_page(ctx, cross_origin=True)
    if frame is None:
        return _harness_missing()
    ctx.add_cleanup(lambda: ctx.browser.remove_frame(frame))
    if frame.load_event != "load":
        return Outcome(TestStatus.INCONCLUSIVE, f"Frame never loaded: {frame.load_detail}")
    intruder = ctx.create_element("div", id="sop-intruder")
    try:
        ctx.browser.frame_append(frame, intruder)
    except SecurityError as exc:
        return Outcome(
            TestStatus.PASS,
            "Cross-origin DOM mutation was blocked.",
            {"exception": str(exc)},
        )
    return Outcome(
        TestStatus.FAIL,
        "Parent script mutated a cross-origin document: a serious SOP violation.",
    )


async def sop_cookie_isolation(ctx: ProbeContext) -> Outcome:
    frame = _frame_page(ctx, cross_origin=True)
    if frame is None:
        return _harness_missing()
    ctx.add_cleanup(lambda: ctx.browser.remove_frame(frame))
    if frame.load_event != "load":
        return Outcome(TestStatus.INCONCLUSIVE, f"Frame never loaded: {frame.load_detail}")
    own_cookies = ctx.browser.document_cookie()
    if "origin_tag=alt" in own_cookies:
        return Outcome(
            TestStatus.FAIL,
            "A cross-origin cookie is visible to this document.",
            {"document_cookie": own_cookies},
        )
    return Outcome(
        TestStatus.PASS,
        "Cross-origin cookies are not visible to this document.",
        {"document_cookie": own_cookies or "(empty)"},
    )


async def sop_document_domain(ctx: ProbeContext) -> Outcome:
    try:
        ctx.browser.set_document_domain(ctx.browser.origin.host)
    except SecurityError as exc:
        # Deprecation is the secure direction: rejecting the setter passes.
        return Outcome(
            TestStatus.PASS,
            "document.domain relaxation is rejected.",
            {"exception": str(exc)},
        )
    return Outcome(
        TestStatus.FAIL,
        "document.domain setter was permitted (legacy origin relaxation available).",
    )


async def sop_location_hash(ctx: ProbeContext) -> Outcome:
    frame = _frame_page(ctx, cross_origin=True)
    if frame is None:
        return _harness_missing()
    ctx.add_cleanup(lambda: ctx.browser.remove_frame(frame))
    if frame.load_event != "load":
        return Outcome(TestStatus.INCONCLUSIVE, f"Frame never loaded: {frame.load_detail}")
    ctx.browser.frame_location_hash_write(frame, "#posture-nav")
    try:
        observed = ctx.browser.frame_location_hash_read(frame)
    except SecurityError as exc:
        return Outcome(
            TestStatus.PASS,
            "Cross-frame navigation is permitted but location read-back is blocked.",
            {"exception": str(exc)},
        )
    return Outcome(
        TestStatus.FAIL,
        "Cross-origin frame location was readable.",
        {"leaked_hash": observed},
    )


# ---------------------------------------------------------------------------
# CORS
# ---------------------------------------------------------------------------


async def run_cors_scenario(ctx: ProbeContext, scenario: CorsScenario) -> Outcome:
    if not ctx.config.alt_origin_url:
        return _harness_missing()
    url = ctx.config.alt_origin_url + scenario.endpoint_path
    evidence: dict[str, str] = {"url": url, "method": scenario.method.upper()}

    preflights_before: int | None = None
    if scenario.expect_preflight:
        preflights_before = await _preflight_counter(ctx)

    try:
        response = await ctx.io(
            ctx.browser.fetch,
            url,
            scenario.method,
            dict(scenario.custom_headers),
            None,
            "cors",
            ctx.budget_ms / 1000.0,
        )
        allowed = True
        evidence["body_bytes"] = str(len(response.body))
    except CorsError as exc:
        allowed = False
        evidence["rejection"] = str(exc)
    except (ConnectError, TimeoutError_) as exc:
        return Outcome(TestStatus.INCONCLUSIVE, f"Harness unreachable: {exc}")

    if scenario.expect_preflight and preflights_before is not None:
        preflights_after = await _preflight_counter(ctx)
        if preflights_after is not None:
            delta = preflights_after - preflights_before
            evidence["preflight_delta"] = str(delta)
            if allowed and delta != 1:
                return Outcome(
                    TestStatus.FAIL,
                    f"Expected exactly one preflight, harness counted {delta}.",
                    evidence,
                )

    if allowed == scenario.expect_allowed:
        detail = (
            "Cross-origin response was readable as the server permitted."
            if allowed
            else "Disallowed cross-origin response was rejected with an opaque error."
        )
        return Outcome(TestStatus.PASS, detail, evidence)
    if allowed:
        return Outcome(
            TestStatus.FAIL,
            "Readable body for a response the server never authorized.",
            evidence,
        )
    return Outcome(
        TestStatus.FAIL, "Authorized cross-origin request was rejected.", evidence
    )


async def _preflight_counter(ctx: ProbeContext) -> int | None:
    try:
        response = await ctx.io(ctx.browser.fetch, "/cors/status")
        return int(json.loads(response.body).get("preflights", 0))
    except (FetchError, ValueError):
        return None


async def cors_none(ctx: ProbeContext) -> Outcome:
    return await run_cors_scenario(ctx, default_cors_scenarios()[0])


async def cors_wildcard(ctx: ProbeContext) -> Outcome:
    return await run_cors_scenario(ctx, default_cors_scenarios()[1])


async def cors_preflight(ctx: ProbeContext) -> Outcome:
    return await run_cors_scenario(ctx, default_cors_scenarios()[2])


# ---------------------------------------------------------------------------
# CSP
# ---------------------------------------------------------------------------


def _csp_frame(ctx: ProbeContext, page: str = "/pages/csp-strict"):
    if not ctx.config.harness_base_url:
        return None
    return ctx.browser.create_frame(
        ctx.config.harness_base_url + page, timeout_s=ctx.budget_ms / 1000.0
    )


async def csp_inline_block(ctx: ProbeContext) -> Outcome:
    frame = _csp_frame(ctx)
    if frame is None:
        return _harness_missing()
    ctx.add_cleanup(lambda: ctx.browser.remove_frame(frame))
    if frame.load_event != "load":
        return Outcome(TestStatus.INCONCLUSIVE, f"Frame never loaded: {frame.load_detail}")

    evidence: dict[str, str] = {}
    if frame.csp is None:
        # No enforceable header policy: check the meta-tag fallback context,
        # but the header mode stays authoritative for the verdict.
        meta_frame = _csp_frame(ctx, "/pages/csp-meta")
        if meta_frame is not None:
            ctx.add_cleanup(lambda: ctx.browser.remove_frame(meta_frame))
            sentinel = f"__probe_{uuid.uuid4().hex}__"
            ctx.browser.run_inline_script(meta_frame, f"window.{sentinel} = true")
            evidence["meta_mode"] = (
                "enforced" if sentinel not in meta_frame.sentinels else "not enforced"
            )
        return Outcome(
            TestStatus.FAIL,
            "Engine does not enforce a standard CSP delivered by header.",
            evidence,
        )
    evidence["policy_source"] = frame.csp.source

    sentinel = f"__probe_{uuid.uuid4().hex}__"
    ctx.browser.run_inline_script(frame, f"window.{sentinel} = true")
    executed = await _wait_sentinel(ctx, frame, sentinel)
    violation_seen = any(v.blocked_uri == "inline" for v in frame.violations)
    evidence["violation_event"] = "seen" if violation_seen else "not seen"

    if executed:
        ctx.error("Inline script ran under script-src 'self'.")
        return Outcome(
            TestStatus.FAIL, "Inline script executed despite the policy.", evidence
        )
    if not violation_seen:
        evidence["note"] = "no violation event API; decided on sentinel alone"
    ctx.success("Inline script injection was blocked and a violation event fired.")
    return Outcome(TestStatus.PASS, "Inline script injection was blocked.", evidence)


async def csp_external_block(ctx: ProbeContext) -> Outcome:
    frame = _csp_frame(ctx)
    if frame is None or not ctx.config.alt_origin_url:
        return _harness_missing()
    ctx.add_cleanup(lambda: ctx.browser.remove_frame(frame))
    if frame.load_event != "load":
        return Outcome(TestStatus.INCONCLUSIVE, f"Frame never loaded: {frame.load_detail}")
    if frame.csp is None:
        return Outcome(TestStatus.FAIL, "Engine does not enforce a standard CSP.")

    script_url = ctx.config.alt_origin_url + "/static/evil.js"
    ctx.browser.inject_external_script(frame, script_url)
    executed = await _wait_sentinel(ctx, frame, "__cspExternal__")
    violation_seen = any(v.blocked_uri == script_url for v in frame.violations)
    evidence = {
        "script_url": script_url,
        "violation_event": "seen" if violation_seen else "not seen",
    }
    if executed:
        return Outcome(
            TestStatus.FAIL,
            "Script from a disallowed origin loaded under script-src 'self'.",
            evidence,
        )
    return Outcome(
        TestStatus.PASS, "Disallowed-origin script was blocked.", evidence
    )


async def csp_allowed_control(ctx: ProbeContext) -> Outcome:
    frame = _csp_frame(ctx)
    if frame is None:
        return _harness_missing()
    ctx.add_cleanup(lambda: ctx.browser.remove_frame(frame))
    if frame.load_event != "load":
        return Outcome(TestStatus.INCONCLUSIVE, f"Frame never loaded: {frame.load_detail}")
    if frame.csp is None:
        return Outcome(TestStatus.FAIL, "Engine does not enforce a standard CSP.")
    ctx.browser.inject_external_script(
        frame, ctx.config.harness_base_url + "/static/ok.js"
    )
    executed = await _wait_sentinel(ctx, frame, "__cspControl__")
    if executed:
        return Outcome(TestStatus.PASS, "Allowed same-origin script executed.")
    return Outcome(
        TestStatus.FAIL, "Script permitted by the policy ('self') did not run."
    )


# ---------------------------------------------------------------------------
# XSS filter
# ---------------------------------------------------------------------------

XSS_PAYLOAD = "<script>success(1)</script>"


async def xss_reflected_filter(ctx: ProbeContext) -> Outcome:
    if not ctx.config.harness_base_url:
        return _harness_missing()
    from urllib.parse import quote

    url = (
        ctx.config.harness_base_url
        + "/pages/reflect?xss=1&q="
        + quote(XSS_PAYLOAD, safe="")
    )
    frame = ctx.browser.create_frame(url, timeout_s=ctx.budget_ms / 1000.0)
    ctx.add_cleanup(lambda: ctx.browser.remove_frame(frame))
    if frame.load_event != "load":
        return Outcome(
            TestStatus.INCONCLUSIVE, f"Reflect page unreachable: {frame.load_detail}"
        )
    if frame.csp is not None:
        return Outcome(
            TestStatus.INCONCLUSIVE,
            "Reflect page is served with a CSP; the filter measurement is confounded.",
            {"note": "CSP blocked the reflected script regardless of any filter"},
        )
    executed = "success(1)" in frame.executed_calls
    if executed:
        ctx.info("Reflected script executed; engine ships no built-in XSS filter.")
        return Outcome(
            TestStatus.NOT_APPLICABLE,
            "No built-in XSS filter, rely on CSP.",
            {"payload": XSS_PAYLOAD, "variant": "header on"},
        )
    variant = "header on (X-XSS-Protection)" if frame.xss_filtered else "always on"
    return Outcome(
        TestStatus.PASS,
        "Reflected script was detected and blocked by the XSS filter.",
        {"payload": XSS_PAYLOAD, "variant": variant},
    )


# ---------------------------------------------------------------------------
# Sandbox
# ---------------------------------------------------------------------------


def _sandbox_frame(ctx: ProbeContext, flags: set[str] | None):
    if not ctx.config.harness_base_url:
        return None
    return ctx.browser.create_frame(
        ctx.config.harness_base_url + "/pages/sandbox-child",
        sandbox=flags,
        timeout_s=ctx.budget_ms / 1000.0,
    )


async def sandbox_script_block(ctx: ProbeContext) -> Outcome:
    frame = _sandbox_frame(ctx, set())  # no flags: fully restricted
    if frame is None:
        return _harness_missing()
    ctx.add_cleanup(lambda: ctx.browser.remove_frame(frame))
    if frame.load_event != "load":
        return Outcome(TestStatus.INCONCLUSIVE, f"Frame never loaded: {frame.load_detail}")
    executed = await _wait_sentinel(ctx, frame, "__sandboxSentinel__")
    if executed:
        return Outcome(
            TestStatus.FAIL, "Script ran inside a fully restricted sandbox frame."
        )
    return Outcome(
        TestStatus.PASS, "Fully restricted sandbox prevented script execution."
    )


async def sandbox_parent_access(ctx: ProbeContext) -> Outcome:
    frame = _sandbox_frame(ctx, {"allow-scripts"})
    if frame is None:
        return _harness_missing()
    ctx.add_cleanup(lambda: ctx.browser.remove_frame(frame))
    if frame.load_event != "load":
        return Outcome(TestStatus.INCONCLUSIVE, f"Frame never loaded: {frame.load_detail}")
    await _wait_sentinel(ctx, frame, "__sandboxSentinel__")
    messages = ctx.browser.poll_messages(frame)
    if "PARENT_ACCESS_OK" in messages:
        return Outcome(
            TestStatus.FAIL,
            "Sandboxed frame reached its parent document: sandbox escape.",
            {"messages": ", ".join(messages)},
        )
    if "PARENT_ACCESS_BLOCKED" in messages:
        return Outcome(
            TestStatus.PASS,
            "Sandboxed frame was denied parent access.",
            {"messages": ", ".join(messages)},
        )
    return Outcome(
        TestStatus.INCONCLUSIVE,
        "Sandbox child never reported its parent-access attempt.",
        {"messages": ", ".join(messages) or "(none)"},
    )


async def sandbox_allow_scripts_control(ctx: ProbeContext) -> Outcome:
    frame = _sandbox_frame(ctx, {"allow-scripts"})
    if frame is None:
        return _harness_missing()
    ctx.add_cleanup(lambda: ctx.browser.remove_frame(frame))
    if frame.load_event != "load":
        return Outcome(TestStatus.INCONCLUSIVE, f"Frame never loaded: {frame.load_detail}")
    executed = await _wait_sentinel(ctx, frame, "__sandboxSentinel__")
    if not executed:
        return Outcome(
            TestStatus.FAIL, "allow-scripts frame did not execute its script."
        )
    try:
        ctx.browser.frame_title(frame)
        same_origin_denied = False
    except SecurityError:
        same_origin_denied = True
    if same_origin_denied:
        return Outcome(
            TestStatus.PASS,
            "allow-scripts grants execution while same-origin access stays denied.",
        )
    return Outcome(
        TestStatus.FAIL,
        "allow-scripts frame retained same-origin access without allow-same-origin.",
    )


# ---------------------------------------------------------------------------
# Descriptors and operation fronts
# ---------------------------------------------------------------------------

_GROUP = "policy"


def descriptors() -> list[ProbeDescriptor]:
    mk = ProbeDescriptor
    return [
        mk("sop.same_origin", "policy", "SOP Same-Origin Control", sop_same_origin_control,
           sequential_group=_GROUP, is_control=True),
        mk("sop.iframe", "policy", "SOP Cross-Origin Frame Read", sop_frame_read,
           sequential_group=_GROUP, control_id="sop.same_origin"),
        mk("sop.mutate", "policy", "SOP Cross-Origin Frame Mutation", sop_frame_mutate,
           sequential_group=_GROUP, control_id="sop.same_origin"),
        mk("sop.cookie", "policy", "SOP Cookie Isolation", sop_cookie_isolation,
           sequential_group=_GROUP, control_id="sop.same_origin"),
        mk("sop.domain", "policy", "document.domain Relaxation", sop_document_domain,
           sequential_group=_GROUP),
        mk("sop.hash", "policy", "Cross-Frame Location Read", sop_location_hash,
           sequential_group=_GROUP, control_id="sop.same_origin"),
        mk("cors.none", "policy", "CORS: No Headers Rejected", cors_none,
           sequential_group=_GROUP),
        mk("cors.wildcard", "policy", "CORS: Wildcard Allowed", cors_wildcard,
           sequential_group=_GROUP),
        mk("cors.preflight", "policy", "CORS: Preflighted PUT", cors_preflight,
           sequential_group=_GROUP),
        mk("csp.inline", "policy", "CSP Inline Script Block", csp_inline_block,
           sequential_group=_GROUP, control_id="csp.control"),
        mk("csp.external", "policy", "CSP Disallowed Origin Block", csp_external_block,
           sequential_group=_GROUP, control_id="csp.control"),
        mk("csp.control", "policy", "CSP Allowed Script Control", csp_allowed_control,
           sequential_group=_GROUP, is_control=True),
        mk("xss.filter", "policy", "Reflected XSS Filter", xss_reflected_filter,
           sequential_group=_GROUP),
        mk("sandbox.scripts", "policy", "Sandbox Script Restriction", sandbox_script_block,
           sequential_group=_GROUP, control_id="sandbox.control"),
        mk("sandbox.parent", "policy", "Sandbox Parent Isolation", sandbox_parent_access,
           sequential_group=_GROUP, control_id="sandbox.control"),
        mk("sandbox.control", "policy", "Sandbox Flag Granularity Control",
           sandbox_allow_scripts_control, sequential_group=_GROUP, is_control=True),
    ]


def _family(prefix: tuple[str, ...]) -> list[ProbeDescriptor]:
    return [d for d in descriptors() if d.test_id.startswith(prefix)]


def test_sop(browser, config=None):
    from .common import run_descriptors

    return run_descriptors(_family(("sop.",)), browser, config)


def test_cors(scenarios: list[CorsScenario], browser, config=None):
    from .common import run_descriptors

    built = [
        ProbeDescriptor(
            test_id=f"cors.{s.name}",
            module="policy",
            title=f"CORS Scenario: {s.name}",
            run=(lambda sc: (lambda ctx: run_cors_scenario(ctx, sc)))(s),
            sequential_group=_GROUP,
        )
        for s in scenarios
    ]
    return run_descriptors(built, browser, config)


def test_csp(browser, config=None):
    from .common import run_descriptors

    return run_descriptors(_family(("csp.",)), browser, config)


def test_xss_filter(browser, config=None):
    from .common import run_descriptors

    return run_descriptors(_family(("xss.",)), browser, config)[0]


def test_sandbox(browser, config=None):
    from .common import run_descriptors

    return run_descriptors(_family(("sandbox.",)), browser, config)
