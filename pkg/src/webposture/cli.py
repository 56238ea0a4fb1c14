"""Command-line front: run the suite against a harness, or host the harness."""

from __future__ import annotations

import argparse
import asyncio
import json
import signal
import sys
from pathlib import Path

from . import __version__
from .advisor import advise
from .baseline import compare_baseline
from .config import RunConfig
from .env import Browser
from .model import Baseline, TestResult, TestStatus
from .registry import default_battery
from .scheduler import run_suite_async
from .serialization import report_to_dict, serialize_report


def _result_line(result: TestResult) -> dict:
    from .serialization import result_to_dict

    return {"event": "result", **result_to_dict(result)}


def _load_baseline(path: str) -> Baseline:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    expected = {
        test_id: TestStatus(status) for test_id, status in data.get("expected", {}).items()
    }
    return Baseline(
        expected=expected,
        expected_permissions=dict(data.get("expected_permissions", {})),
    )


def _cmd_run(args: argparse.Namespace) -> int:
    budgets: dict[str, float] = {}
    for item in args.budget_ms or []:
        test_id, _, value = item.partition("=")
        if not value:
            print(f"invalid --budget-ms entry {item!r}; expected id=ms", file=sys.stderr)
            return 2
        budgets[test_id] = float(value)

    enabled = set(args.tests.split(",")) if args.tests else None
    baseline = _load_baseline(args.baseline) if args.baseline else None

    if args.harness_url:
        config = RunConfig.from_manifest(
            args.harness_url,
            enabled_tests=enabled,
            budgets=budgets,
            concurrency=args.concurrency,
            collector_url=args.collector,
            baseline=baseline,
        )
        browser = Browser(page_url=config.harness_base_url + "/")
    else:
        config = RunConfig(
            enabled_tests=enabled,
            budgets=budgets,
            concurrency=args.concurrency,
            collector_url=args.collector,
            baseline=baseline,
        )
        browser = Browser()

    def stream(obj: dict) -> None:
        if args.stream:
            print(json.dumps(obj, ensure_ascii=False), flush=True)

    registry = default_battery()
    total = len(
        registry.ids()
        if config.enabled_tests is None
        else [tid for tid in registry.ids() if tid in config.enabled_tests]
    )
    stream({"event": "started", "total": total, "agent_version": __version__})

    cancel = asyncio.Event()

    async def _go():
        loop = asyncio.get_running_loop()
        try:
            loop.add_signal_handler(signal.SIGINT, cancel.set)
            loop.add_signal_handler(signal.SIGTERM, cancel.set)
        except NotImplementedError:
            pass
        return await run_suite_async(
            config,
            browser=browser,
            registry=registry,
            on_result=lambda r: stream(_result_line(r)),
            cancel_event=cancel,
        )

    report = asyncio.run(_go())
    text = serialize_report(report)

    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    stream({"event": "done", "report": report_to_dict(report)})

    if not args.stream:
        if args.out:
            print(f"report written to {args.out}")
        else:
            print(text)
        for rec in advise(report.results, baseline):
            print(f"[{rec.severity.value}] {rec.trigger_test_id}: {rec.text}", file=sys.stderr)
        if baseline is not None:
            for dev in compare_baseline(report, baseline):
                print(
                    f"[deviation] {dev.test_id}: expected {dev.expected}, observed {dev.observed}",
                    file=sys.stderr,
                )
    return 0


def _cmd_harness(args: argparse.Namespace) -> int:
    from .harness import Harness, HarnessConfig

    config = HarnessConfig(
        host=args.host,
        primary_port=args.primary_port,
        alt_origin_port=args.alt_port,
        bait_port=args.bait_port,
        open_ws_ports=[int(p) for p in args.ws_ports.split(",")] if args.ws_ports else [0, 0, 0],
        data_dir=Path(args.data_dir),
        allowed_report_origin=args.allow_origin,
    )
    harness = Harness(config).start()
    print(f"harness manifest at {harness.base_url}/manifest", flush=True)
    print(json.dumps(harness.manifest(), indent=2), flush=True)
    try:
        signal.pause()
    except (KeyboardInterrupt, AttributeError):
        pass
    finally:
        harness.stop()
    return 0


def _cmd_battery(_args: argparse.Namespace) -> int:
    for descriptor in default_battery():
        print(f"{descriptor.test_id:32s} {descriptor.module:12s} {descriptor.title}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="webposture",
        description="Run the browser security posture probe battery.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run the probe suite")
    run_p.add_argument("--harness-url", help="base URL of a running harness (self-configures from /manifest)")
    run_p.add_argument("--tests", help="comma-separated test ids (default: all)")
    run_p.add_argument("--budget-ms", action="append", metavar="ID=MS", help="per-test budget override")
    run_p.add_argument("--concurrency", type=int, default=1)
    run_p.add_argument("--collector", help="collector URL to POST the report to")
    run_p.add_argument("--baseline", help="baseline JSON file for deviation checks")
    run_p.add_argument("--out", help="write the canonical report JSON to this file")
    run_p.add_argument("--stream", action="store_true", help="emit NDJSON progress events on stdout")
    run_p.set_defaults(func=_cmd_run)

    harness_p = sub.add_parser("harness", help="host the local test harness")
    harness_p.add_argument("--host", default="127.0.0.1")
    harness_p.add_argument("--primary-port", type=int, default=0)
    harness_p.add_argument("--alt-port", type=int, default=0)
    harness_p.add_argument("--bait-port", type=int, default=0)
    harness_p.add_argument("--ws-ports", help="comma-separated WebSocket echo ports")
    harness_p.add_argument("--data-dir", default="harness-data")
    harness_p.add_argument("--allow-origin", help="origin allowed to POST reports")
    harness_p.set_defaults(func=_cmd_harness)

    battery_p = sub.add_parser("battery", help="list the registered probes")
    battery_p.set_defaults(func=_cmd_battery)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
