"""Crypto surface probes: primitive roundtrips, algorithm support, RNG
quality, and native-function tamper detection."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

from ..env.browser import pristine_source, _CANONICAL_NATIVES
from ..env.crypto import CryptoOperationError
from ..model import Polarity, TestStatus
from ..registry import ProbeDescriptor
from ..scheduler import Outcome, ProbeContext

#: Fixed inputs keep failures reproducible across runs.
FIXED_PLAINTEXT = b"browser-posture-probe"
FIXED_AAD = b"posture-probe-aad"
SHA256_EMPTY_HEX = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"

NATIVE_CODE_MARKER = "[native code]"
DEFAULT_NATIVE_IDENTIFIERS = [
    "crypto.getRandomValues",
    "crypto.subtle.digest",
    "fetch",
    "WebSocket",
]


@dataclass
class AlgorithmSpec:
    name: str
    generation_parameters: dict[str, Any]
    usages: list[str]


def default_algorithm_specs() -> list[AlgorithmSpec]:
    return [
        AlgorithmSpec(
            "AES-GCM", {"name": "AES-GCM", "length": 256}, ["encrypt", "decrypt"]
        ),
        AlgorithmSpec(
            "RSA-OAEP",
            {
                "name": "RSA-OAEP",
                "modulusLength": 2048,
                "publicExponent": bytes([1, 0, 1]),
                "hash": "SHA-256",
            },
            ["encrypt", "decrypt"],
        ),
        AlgorithmSpec(
            "ECDSA", {"name": "ECDSA", "namedCurve": "P-256"}, ["sign", "verify"]
        ),
    ]


# ---------------------------------------------------------------------------
# RNG statistics (pure; the probe feeds it platform bytes)
# ---------------------------------------------------------------------------


@dataclass
class RngStats:
    total_bits: int
    zero_pct: float
    one_pct: float
    sequential_repeats: int
    batch_count: int
    identical_batches: int
    chi_square_255: float

    def as_evidence(self) -> dict[str, str]:
        return {
            "total_bits": str(self.total_bits),
            "zero_pct": f"{self.zero_pct:.4f}",
            "one_pct": f"{self.one_pct:.4f}",
            "sequential_repeats": str(self.sequential_repeats),
            "batch_count": str(self.batch_count),
            "identical_batches": str(self.identical_batches),
            "chi_square_255": f"{self.chi_square_255:.4f}",
        }


def compute_rng_stats(buffer: bytes, batches: list[bytes]) -> RngStats:
    """Bit balance and repeat statistics over a primary buffer plus batches."""
    total_bits = len(buffer) * 8
    ones = sum(byte.bit_count() for byte in buffer)
    zeros = total_bits - ones
    zero_pct = (zeros / total_bits) * 100.0 if total_bits else 0.0
    one_pct = (ones / total_bits) * 100.0 if total_bits else 0.0

    repeats = sum(1 for i in range(1, len(buffer)) if buffer[i] == buffer[i - 1])

    identical = 0
    for i in range(len(batches)):
        for j in range(i + 1, len(batches)):
            if batches[i] == batches[j]:
                identical += 1

    pooled = bytes(buffer) + b"".join(batches)
    counts = [0] * 256
    for byte in pooled:
        counts[byte] += 1
    expected = len(pooled) / 256.0 if pooled else 0.0
    chi_square = (
        sum((c - expected) ** 2 / expected for c in counts) if expected else 0.0
    )

    return RngStats(
        total_bits=total_bits,
        zero_pct=zero_pct,
        one_pct=one_pct,
        sequential_repeats=repeats,
        batch_count=len(batches),
        identical_batches=identical,
        chi_square_255=chi_square,
    )


def rng_gate(stats: RngStats) -> bool:
    """The published pass gates: bit balance, adjacent repeats, distinct batches."""
    balanced = abs(stats.zero_pct - 50.0) < 5.0
    too_many_repeats = stats.sequential_repeats > 10
    return balanced and not too_many_repeats and stats.identical_batches == 0


# ---------------------------------------------------------------------------
# Probes
# ---------------------------------------------------------------------------


async def subtle_roundtrip(ctx: ProbeContext) -> Outcome:
    subtle = ctx.browser.crypto.subtle
    if subtle is None:
        return Outcome(TestStatus.FAIL, "SubtleCrypto not supported")
    step = "generateKey"
    try:
        key = subtle.generate_key({"name": "AES-GCM", "length": 256}, ["encrypt", "decrypt"])
        step = "encrypt"
        nonce = ctx.browser.crypto.get_random_values(12)
        ciphertext = subtle.aes_gcm_encrypt(key, nonce, FIXED_PLAINTEXT, FIXED_AAD)
        step = "decrypt"
        plaintext = subtle.aes_gcm_decrypt(key, nonce, ciphertext, FIXED_AAD)
    except CryptoOperationError as exc:
        return Outcome(TestStatus.FAIL, f"AES-GCM {step} step failed: {exc}")
    if plaintext != FIXED_PLAINTEXT:
        return Outcome(
            TestStatus.FAIL, "Decrypted output does not match the original plaintext."
        )
    ctx.success("AES-GCM encrypt/decrypt roundtrip returned the original message.")
    return Outcome(
        TestStatus.PASS,
        "AES-GCM-256 roundtrip returned the original plaintext.",
        {"ciphertext_bytes": str(len(ciphertext))},
    )


async def sha256_vector(ctx: ProbeContext) -> Outcome:
    subtle = ctx.browser.crypto.subtle
    if subtle is None:
        return Outcome(TestStatus.FAIL, "SubtleCrypto not supported")
    try:
        digest = subtle.digest("SHA-256", b"")
    except CryptoOperationError as exc:
        return Outcome(TestStatus.FAIL, f"digest step failed: {exc}")
    observed = digest.hex()
    if observed != SHA256_EMPTY_HEX:
        return Outcome(
            TestStatus.FAIL,
            "SHA-256 of the empty input does not match the known vector.",
            {"observed": observed, "expected": SHA256_EMPTY_HEX},
        )
    return Outcome(TestStatus.PASS, "SHA-256 known-vector digest matches.")


def _algorithm_probe(spec: AlgorithmSpec) -> Callable:
    async def run(ctx: ProbeContext) -> Outcome:
        subtle = ctx.browser.crypto.subtle
        if subtle is None:
            return Outcome(TestStatus.NOT_APPLICABLE, "SubtleCrypto not supported")
        try:
            await ctx.io(subtle.generate_key, spec.generation_parameters, spec.usages)
        except CryptoOperationError as exc:
            ctx.error(f"{spec.name} is not supported: {exc}")
            return Outcome(
                TestStatus.FAIL, f"{spec.name} key generation failed: {exc}"
            )
        ctx.success(f"{spec.name} is supported")
        return Outcome(TestStatus.PASS, f"{spec.name} key generation succeeded.")

    return run


async def analyze_rng_probe(ctx: ProbeContext) -> Outcome:
    outcome, _ = analyze_rng(ctx)
    return outcome


def analyze_rng(
    ctx: ProbeContext,
    buffer_bytes: int = 1024,
    batches: int = 8,
    batch_bytes: int = 256,
    source: Callable[[int], bytes] | None = None,
) -> tuple[Outcome, RngStats | None]:
    if not getattr(ctx.browser.profile, "rng_available", True):
        return (
            Outcome(TestStatus.ERROR, "crypto.getRandomValues is not available"),
            None,
        )
    draw = source or ctx.browser.crypto.get_random_values
    buffer = draw(buffer_bytes)
    batch_list = [draw(batch_bytes) for _ in range(batches)]
    stats = compute_rng_stats(buffer, batch_list)

    ctx.info(f"Zero bits: {stats.zero_pct:.2f}%")
    ctx.info(f"One bits: {stats.one_pct:.2f}%")
    ctx.info(f"Sequential repeats: {stats.sequential_repeats}")

    evidence = stats.as_evidence()
    distinct = _math_random_distinct(ctx)
    if distinct is not None:
        evidence["math_random_distinct"] = distinct

    if rng_gate(stats):
        ctx.success("Randomness quality looks acceptable.")
        return Outcome(TestStatus.PASS, "Randomness quality looks acceptable.", evidence), stats
    ctx.warning("Potential issue in randomness quality detected.")
    return (
        Outcome(
            TestStatus.FAIL, "Potential issue in randomness quality detected.", evidence
        ),
        stats,
    )


def _math_random_distinct(ctx: ProbeContext) -> str | None:
    # Informational only: the non-crypto generator has no published gate,
    # so a trivially stuck output is logged, never failed.
    try:
        draws = [ctx.browser.crypto.math_random() for _ in range(100)]
    except Exception:
        return None
    distinct = len(set(draws))
    if distinct < 100:
        ctx.info(f"Non-crypto RNG produced only {distinct}/100 distinct values.")
    return f"{distinct}/100"


def _native_probe(identifier: str) -> Callable:
    async def run(ctx: ProbeContext) -> Outcome:
        realm = ctx.browser.realm
        fn = realm.get(identifier)
        if fn is None:
            return Outcome(
                TestStatus.NOT_APPLICABLE,
                f"Identifier {identifier} did not resolve.",
            )
        source = pristine_source(fn)
        pristine = _CANONICAL_NATIVES.get(identifier)
        marker_present = NATIVE_CODE_MARKER in source
        same_as_fresh_realm = pristine is not None and fn is pristine
        evidence = {
            "source": source,
            "marker": "present" if marker_present else "absent",
            "fresh_realm_match": str(same_as_fresh_realm),
        }
        if marker_present and same_as_fresh_realm:
            return Outcome(
                TestStatus.PASS,
                f"{identifier} stringifies to native code and matches an untouched realm.",
                evidence,
            )
        return Outcome(
            TestStatus.DETECTED,
            f"{identifier} has been wrapped or replaced (native-code marker "
            f"{'present' if marker_present else 'absent'}).",
            evidence,
        )

    return run


def check_native_integrity(browser, identifiers: list[str] | None = None, config=None):
    from .common import run_descriptors

    identifiers = identifiers or DEFAULT_NATIVE_IDENTIFIERS
    built = [
        ProbeDescriptor(
            test_id=f"crypto.native.{ident.split('.')[-1].lower()}",
            module="crypto",
            title=f"Native Integrity: {ident}",
            run=_native_probe(ident),
            polarity=Polarity.DETECTED_IS_BAD,
        )
        for ident in identifiers
    ]
    return run_descriptors(built, browser, config)


def test_subtle_roundtrip(browser, config=None):
    from .common import run_descriptors

    return run_descriptors(_family(("crypto.roundtrip", "crypto.digest")), browser, config)


def test_algorithm_support(specs, browser, config=None):
    from .common import run_descriptors

    built = [
        ProbeDescriptor(
            test_id=f"crypto.alg.{spec.name.replace('-', '_').lower()}",
            module="crypto",
            title=f"Algorithm Support: {spec.name}",
            run=_algorithm_probe(spec),
        )
        for spec in specs
    ]
    return run_descriptors(built, browser, config)


def _family(prefix: tuple[str, ...]) -> list[ProbeDescriptor]:
    return [d for d in descriptors() if d.test_id.startswith(prefix)]


def descriptors() -> list[ProbeDescriptor]:
    mk = ProbeDescriptor
    items = [
        mk("crypto.roundtrip", "crypto", "SubtleCrypto AES-GCM Roundtrip", subtle_roundtrip),
        mk("crypto.digest", "crypto", "SHA-256 Known Vector", sha256_vector),
    ]
    for spec in default_algorithm_specs():
        items.append(
            mk(
                f"crypto.alg.{spec.name.replace('-', '_').lower()}",
                "crypto",
                f"Algorithm Support: {spec.name}",
                _algorithm_probe(spec),
            )
        )
    items.append(
        mk("crypto.rng", "crypto", "Cryptographic RNG Quality", analyze_rng_probe)
    )
    for ident in DEFAULT_NATIVE_IDENTIFIERS:
        items.append(
            mk(
                f"crypto.native.{ident.split('.')[-1].lower()}",
                "crypto",
                f"Native Integrity: {ident}",
                _native_probe(ident),
                polarity=Polarity.DETECTED_IS_BAD,
            )
        )
    return items
