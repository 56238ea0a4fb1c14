"""Platform crypto surface: digest, keygen, AEAD roundtrip, CSPRNG seam."""

from __future__ import annotations

import hashlib
import os
import random
from dataclasses import dataclass, field
from typing import Any, Callable

from cryptography.exceptions import UnsupportedAlgorithm
from cryptography.hazmat.primitives.asymmetric import ec, rsa
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

ByteSource = Callable[[int], bytes]

_CURVES = {
    "P-256": ec.SECP256R1,
    "P-384": ec.SECP384R1,
    "P-521": ec.SECP521R1,
}

_HASHES = {"SHA-256", "SHA-384", "SHA-512", "SHA-1"}


class CryptoOperationError(Exception):
    pass


@dataclass
class GeneratedKey:
    algorithm: str
    usages: list[str]
    handle: Any


class SubtleCrypto:
    """Key generation and the primitives the probes exercise."""

    def digest(self, algorithm: str, data: bytes) -> bytes:
        name = algorithm.replace("-", "").lower()
        try:
            return hashlib.new(name, data).digest()
        except ValueError as exc:
            raise CryptoOperationError(f"unsupported digest {algorithm}") from exc

    def generate_key(self, params: dict[str, Any], usages: list[str]) -> GeneratedKey:
        name = params.get("name")
        if name == "AES-GCM":
            length = params.get("length")
            if length not in (128, 192, 256):
                raise CryptoOperationError(f"AES-GCM length {length} not supported")
            return GeneratedKey("AES-GCM", usages, AESGCM(os.urandom(length // 8)))
        if name == "RSA-OAEP":
            modulus = params.get("modulusLength")
            exponent_bytes = params.get("publicExponent")
            hash_name = params.get("hash")
            if modulus not in (2048, 3072, 4096):
                raise CryptoOperationError(f"RSA modulus {modulus} not supported")
            if bytes(exponent_bytes or b"") != bytes([1, 0, 1]):
                raise CryptoOperationError("public exponent must be 65537")
            if hash_name not in _HASHES:
                raise CryptoOperationError(f"unsupported hash {hash_name}")
            try:
                key = rsa.generate_private_key(public_exponent=65537, key_size=modulus)
            except (ValueError, UnsupportedAlgorithm) as exc:
                raise CryptoOperationError(str(exc)) from exc
            return GeneratedKey("RSA-OAEP", usages, key)
        if name == "ECDSA":
            curve_name = params.get("namedCurve")
            curve = _CURVES.get(curve_name or "")
            if curve is None:
                raise CryptoOperationError(f"unsupported curve {curve_name!r}")
            return GeneratedKey("ECDSA", usages, ec.generate_private_key(curve()))
        raise CryptoOperationError(f"unsupported algorithm {name!r}")

    def aes_gcm_encrypt(
        self, key: GeneratedKey, nonce: bytes, plaintext: bytes, aad: bytes | None = None
    ) -> bytes:
        if key.algorithm != "AES-GCM":
            raise CryptoOperationError("key is not an AES-GCM key")
        return key.handle.encrypt(nonce, plaintext, aad)

    def aes_gcm_decrypt(
        self, key: GeneratedKey, nonce: bytes, ciphertext: bytes, aad: bytes | None = None
    ) -> bytes:
        if key.algorithm != "AES-GCM":
            raise CryptoOperationError("key is not an AES-GCM key")
        try:
            return key.handle.decrypt(nonce, ciphertext, aad)
        except Exception as exc:
            raise CryptoOperationError(f"decryption failed: {exc}") from exc


@dataclass
class CryptoProvider:
    """What ``window.crypto`` would expose, with an injectable byte source."""

    source: ByteSource = os.urandom
    subtle: SubtleCrypto | None = field(default_factory=SubtleCrypto)
    _weak_rng: random.Random = field(default_factory=random.Random)

    def get_random_values(self, n: int) -> bytes:
        data = self.source(n)
        if len(data) != n:
            raise CryptoOperationError("byte source returned wrong length")
        return data

    def math_random(self) -> float:
        """The non-cryptographic generator; only sanity-checked, never gated."""
        return self._weak_rng.random()
