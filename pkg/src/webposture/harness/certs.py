"""Ephemeral, deliberately defective TLS material for the harness listeners.

Everything is generated per run and never trusted system-wide. A
trusted-but-expired chain cannot be fabricated locally, so the expired
profile is an untrusted-root chain whose leaf is also expired; verifying
clients that load the ephemeral CA still see the expiry as the failure.
"""

from __future__ import annotations

import datetime
import hashlib
import ipaddress
from dataclasses import dataclass
from pathlib import Path

from cryptography import x509
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric import ec
from cryptography.x509.oid import NameOID


@dataclass
class CertMaterial:
    cert_path: Path
    key_path: Path
    fingerprint_sha256: str


@dataclass
class HarnessCerts:
    ca_pem: str
    ca_path: Path
    profiles: dict[str, CertMaterial]


def _name(common_name: str) -> x509.Name:
    return x509.Name([x509.NameAttribute(NameOID.COMMON_NAME, common_name)])


def _san(hosts: list[str]) -> x509.SubjectAlternativeName:
    entries: list[x509.GeneralName] = []
    for host in hosts:
        try:
            entries.append(x509.IPAddress(ipaddress.ip_address(host)))
        except ValueError:
            entries.append(x509.DNSName(host))
    return x509.SubjectAlternativeName(entries)


def _write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)


def generate_harness_certs(data_dir: Path, host: str = "127.0.0.1") -> HarnessCerts:
    now = datetime.datetime.now(datetime.timezone.utc)
    day = datetime.timedelta(days=1)
    hosts = [host, "localhost"] if host != "localhost" else ["localhost"]

    ca_key = ec.generate_private_key(ec.SECP256R1())
    ca_cert = (
        x509.CertificateBuilder()
        .subject_name(_name("webposture harness ephemeral CA"))
        .issuer_name(_name("webposture harness ephemeral CA"))
        .public_key(ca_key.public_key())
        .serial_number(x509.random_serial_number())
        .not_valid_before(now - day)
        .not_valid_after(now + 30 * day)
        .add_extension(x509.BasicConstraints(ca=True, path_length=0), critical=True)
        .sign(ca_key, hashes.SHA256())
    )

    def leaf(
        common_name: str,
        san_hosts: list[str],
        not_before: datetime.datetime,
        not_after: datetime.datetime,
        self_issued: bool = False,
    ) -> tuple[x509.Certificate, ec.EllipticCurvePrivateKey]:
        key = ec.generate_private_key(ec.SECP256R1())
        issuer = _name(common_name) if self_issued else ca_cert.subject
        signer = key if self_issued else ca_key
        cert = (
            x509.CertificateBuilder()
            .subject_name(_name(common_name))
            .issuer_name(issuer)
            .public_key(key.public_key())
            .serial_number(x509.random_serial_number())
            .not_valid_before(not_before)
            .not_valid_after(not_after)
            .add_extension(_san(san_hosts), critical=False)
            .sign(signer, hashes.SHA256())
        )
        return cert, key

    specs = {
        "self_signed": leaf(host, hosts, now - day, now + 30 * day, self_issued=True),
        "expired_untrusted": leaf(host, hosts, now - 30 * day, now - day),
        "wrong_host": leaf("wrong-host.invalid", ["wrong-host.invalid"], now - day, now + 30 * day),
        "untrusted_root": leaf(host, hosts, now - day, now + 30 * day),
    }

    cert_dir = data_dir / "certs"
    ca_pem = ca_cert.public_bytes(serialization.Encoding.PEM)
    ca_path = cert_dir / "ca.pem"
    _write(ca_path, ca_pem)

    profiles: dict[str, CertMaterial] = {}
    for name, (cert, key) in specs.items():
        cert_pem = cert.public_bytes(serialization.Encoding.PEM)
        key_pem = key.private_bytes(
            serialization.Encoding.PEM,
            serialization.PrivateFormat.PKCS8,
            serialization.NoEncryption(),
        )
        cert_path = cert_dir / f"{name}.pem"
        key_path = cert_dir / f"{name}.key"
        _write(cert_path, cert_pem)
        _write(key_path, key_pem)
        profiles[name] = CertMaterial(
            cert_path=cert_path,
            key_path=key_path,
            fingerprint_sha256=hashlib.sha256(
                cert.public_bytes(serialization.Encoding.DER)
            ).hexdigest(),
        )

    return HarnessCerts(ca_pem=ca_pem.decode("ascii"), ca_path=ca_path, profiles=profiles)
