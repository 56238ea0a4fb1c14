// Ephemeral defective TLS material: a throwaway CA plus one leaf per
// failure profile. Regenerated per install/run, never trusted system-wide.
// A trusted-but-expired chain cannot be fabricated locally, so the expired
// profile is an untrusted-root chain whose leaf is also expired.

import forge from 'node-forge';
import { createHash } from 'node:crypto';
import { mkdirSync, writeFileSync } from 'node:fs';
import { join } from 'node:path';

export interface CertProfile {
    certPem: string;
    keyPem: string;
    fingerprintSha256: string;
}

export interface HarnessCerts {
    caPem: string;
    profiles: Record<string, CertProfile>;
}

const PROFILE_NAMES = ['self_signed', 'expired_untrusted', 'wrong_host', 'untrusted_root'] as const;

function makeKeyPair(): forge.pki.rsa.KeyPair {
    return forge.pki.rsa.generateKeyPair(2048);
}

function subject(cn: string): forge.pki.CertificateField[] {
    return [{ name: 'commonName', value: cn }];
}

function altNames(hosts: string[]): forge.pki.CertificateField {
    return {
        name: 'subjectAltName',
        altNames: hosts.map((host) =>
            /^\d+\.\d+\.\d+\.\d+$/.test(host) ? { type: 7, ip: host } : { type: 2, value: host },
        ),
    } as unknown as forge.pki.CertificateField;
}

function fingerprint(certPem: string): string {
    const der = forge.asn1
        .toDer(forge.pki.certificateToAsn1(forge.pki.certificateFromPem(certPem)))
        .getBytes();
    return createHash('sha256').update(Buffer.from(der, 'binary')).digest('hex');
}

export function generateHarnessCerts(host = '127.0.0.1'): HarnessCerts {
    const now = new Date();
    const day = 24 * 60 * 60 * 1000;
    const hosts = host === 'localhost' ? ['localhost'] : [host, 'localhost'];

    const caKeys = makeKeyPair();
    const ca = forge.pki.createCertificate();
    ca.publicKey = caKeys.publicKey;
    ca.serialNumber = '01';
    ca.validity.notBefore = new Date(now.getTime() - day);
    ca.validity.notAfter = new Date(now.getTime() + 30 * day);
    ca.setSubject(subject('webposture harness ephemeral CA'));
    ca.setIssuer(subject('webposture harness ephemeral CA'));
    ca.setExtensions([{ name: 'basicConstraints', cA: true }]);
    ca.sign(caKeys.privateKey, forge.md.sha256.create());

    function leaf(
        cn: string,
        sanHosts: string[],
        notBefore: Date,
        notAfter: Date,
        selfIssued = false,
    ): CertProfile {
        const keys = makeKeyPair();
        const cert = forge.pki.createCertificate();
        cert.publicKey = keys.publicKey;
        cert.serialNumber = Math.floor(Math.random() * 1e9).toString(16);
        cert.validity.notBefore = notBefore;
        cert.validity.notAfter = notAfter;
        cert.setSubject(subject(cn));
        cert.setIssuer(selfIssued ? subject(cn) : ca.subject.attributes);
        cert.setExtensions([altNames(sanHosts)]);
        cert.sign(selfIssued ? keys.privateKey : caKeys.privateKey, forge.md.sha256.create());
        const certPem = forge.pki.certificateToPem(cert);
        return {
            certPem,
            keyPem: forge.pki.privateKeyToPem(keys.privateKey),
            fingerprintSha256: fingerprint(certPem),
        };
    }

    const profiles: Record<string, CertProfile> = {
        self_signed: leaf(host, hosts, new Date(now.getTime() - day), new Date(now.getTime() + 30 * day), true),
        expired_untrusted: leaf(host, hosts, new Date(now.getTime() - 30 * day), new Date(now.getTime() - day)),
        wrong_host: leaf('wrong-host.invalid', ['wrong-host.invalid'], new Date(now.getTime() - day), new Date(now.getTime() + 30 * day)),
        untrusted_root: leaf(host, hosts, new Date(now.getTime() - day), new Date(now.getTime() + 30 * day)),
    };

    return { caPem: forge.pki.certificateToPem(ca), profiles };
}

export function writeCerts(certs: HarnessCerts, dataDir: string): void {
    const dir = join(dataDir, 'certs');
    mkdirSync(dir, { recursive: true });
    writeFileSync(join(dir, 'ca.pem'), certs.caPem);
    for (const name of PROFILE_NAMES) {
        const profile = certs.profiles[name];
        writeFileSync(join(dir, `${name}.pem`), profile.certPem);
        writeFileSync(join(dir, `${name}.key`), profile.keyPem);
    }
}
