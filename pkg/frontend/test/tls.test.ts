// An independent verifying client (node:tls) must reject each defective
// listener with the expected error category.

import { connect as tlsConnect, ConnectionOptions } from 'node:tls';
import { mkdtempSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { afterAll, beforeAll, describe, expect, test } from 'vitest';

import { Harness } from '../src/harness/server.js';

let harness: Harness;

beforeAll(async () => {
    harness = new Harness({ dataDir: mkdtempSync(join(tmpdir(), 'posture-tls-')) });
    await harness.start();
});

afterAll(async () => {
    await harness.stop();
});

function tryHandshake(port: number, options: Partial<ConnectionOptions> = {}): Promise<string> {
    return new Promise((resolve) => {
        const socket = tlsConnect(
            { host: '127.0.0.1', port, servername: '127.0.0.1', rejectUnauthorized: true, ...options },
            () => {
                socket.end();
                resolve('CONNECTED');
            },
        );
        socket.on('error', (err: NodeJS.ErrnoException) => {
            resolve(err.code ?? err.message);
        });
    });
}

describe('defective TLS listeners', () => {
    test('expired profile rejected as expired by a CA-trusting client', async () => {
        const outcome = await tryHandshake(harness.ports.tls['expired_untrusted'], {
            ca: harness.certs.caPem,
        });
        expect(outcome).toBe('CERT_HAS_EXPIRED');
    });

    test('self-signed profile rejected as self-signed', async () => {
        const outcome = await tryHandshake(harness.ports.tls['self_signed']);
        expect(outcome).toBe('DEPTH_ZERO_SELF_SIGNED_CERT');
    });

    test('wrong-host profile rejected as hostname mismatch by a CA-trusting client', async () => {
        const outcome = await tryHandshake(harness.ports.tls['wrong_host'], {
            ca: harness.certs.caPem,
        });
        expect(outcome).toBe('ERR_TLS_CERT_ALTNAME_INVALID');
    });

    test('untrusted-root profile rejected without the CA, accepted with it', async () => {
        const without = await tryHandshake(harness.ports.tls['untrusted_root']);
        expect(without).toMatch(/UNABLE_TO_(GET|VERIFY)|SELF_SIGNED_CERT_IN_CHAIN/);
        const withCa = await tryHandshake(harness.ports.tls['untrusted_root'], {
            ca: harness.certs.caPem,
        });
        expect(withCa).toBe('CONNECTED');
    });

    test('manifest fingerprints are 64-hex sha256 digests', () => {
        for (const profile of Object.values(harness.certs.profiles)) {
            expect(profile.fingerprintSha256).toMatch(/^[0-9a-f]{64}$/);
        }
    });
});
