import { mkdtempSync, readFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { afterAll, beforeAll, describe, expect, test } from 'vitest';

import { Harness } from '../src/harness/server.js';

let harness: Harness;

const VALID_REPORT = JSON.stringify({
    agent_version: '0.1.0',
    user_agent: 'TestAgent/1',
    secure_context: true,
    cross_origin_isolated: false,
    run_started: '2024-05-01T12:00:00Z',
    results: [
        {
            test_id: 'crypto.rng',
            module: 'crypto',
            title: 'Cryptographic RNG Quality',
            status: 'pass',
            details: 'fine',
            evidence: { zero_pct: '49.9' },
            duration_ms: 1.25,
            started_at: '2024-05-01T12:00:00Z',
            logs: [{ level: 'info', message: 'ok', at_ms: 0.5 }],
        },
    ],
    score: { applicable: 1, passed: 1, score: 1.0 },
});

beforeAll(async () => {
    harness = new Harness({ dataDir: mkdtempSync(join(tmpdir(), 'posture-collector-')) });
    await harness.start();
});

afterAll(async () => {
    await harness.stop();
});

function post(body: string, origin?: string): Promise<Response> {
    const headers: Record<string, string> = { 'Content-Type': 'application/json' };
    if (origin) headers['Origin'] = origin;
    return fetch(`${harness.baseUrl}/collect`, { method: 'POST', headers, body });
}

function lines(): string[] {
    try {
        return readFileSync(harness.reportsPath, 'utf-8').split('\n').filter(Boolean);
    } catch {
        return [];
    }
}

describe('collector', () => {
    test('valid report: 204 and exactly one JSONL line appended', async () => {
        const before = lines().length;
        const res = await post(VALID_REPORT, harness.baseUrl);
        expect(res.status).toBe(204);
        const after = lines();
        expect(after.length).toBe(before + 1);
        const stored = JSON.parse(after[after.length - 1]);
        expect(Object.keys(stored).sort()).toEqual(['received_at', 'remote_note', 'report']);
        expect(stored.report.results[0].test_id).toBe('crypto.rng');
    });

    test('empty object: 400 naming the first schema path', async () => {
        const res = await post('{}', harness.baseUrl);
        expect(res.status).toBe(400);
        expect(await res.text()).toBe('$.agent_version');
    });

    test('missing user_agent: 400 at $.user_agent', async () => {
        const broken = JSON.parse(VALID_REPORT);
        delete broken.user_agent;
        const res = await post(JSON.stringify(broken), harness.baseUrl);
        expect(res.status).toBe(400);
        expect(await res.text()).toBe('$.user_agent');
    });

    test('bad status enum: 400 names the result path', async () => {
        const broken = JSON.parse(VALID_REPORT);
        broken.results[0].status = 'meh';
        const res = await post(JSON.stringify(broken), harness.baseUrl);
        expect(res.status).toBe(400);
        expect(await res.text()).toBe('$.results[0].status');
    });

    test('disallowed origin: 403 and file unchanged', async () => {
        const before = lines().length;
        const res = await post(VALID_REPORT, 'http://evil.example');
        expect(res.status).toBe(403);
        expect(lines().length).toBe(before);
    });

    test('100 concurrent valid posts yield exactly 100 well-formed lines', async () => {
        const before = lines().length;
        const posts = Array.from({ length: 100 }, () => post(VALID_REPORT, harness.baseUrl));
        const statuses = (await Promise.all(posts)).map((r) => r.status);
        expect(statuses.every((s) => s === 204)).toBe(true);
        const after = lines();
        expect(after.length).toBe(before + 100);
        for (const line of after.slice(-100)) {
            expect(() => JSON.parse(line)).not.toThrow();
        }
    });
});
