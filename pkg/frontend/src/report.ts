// Wire types for the posture report JSON, plus schema validation that
// names the first offending path (the collector's 400 body).

export type TestStatus =
    | 'pass'
    | 'fail'
    | 'detected'
    | 'not_detected'
    | 'not_applicable'
    | 'inconclusive'
    | 'error';

export const TEST_STATUSES: readonly TestStatus[] = [
    'pass',
    'fail',
    'detected',
    'not_detected',
    'not_applicable',
    'inconclusive',
    'error',
];

export interface LogEntry {
    level: 'info' | 'success' | 'warning' | 'error';
    message: string;
    at_ms: number;
}

export interface TestResult {
    test_id: string;
    module: string;
    title: string;
    status: TestStatus;
    details: string;
    evidence: Record<string, string>;
    duration_ms: number;
    started_at: string;
    logs: LogEntry[];
}

export interface ScoreSummary {
    applicable: number;
    passed: number;
    score: number;
}

export interface PostureReport {
    agent_version: string;
    user_agent: string;
    secure_context: boolean;
    cross_origin_isolated: boolean;
    run_started: string;
    results: TestResult[];
    score: ScoreSummary;
}

export class SchemaError extends Error {
    constructor(public readonly path: string, reason: string) {
        super(`${path}: ${reason}`);
    }
}

const LOG_LEVELS = new Set(['info', 'success', 'warning', 'error']);
const STATUS_SET = new Set<string>(TEST_STATUSES);

function requireField(
    obj: Record<string, unknown>,
    key: string,
    kind: 'string' | 'boolean' | 'number' | 'integer' | 'object' | 'array',
    path: string,
): unknown {
    if (!(key in obj)) {
        throw new SchemaError(`${path}.${key}`, 'required field missing');
    }
    const value = obj[key];
    const fail = () => {
        throw new SchemaError(`${path}.${key}`, `expected ${kind}`);
    };
    switch (kind) {
        case 'string':
            if (typeof value !== 'string') fail();
            break;
        case 'boolean':
            if (typeof value !== 'boolean') fail();
            break;
        case 'number':
            if (typeof value !== 'number' || Number.isNaN(value)) fail();
            break;
        case 'integer':
            if (typeof value !== 'number' || !Number.isInteger(value)) fail();
            break;
        case 'object':
            if (typeof value !== 'object' || value === null || Array.isArray(value)) fail();
            break;
        case 'array':
            if (!Array.isArray(value)) fail();
            break;
    }
    return value;
}

function validateLog(obj: unknown, path: string): void {
    if (typeof obj !== 'object' || obj === null) {
        throw new SchemaError(path, 'expected object');
    }
    const entry = obj as Record<string, unknown>;
    const level = requireField(entry, 'level', 'string', path) as string;
    if (!LOG_LEVELS.has(level)) {
        throw new SchemaError(`${path}.level`, `unknown log level ${JSON.stringify(level)}`);
    }
    requireField(entry, 'message', 'string', path);
    requireField(entry, 'at_ms', 'number', path);
}

function validateResult(obj: unknown, path: string): string {
    if (typeof obj !== 'object' || obj === null) {
        throw new SchemaError(path, 'expected object');
    }
    const result = obj as Record<string, unknown>;
    const testId = requireField(result, 'test_id', 'string', path) as string;
    requireField(result, 'module', 'string', path);
    requireField(result, 'title', 'string', path);
    const status = requireField(result, 'status', 'string', path) as string;
    if (!STATUS_SET.has(status)) {
        throw new SchemaError(`${path}.status`, `unknown status ${JSON.stringify(status)}`);
    }
    requireField(result, 'details', 'string', path);
    const evidence = requireField(result, 'evidence', 'object', path) as Record<string, unknown>;
    for (const [key, value] of Object.entries(evidence)) {
        if (typeof value !== 'string') {
            throw new SchemaError(`${path}.evidence.${key}`, 'expected string');
        }
    }
    const duration = requireField(result, 'duration_ms', 'number', path) as number;
    if (duration < 0) {
        throw new SchemaError(`${path}.duration_ms`, 'must be non-negative');
    }
    requireField(result, 'started_at', 'string', path);
    const logs = requireField(result, 'logs', 'array', path) as unknown[];
    logs.forEach((entry, i) => validateLog(entry, `${path}.logs[${i}]`));
    return testId;
}

/** Validate report text; returns the parsed report or throws SchemaError. */
export function validateReport(text: string): PostureReport {
    let obj: unknown;
    try {
        obj = JSON.parse(text);
    } catch (err) {
        throw new SchemaError('$', `invalid JSON: ${(err as Error).message}`);
    }
    if (typeof obj !== 'object' || obj === null || Array.isArray(obj)) {
        throw new SchemaError('$', 'expected object');
    }
    const report = obj as Record<string, unknown>;
    requireField(report, 'agent_version', 'string', '$');
    requireField(report, 'user_agent', 'string', '$');
    requireField(report, 'secure_context', 'boolean', '$');
    requireField(report, 'cross_origin_isolated', 'boolean', '$');
    requireField(report, 'run_started', 'string', '$');
    const results = requireField(report, 'results', 'array', '$') as unknown[];
    const seen = new Set<string>();
    results.forEach((entry, i) => {
        const testId = validateResult(entry, `$.results[${i}]`);
        if (seen.has(testId)) {
            throw new SchemaError(`$.results[${i}].test_id`, `duplicate test_id ${testId}`);
        }
        seen.add(testId);
    });
    const score = requireField(report, 'score', 'object', '$') as Record<string, unknown>;
    requireField(score, 'applicable', 'integer', '$.score');
    requireField(score, 'passed', 'integer', '$.score');
    const value = requireField(score, 'score', 'number', '$.score') as number;
    if (value < 0 || value > 1) {
        throw new SchemaError('$.score.score', 'must lie in [0, 1]');
    }
    return obj as PostureReport;
}
