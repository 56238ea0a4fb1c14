// Run state for the operator console. The console never mutates result
// contents: results arrive verbatim from the agent's NDJSON stream and are
// replaced wholesale on re-run.

import { PostureReport, TestResult, TestStatus } from '../report.js';

export type Phase = 'idle' | 'running' | 'cancelling' | 'done';

export interface LiveLogLine {
    test_id: string;
    level: string;
    message: string;
    at_ms: number;
}

export interface UiRunState {
    phase: Phase;
    progress: { completed: number; total: number };
    live_results: TestResult[];
    rerun_ids: string[];
    logs: LiveLogLine[];
    report: PostureReport | null;
    error: string | null;
}

export function initialState(): UiRunState {
    return {
        phase: 'idle',
        progress: { completed: 0, total: 0 },
        live_results: [],
        rerun_ids: [],
        logs: [],
        report: null,
        error: null,
    };
}

export function startRun(state: UiRunState, total: number): UiRunState {
    return {
        ...initialState(),
        phase: 'running',
        progress: { completed: 0, total },
    };
}

export function addResult(state: UiRunState, result: TestResult): UiRunState {
    if (state.progress.completed + 1 > state.progress.total && state.progress.total > 0) {
        // Live results grow monotonically; totals never shrink below them.
        return {
            ...state,
            live_results: [...state.live_results, result],
            progress: { completed: state.progress.completed + 1, total: state.progress.completed + 1 },
        };
    }
    return {
        ...state,
        live_results: [...state.live_results, result],
        progress: { ...state.progress, completed: state.progress.completed + 1 },
    };
}

export function replaceResult(state: UiRunState, result: TestResult): UiRunState {
    const results = state.live_results.map((entry) =>
        entry.test_id === result.test_id ? result : entry,
    );
    const rerunIds = state.rerun_ids.includes(result.test_id)
        ? state.rerun_ids
        : [...state.rerun_ids, result.test_id];
    const report = state.report
        ? {
              ...state.report,
              results: state.report.results.map((entry) =>
                  entry.test_id === result.test_id ? result : entry,
              ),
          }
        : null;
    return { ...state, live_results: results, rerun_ids: rerunIds, report };
}

export function finishRun(state: UiRunState, report: PostureReport): UiRunState {
    return { ...state, phase: 'done', report, live_results: report.results };
}

export function failRun(state: UiRunState, message: string): UiRunState {
    return { ...state, phase: 'done', error: message };
}

export interface BaselineDocument {
    expected?: Record<string, TestStatus>;
    expected_permissions?: Record<string, string>;
}

export interface BaselineDeviation {
    test_id: string;
    expected: string;
    observed: string;
}

/** View-layer diff of a report against a baseline document. */
export function baselineDiff(
    report: PostureReport,
    baseline: BaselineDocument,
): BaselineDeviation[] {
    const deviations: BaselineDeviation[] = [];
    const byId = new Map(report.results.map((result) => [result.test_id, result]));
    for (const [testId, expected] of Object.entries(baseline.expected ?? {})) {
        const observed = byId.get(testId)?.status ?? 'inconclusive';
        if (observed !== expected) {
            deviations.push({ test_id: testId, expected, observed });
        }
    }
    const observedPermissions = new Map<string, string>();
    for (const result of report.results) {
        for (const [key, value] of Object.entries(result.evidence)) {
            if (key.startsWith('permission.')) {
                observedPermissions.set(key.slice('permission.'.length), value);
            }
        }
    }
    for (const [name, expected] of Object.entries(baseline.expected_permissions ?? {})) {
        const observed = observedPermissions.get(name) ?? 'inconclusive';
        if (observed !== expected) {
            deviations.push({ test_id: `permission.${name}`, expected, observed });
        }
    }
    return deviations;
}
