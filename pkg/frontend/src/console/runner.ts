// Drives the posture agent through its CLI: spawns a streaming run, feeds
// NDJSON events into the run state, and keeps the canonical report bytes
// (the agent's own --out file) for export and submission.

import { ChildProcess, spawn } from 'node:child_process';
import { readFileSync, rmSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { request as httpRequest } from 'node:http';
import { URL } from 'node:url';

import { PostureReport, TestResult } from '../report.js';
import {
    UiRunState,
    addResult,
    failRun,
    finishRun,
    initialState,
    replaceResult,
    startRun,
} from './state.js';

export interface RunnerOptions {
    harnessUrl: string;
    pythonCmd: string[];
    cwd?: string;
    concurrency?: number;
}

export interface RunRequest {
    tests?: string[];
    budgets?: Record<string, number>;
    collector?: string;
}

export class RunnerError extends Error {}

export class AgentRunner {
    state: UiRunState = initialState();
    exportBytes: Buffer | null = null;
    private child: ChildProcess | null = null;
    private rerunChild: ChildProcess | null = null;
    private listeners = new Set<(state: UiRunState) => void>();
    private outPath = join(tmpdir(), `posture-report-${process.pid}-${Date.now()}.json`);
    private batteryIds: string[] = [];

    constructor(readonly options: RunnerOptions) {}

    onChange(listener: (state: UiRunState) => void): () => void {
        this.listeners.add(listener);
        return () => this.listeners.delete(listener);
    }

    private setState(state: UiRunState): void {
        this.state = state;
        for (const listener of this.listeners) {
            listener(state);
        }
    }

    async battery(): Promise<string[]> {
        if (this.batteryIds.length) {
            return this.batteryIds;
        }
        const output = await this.capture(['battery']);
        this.batteryIds = output
            .split('\n')
            .map((line) => line.trim().split(/\s+/)[0])
            .filter(Boolean);
        return this.batteryIds;
    }

    private capture(args: string[]): Promise<string> {
        const [cmd, ...base] = this.options.pythonCmd;
        return new Promise((resolve, reject) => {
            const child = spawn(cmd, [...base, ...args], { cwd: this.options.cwd });
            let out = '';
            let err = '';
            child.stdout.on('data', (chunk) => (out += chunk));
            child.stderr.on('data', (chunk) => (err += chunk));
            child.on('close', (code) =>
                code === 0 ? resolve(out) : reject(new RunnerError(err || `exit ${code}`)),
            );
            child.on('error', reject);
        });
    }

    private runArgs(request: RunRequest, budgetOverrides: string[] = []): string[] {
        const args = [
            'run',
            '--stream',
            '--harness-url',
            this.options.harnessUrl,
            '--concurrency',
            String(this.options.concurrency ?? 4),
            '--out',
            this.outPath,
        ];
        if (request.tests?.length) {
            args.push('--tests', request.tests.join(','));
        }
        for (const [testId, budget] of Object.entries(request.budgets ?? {})) {
            args.push('--budget-ms', `${testId}=${budget}`);
        }
        args.push(...budgetOverrides);
        if (request.collector) {
            args.push('--collector', request.collector);
        }
        return args;
    }

    start(request: RunRequest = {}): void {
        if (this.state.phase === 'running' || this.state.phase === 'cancelling') {
            throw new RunnerError('a run is already active');
        }
        const [cmd, ...base] = this.options.pythonCmd;
        this.setState({ ...initialState(), phase: 'running' });
        const child = spawn(cmd, [...base, ...this.runArgs(request)], { cwd: this.options.cwd });
        this.child = child;
        this.consumeStream(child, false);
    }

    private consumeStream(child: ChildProcess, isRerun: boolean): void {
        let buffered = '';
        let stderr = '';
        child.stderr?.on('data', (chunk) => (stderr += chunk));
        child.stdout?.on('data', (chunk: Buffer) => {
            buffered += chunk.toString('utf-8');
            let index: number;
            while ((index = buffered.indexOf('\n')) >= 0) {
                const line = buffered.slice(0, index);
                buffered = buffered.slice(index + 1);
                if (line.trim()) {
                    this.handleEvent(JSON.parse(line), isRerun);
                }
            }
        });
        child.on('close', (code) => {
            if (isRerun) {
                this.rerunChild = null;
                return;
            }
            this.child = null;
            if (this.state.phase !== 'done') {
                this.setState(failRun(this.state, stderr.trim() || `agent exited with ${code}`));
            }
        });
        child.on('error', (err) => {
            if (!isRerun) {
                this.setState(failRun(this.state, String(err)));
            }
        });
    }

    private handleEvent(event: Record<string, unknown>, isRerun: boolean): void {
        switch (event['event']) {
            case 'started':
                if (!isRerun) {
                    this.setState(startRun(this.state, Number(event['total'] ?? 0)));
                }
                break;
            case 'result': {
                const { event: _tag, ...result } = event;
                if (isRerun) {
                    this.setState(replaceResult(this.state, result as unknown as TestResult));
                } else {
                    this.setState(addResult(this.state, result as unknown as TestResult));
                }
                break;
            }
            case 'done':
                if (!isRerun) {
                    try {
                        this.exportBytes = readFileSync(this.outPath);
                    } catch {
                        this.exportBytes = null;
                    }
                    this.setState(
                        finishRun(this.state, event['report'] as unknown as PostureReport),
                    );
                }
                break;
        }
    }

    cancel(): void {
        if (!this.child || this.state.phase !== 'running') {
            throw new RunnerError('no active run to cancel');
        }
        // The agent finishes the active probe's cleanup before reporting.
        this.setState({ ...this.state, phase: 'cancelling' });
        this.child.kill('SIGINT');
    }

    async rerunSingle(testId: string, budgetOverrideMs: number): Promise<void> {
        if (this.state.phase === 'running' || this.state.phase === 'cancelling') {
            throw new RunnerError('suite is busy; wait for it to finish');
        }
        const battery = await this.battery();
        if (!battery.includes(testId)) {
            throw new RunnerError(`unknown test_id: ${testId}`);
        }
        const [cmd, ...base] = this.options.pythonCmd;
        const args = this.runArgs(
            { tests: [testId] },
            ['--budget-ms', `${testId}=${budgetOverrideMs}`],
        );
        // Single-probe reruns write their own throwaway report file.
        const outIndex = args.indexOf('--out');
        args[outIndex + 1] = join(tmpdir(), `posture-rerun-${Date.now()}.json`);
        const child = spawn(cmd, [...base, ...args], { cwd: this.options.cwd });
        this.rerunChild = child;
        this.consumeStream(child, true);
        await new Promise<void>((resolve) => child.on('close', () => resolve()));
        rmSync(args[outIndex + 1], { force: true });
    }

    async submit(collectorUrl: string): Promise<{ status: number; body: string }> {
        if (!this.exportBytes) {
            throw new RunnerError('no completed run to submit');
        }
        const bytes = this.exportBytes;
        const url = new URL(collectorUrl);
        return new Promise((resolve, reject) => {
            const req = httpRequest(
                {
                    hostname: url.hostname,
                    port: url.port,
                    path: url.pathname,
                    method: 'POST',
                    headers: {
                        'Content-Type': 'application/json',
                        'Content-Length': bytes.length,
                    },
                },
                (res) => {
                    let body = '';
                    res.on('data', (chunk) => (body += chunk));
                    res.on('end', () =>
                        resolve({ status: res.statusCode ?? 0, body: body.slice(0, 500) }),
                    );
                },
            );
            req.on('error', reject);
            req.end(bytes);
        });
    }

    dispose(): void {
        this.child?.kill('SIGKILL');
        this.rerunChild?.kill('SIGKILL');
        rmSync(this.outPath, { force: true });
    }
}
