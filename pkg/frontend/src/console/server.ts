// Operator console server: serves the dashboard, exposes the run/cancel/
// rerun/export/submit API, and streams state changes over SSE. The page
// honors `autorun=1`, `collector=<url>`, and `modules=<csv>` query flags,
// and the server itself supports a headless autorun mode for suppressed-UI
// deployments.

import { IncomingMessage, Server, ServerResponse, createServer } from 'node:http';
import { readFileSync } from 'node:fs';
import { URL } from 'node:url';

import { renderBaselineDiff, renderDashboard } from './render.js';
import { AgentRunner, RunnerError } from './runner.js';
import { BaselineDocument, baselineDiff } from './state.js';

const CLIENT_SCRIPT = `
const params = new URLSearchParams(location.search);
async function refresh() {
  const view = await fetch('/api/view').then(r => r.text());
  document.getElementById('root').innerHTML = view;
  wire();
}
function pickedModules() {
  const picks = [...document.querySelectorAll('.module-pick')];
  const chosen = picks.filter(p => p.checked).map(p => p.value);
  return chosen.length === picks.length ? undefined : chosen;
}
async function startRun(tests) {
  const body = { tests };
  if (params.get('collector')) body.collector = params.get('collector');
  await fetch('/api/run', { method: 'POST', headers: {'Content-Type': 'application/json'},
                            body: JSON.stringify(body) });
}
function wire() {
  const run = document.getElementById('run-btn');
  if (run) run.onclick = () => startRun(pickedModules());
  const cancel = document.getElementById('cancel-btn');
  if (cancel) cancel.onclick = () => fetch('/api/cancel', { method: 'POST' });
  const exp = document.getElementById('export-btn');
  if (exp) exp.onclick = () => { location.href = '/api/export'; };
  const submit = document.getElementById('submit-btn');
  if (submit) submit.onclick = async () => {
    const collector = params.get('collector') || prompt('collector URL');
    if (!collector) return;
    const res = await fetch('/api/submit', { method: 'POST',
      headers: {'Content-Type': 'application/json'},
      body: JSON.stringify({ collector_url: collector }) });
    const out = await res.json();
    alert(out.ok ? 'accepted (204)' : 'submit failed: ' + out.error);
  };
  for (const btn of document.querySelectorAll('.rerun-btn')) {
    btn.onclick = async () => {
      const budget = Number(prompt('budget override (ms)', '20000') || '0');
      if (!budget) return;
      const res = await fetch('/api/rerun', { method: 'POST',
        headers: {'Content-Type': 'application/json'},
        body: JSON.stringify({ test_id: btn.dataset.testId, budget_override_ms: budget }) });
      if (!res.ok) alert('re-run rejected: ' + (await res.text()));
    };
  }
}
const events = new EventSource('/api/events');
events.onmessage = () => refresh();
refresh().then(() => {
  if (params.get('autorun') === '1') {
    const modules = params.get('modules');
    startRun(modules ? modules.split(',') : undefined);
  }
});
`;

const PAGE_STYLE = `
body { font-family: system-ui, sans-serif; margin: 1.5rem; background: #101418; color: #e6e6e6; }
.badge.status { padding: 0 .5em; border-radius: .6em; font-size: .85em; }
.badge.status.pass, .badge.status.not_detected { background: #1d4d2b; }
.badge.status.fail, .badge.status.detected, .badge.status.error { background: #5d1f1f; }
.badge.status.not_applicable, .badge.status.inconclusive { background: #4d431d; }
.badge.rerun { background: #27415e; margin-left: .5em; padding: 0 .5em; border-radius: .6em; }
details.result-row { border-bottom: 1px solid #2a2f36; padding: .3rem 0; }
details.result-row.alert > summary { color: #ff9d9d; }
.advisory { color: #ffc46b; }
.evidence td { padding: 0 .6em; font-family: monospace; font-size: .85em; }
#progress { margin: .6rem 0; }
`;

export interface ConsoleOptions {
    runner: AgentRunner;
    baselinePath?: string;
    autorun?: boolean;
    autorunCollector?: string;
    autorunModules?: string[];
}

function readBody(req: IncomingMessage): Promise<string> {
    return new Promise((resolve) => {
        let body = '';
        req.on('data', (chunk) => (body += chunk));
        req.on('end', () => resolve(body));
    });
}

export class ConsoleServer {
    readonly server: Server;
    private clients = new Set<ServerResponse>();
    private battery: string[] = [];

    constructor(readonly options: ConsoleOptions) {
        this.server = createServer((req, res) => {
            this.route(req, res).catch((err) => {
                res.writeHead(500, { 'Content-Type': 'text/plain' });
                res.end(String(err));
            });
        });
        options.runner.onChange(() => this.broadcast());
    }

    async listen(port: number, host = '127.0.0.1'): Promise<number> {
        this.battery = await this.options.runner.battery();
        await new Promise<void>((resolve) => this.server.listen(port, host, resolve));
        if (this.options.autorun) {
            this.autorun();
        }
        return (this.server.address() as { port: number }).port;
    }

    private autorun(): void {
        const { runner, autorunCollector, autorunModules } = this.options;
        const stop = runner.onChange(async (state) => {
            if (state.phase === 'done' && !state.error) {
                stop();
                if (autorunCollector) {
                    await runner.submit(autorunCollector);
                }
            }
        });
        runner.start({ tests: autorunModules });
    }

    async close(): Promise<void> {
        for (const client of this.clients) {
            client.end();
        }
        this.options.runner.dispose();
        await new Promise<void>((resolve) => this.server.close(() => resolve()));
    }

    private broadcast(): void {
        const payload = `data: ${JSON.stringify({ phase: this.options.runner.state.phase })}\n\n`;
        for (const client of this.clients) {
            client.write(payload);
        }
    }

    private baseline(): BaselineDocument | null {
        if (!this.options.baselinePath) {
            return null;
        }
        return JSON.parse(readFileSync(this.options.baselinePath, 'utf-8')) as BaselineDocument;
    }

    private async route(req: IncomingMessage, res: ServerResponse): Promise<void> {
        const runner = this.options.runner;
        const url = new URL(req.url ?? '/', 'http://console');
        const path = url.pathname;

        if (req.method === 'GET' && path === '/') {
            const html =
                '<!doctype html><html><head><meta charset="utf-8">' +
                '<title>Posture Console</title>' +
                `<style>${PAGE_STYLE}</style></head>` +
                '<body><h1>Security Posture Console</h1>' +
                '<div id="root"></div>' +
                `<script>${CLIENT_SCRIPT}</script></body></html>`;
            res.writeHead(200, { 'Content-Type': 'text/html; charset=utf-8' });
            res.end(html);
            return;
        }
        if (req.method === 'GET' && path === '/api/view') {
            let html = renderDashboard(runner.state, this.battery);
            const baseline = this.baseline();
            if (baseline && runner.state.report) {
                html += renderBaselineDiff(baselineDiff(runner.state.report, baseline));
            }
            res.writeHead(200, { 'Content-Type': 'text/html; charset=utf-8' });
            res.end(html);
            return;
        }
        if (req.method === 'GET' && path === '/api/state') {
            res.writeHead(200, { 'Content-Type': 'application/json' });
            res.end(JSON.stringify(runner.state));
            return;
        }
        if (req.method === 'GET' && path === '/api/battery') {
            res.writeHead(200, { 'Content-Type': 'application/json' });
            res.end(JSON.stringify(this.battery));
            return;
        }
        if (req.method === 'GET' && path === '/api/events') {
            res.writeHead(200, {
                'Content-Type': 'text/event-stream',
                'Cache-Control': 'no-cache',
                Connection: 'keep-alive',
            });
            res.write('retry: 500\n\n');
            this.clients.add(res);
            req.on('close', () => this.clients.delete(res));
            return;
        }
        if (req.method === 'POST' && path === '/api/run') {
            const body = await readBody(req);
            const request = body ? JSON.parse(body) : {};
            try {
                runner.start(request);
                res.writeHead(202, { 'Content-Type': 'application/json' });
                res.end('{"ok":true}');
            } catch (err) {
                res.writeHead(409, { 'Content-Type': 'text/plain' });
                res.end(String(err));
            }
            return;
        }
        if (req.method === 'POST' && path === '/api/cancel') {
            try {
                runner.cancel();
                res.writeHead(202);
                res.end();
            } catch (err) {
                res.writeHead(409, { 'Content-Type': 'text/plain' });
                res.end(String(err));
            }
            return;
        }
        if (req.method === 'POST' && path === '/api/rerun') {
            const body = JSON.parse(await readBody(req));
            try {
                await runner.rerunSingle(
                    String(body.test_id),
                    Number(body.budget_override_ms ?? 20000),
                );
                res.writeHead(200, { 'Content-Type': 'application/json' });
                res.end('{"ok":true}');
            } catch (err) {
                const status = err instanceof RunnerError ? 400 : 500;
                res.writeHead(status, { 'Content-Type': 'text/plain' });
                res.end((err as Error).message);
            }
            return;
        }
        if (req.method === 'GET' && path === '/api/export') {
            if (!runner.exportBytes) {
                res.writeHead(404, { 'Content-Type': 'text/plain' });
                res.end('no completed run to export');
                return;
            }
            res.writeHead(200, {
                'Content-Type': 'application/json',
                'Content-Disposition': 'attachment; filename="posture-report.json"',
            });
            res.end(runner.exportBytes);
            return;
        }
        if (req.method === 'POST' && path === '/api/submit') {
            const body = JSON.parse(await readBody(req));
            try {
                const outcome = await runner.submit(String(body.collector_url));
                if (outcome.status === 204) {
                    res.writeHead(200, { 'Content-Type': 'application/json' });
                    res.end('{"ok":true}');
                } else {
                    res.writeHead(502, { 'Content-Type': 'application/json' });
                    res.end(
                        JSON.stringify({
                            ok: false,
                            error: `collector answered ${outcome.status}: ${outcome.body}`,
                        }),
                    );
                }
            } catch (err) {
                res.writeHead(502, { 'Content-Type': 'application/json' });
                res.end(JSON.stringify({ ok: false, error: String(err) }));
            }
            return;
        }
        res.writeHead(404, { 'Content-Type': 'text/plain' });
        res.end('not found');
    }
}
