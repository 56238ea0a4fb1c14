// Standalone test harness: primary/alt/bait HTTP origins, CORS matrix with
// preflight accounting, header-precise pages, defective TLS listeners,
// WebSocket echo ground truth, PAC fixture, and an append-only report
// collector. /manifest describes every bound port so clients self-configure.

import { createServer as createHttpServer, IncomingMessage, Server, ServerResponse } from 'node:http';
import { createServer as createHttpsServer } from 'node:https';
import { createServer as createNetServer } from 'node:net';
import { appendFileSync, mkdirSync } from 'node:fs';
import { join } from 'node:path';
import { URL } from 'node:url';
import { WebSocketServer } from 'ws';

import { SchemaError, validateReport } from '../report.js';
import { generateHarnessCerts, HarnessCerts, writeCerts } from './certs.js';

export interface HarnessConfig {
    host: string;
    primaryPort: number;
    altOriginPort: number;
    baitPort: number;
    openWsPorts: number[];
    dataDir: string;
    allowedReportOrigin?: string;
}

export const DEFAULT_CONFIG: HarnessConfig = {
    host: '127.0.0.1',
    primaryPort: 0,
    altOriginPort: 0,
    baitPort: 0,
    openWsPorts: [0, 0, 0],
    dataDir: 'harness-data',
};

const FRAME_PAGE = (role: string) => `<!doctype html>
<html><head><title>Harness Frame</title></head>
<body>
<div id="frame-content">cross-origin frame content</div>
<script>document.cookie = "origin_tag=${role}; path=/";</script>
</body></html>
`;

const CSP_PAGE = (meta: string) => `<!doctype html>
<html><head><title>CSP Test Page</title>${meta}</head>
<body><div id="csp-root">policy enforcement target</div></body></html>
`;

const ISOLATED_PAGE = `<!doctype html>
<html><head><title>Isolated Page</title></head>
<body><div id="isolated-root">cross-origin isolated context</div></body></html>
`;

const SANDBOX_CHILD_PAGE = `<!doctype html>
<html><head><title>Sandbox Child</title></head>
<body>
<script>
function probeParentAccess() { try { void parent.document.title; parent.postMessage("PARENT_ACCESS_OK", "*"); } catch (e) { parent.postMessage("PARENT_ACCESS_BLOCKED", "*"); } }
window.__sandboxSentinel__ = true;
parent.postMessage("CHILD_SCRIPT_RAN", "*");
probeParentAccess();
</script>
</body></html>
`;

const BAIT_PAGE = `<!doctype html>
<html><head><title>Bait Frame</title></head>
<body>
<script>parent.postMessage("IFRAME_LOADED", "*");</script>
</body></html>
`;

const TLS_PAGE = '<!doctype html><html><head><title>TLS Listener</title></head><body>ok</body></html>';
const OK_JS = 'window.__cspControl__ = true;\n';
const EVIL_JS = 'window.__cspExternal__ = true;\n';
const PAC_OPEN = 'function FindProxyForURL(url, host) { return "DIRECT"; }\n';

interface Counters {
    preflights: number;
    requests: number;
}

export class Harness {
    readonly config: HarnessConfig;
    private servers: Server[] = [];
    private wsServers: WebSocketServer[] = [];
    private counters: Counters = { preflights: 0, requests: 0 };
    private writeQueue: Promise<void> = Promise.resolve();
    certs!: HarnessCerts;
    ports: { primary: number; alt: number; bait: number; ws: number[]; tls: Record<string, number> } = {
        primary: 0,
        alt: 0,
        bait: 0,
        ws: [],
        tls: {},
    };
    verifiedUnboundPort = 0;

    constructor(config: Partial<HarnessConfig> = {}) {
        this.config = { ...DEFAULT_CONFIG, ...config, openWsPorts: config.openWsPorts ?? [0, 0, 0] };
        const explicit = [
            this.config.primaryPort,
            this.config.altOriginPort,
            this.config.baitPort,
            ...this.config.openWsPorts,
        ].filter((p) => p !== 0);
        if (new Set(explicit).size !== explicit.length) {
            throw new Error('harness ports must be distinct');
        }
    }

    get baseUrl(): string {
        return `http://${this.config.host}:${this.ports.primary}`;
    }

    get altUrl(): string {
        return `http://${this.config.host}:${this.ports.alt}`;
    }

    get baitUrl(): string {
        return `http://${this.config.host}:${this.ports.bait}`;
    }

    get allowedReportOrigin(): string {
        return this.config.allowedReportOrigin ?? this.baseUrl;
    }

    get reportsPath(): string {
        return join(this.config.dataDir, 'reports.jsonl');
    }

    manifest(): Record<string, unknown> {
        const fingerprints: Record<string, string> = {};
        for (const [name, profile] of Object.entries(this.certs.profiles)) {
            fingerprints[name] = profile.fingerprintSha256;
        }
        return {
            primary_port: this.ports.primary,
            alt_origin_port: this.ports.alt,
            bait_port: this.ports.bait,
            open_ws_ports: this.ports.ws,
            verified_unbound_port: this.verifiedUnboundPort,
            tls: this.ports.tls,
            cert_fingerprints: fingerprints,
        };
    }

    async start(): Promise<this> {
        mkdirSync(this.config.dataDir, { recursive: true });
        this.certs = generateHarnessCerts(this.config.host);
        writeCerts(this.certs, this.config.dataDir);

        this.ports.primary = await this.listenHttp('primary', this.config.primaryPort);
        this.ports.alt = await this.listenHttp('alt', this.config.altOriginPort);
        this.ports.bait = await this.listenHttp('bait', this.config.baitPort);

        for (const [name, profile] of Object.entries(this.certs.profiles)) {
            const server = createHttpsServer({ cert: profile.certPem, key: profile.keyPem }, (req, res) => {
                res.writeHead(200, { 'Content-Type': 'text/html; charset=utf-8' });
                res.end(TLS_PAGE);
            });
            await new Promise<void>((resolve) => server.listen(0, this.config.host, resolve));
            this.ports.tls[name] = (server.address() as { port: number }).port;
            this.servers.push(server as unknown as Server);
        }

        for (const port of this.config.openWsPorts) {
            const wss = new WebSocketServer({ host: this.config.host, port });
            await new Promise<void>((resolve) => wss.on('listening', resolve));
            wss.on('connection', (socket) => {
                socket.on('message', (data, isBinary) => socket.send(data, { binary: isBinary }));
            });
            this.wsServers.push(wss);
            this.ports.ws.push((wss.address() as { port: number }).port);
        }

        // Bind then release a port: the verified-unbound ground truth.
        this.verifiedUnboundPort = await new Promise<number>((resolve, reject) => {
            const probe = createNetServer();
            probe.listen(0, this.config.host, () => {
                const port = (probe.address() as { port: number }).port;
                probe.close(() => resolve(port));
            });
            probe.on('error', reject);
        });
        return this;
    }

    async stop(): Promise<void> {
        await Promise.all([
            ...this.servers.map(
                (server) => new Promise<void>((resolve) => server.close(() => resolve())),
            ),
            ...this.wsServers.map(
                (wss) =>
                    new Promise<void>((resolve) => {
                        for (const client of wss.clients) client.terminate();
                        wss.close(() => resolve());
                    }),
            ),
        ]);
    }

    private listenHttp(role: string, port: number): Promise<number> {
        const server = createHttpServer((req, res) => this.route(role, req, res));
        this.servers.push(server);
        return new Promise((resolve) =>
            server.listen(port, this.config.host, () =>
                resolve((server.address() as { port: number }).port),
            ),
        );
    }

    // -- routing ------------------------------------------------------------

    private route(role: string, req: IncomingMessage, res: ServerResponse): void {
        const url = new URL(req.url ?? '/', `http://${req.headers.host}`);
        const path = url.pathname;

        if (path.startsWith('/cors/')) {
            this.cors(req, res, path);
            return;
        }
        if (req.method === 'GET') {
            if (path === '/manifest' && role === 'primary') {
                return this.reply(res, 200, JSON.stringify(this.manifest()), 'application/json');
            }
            if (path === '/health') {
                return this.reply(res, 200, 'ok', 'text/plain');
            }
            if (path === '/pages/frame') {
                res.setHeader('Set-Cookie', `origin_tag=${role}; Path=/`);
                return this.reply(res, 200, FRAME_PAGE(role));
            }
            if (path === '/pages/csp-strict') {
                res.setHeader('Content-Security-Policy', "script-src 'self'");
                return this.reply(res, 200, CSP_PAGE(''));
            }
            if (path === '/pages/csp-meta') {
                const meta = '<meta http-equiv="Content-Security-Policy" content="script-src \'self\'">';
                return this.reply(res, 200, CSP_PAGE(meta));
            }
            if (path === '/pages/isolated') {
                res.setHeader('Cross-Origin-Opener-Policy', 'same-origin');
                res.setHeader('Cross-Origin-Embedder-Policy', 'require-corp');
                return this.reply(res, 200, ISOLATED_PAGE);
            }
            if (path === '/pages/reflect') {
                const payload = url.searchParams.get('q') ?? '';
                if (url.searchParams.get('xss') === '1') {
                    res.setHeader('X-XSS-Protection', '1; mode=block');
                }
                if (url.searchParams.get('csp') === '1') {
                    res.setHeader('Content-Security-Policy', "script-src 'none'");
                }
                const body =
                    '<!doctype html>\n<html><head><title>Reflect</title></head>\n' +
                    `<body><div id="reflection">${payload}</div></body></html>\n`;
                return this.reply(res, 200, body);
            }
            if (path === '/pages/sandbox-child') {
                return this.reply(res, 200, SANDBOX_CHILD_PAGE);
            }
            if (path === '/pages/frame-bait' && role === 'bait') {
                return this.reply(res, 200, BAIT_PAGE);
            }
            if (path === '/static/ok.js') {
                return this.reply(res, 200, OK_JS, 'text/javascript');
            }
            if (path === '/static/evil.js') {
                return this.reply(res, 200, EVIL_JS, 'text/javascript');
            }
            if (path === '/fixtures/pac-open') {
                res.setHeader('Access-Control-Allow-Origin', '*');
                return this.reply(res, 200, PAC_OPEN, 'application/x-ns-proxy-autoconfig');
            }
        }
        if (req.method === 'POST' && path === '/collect' && role === 'primary') {
            this.collect(req, res);
            return;
        }
        this.reply(res, 404, 'not found', 'text/plain');
    }

    private reply(
        res: ServerResponse,
        status: number,
        body = '',
        contentType = 'text/html; charset=utf-8',
    ): void {
        const buffer = Buffer.from(body, 'utf-8');
        if (buffer.length > 0 || (status !== 204 && status !== 304)) {
            res.setHeader('Content-Type', contentType);
        }
        res.setHeader('Content-Length', buffer.length);
        res.writeHead(status);
        res.end(buffer);
    }

    private cors(req: IncomingMessage, res: ServerResponse, path: string): void {
        if (path === '/cors/status') {
            return this.reply(res, 200, JSON.stringify(this.counters), 'application/json');
        }
        if (!['/cors/none', '/cors/wildcard', '/cors/allow'].includes(path)) {
            return this.reply(res, 404, 'not found', 'text/plain');
        }
        const origin = req.headers.origin ?? '';
        if (req.method === 'OPTIONS') {
            this.counters.preflights += 1;
            if (path === '/cors/allow') {
                res.setHeader('Access-Control-Allow-Origin', origin || '*');
                res.setHeader('Access-Control-Allow-Methods', 'GET, PUT, OPTIONS');
                res.setHeader('Access-Control-Allow-Headers', 'x-probe-token');
                res.setHeader('Access-Control-Max-Age', '0');
            }
            return this.reply(res, 204);
        }
        this.counters.requests += 1;
        const body = JSON.stringify({ endpoint: path, method: req.method });
        if (path === '/cors/wildcard') {
            res.setHeader('Access-Control-Allow-Origin', '*');
        } else if (path === '/cors/allow' && origin) {
            res.setHeader('Access-Control-Allow-Origin', origin);
        }
        this.reply(res, 200, body, 'application/json');
    }

    private collect(req: IncomingMessage, res: ServerResponse): void {
        const origin = req.headers.origin;
        if (origin !== undefined && origin !== this.allowedReportOrigin) {
            return this.reply(res, 403, 'origin not allowed', 'text/plain');
        }
        const chunks: Buffer[] = [];
        req.on('data', (chunk) => chunks.push(chunk));
        req.on('end', () => {
            const raw = Buffer.concat(chunks).toString('utf-8');
            try {
                validateReport(raw);
            } catch (err) {
                const path = err instanceof SchemaError ? err.path : '$';
                return this.reply(res, 400, path, 'text/plain');
            }
            const line = JSON.stringify({
                received_at: new Date().toISOString().replace(/\.\d{3}Z$/, 'Z'),
                remote_note: `${req.socket.remoteAddress}:${req.socket.remotePort}`,
                report: JSON.parse(raw),
            });
            // Serialize appends so concurrent posts never interleave lines.
            this.writeQueue = this.writeQueue.then(() => {
                appendFileSync(this.reportsPath, line + '\n');
            });
            void this.writeQueue.then(() => this.reply(res, 204));
        });
    }
}
