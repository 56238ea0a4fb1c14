// harness CLI: `serve --config <path>` (flags override file values),
// `reports dump`, `certs regenerate`.

import { existsSync, readFileSync } from 'node:fs';
import { join } from 'node:path';

import { generateHarnessCerts, writeCerts } from './certs.js';
import { DEFAULT_CONFIG, Harness, HarnessConfig } from './server.js';

interface Flags {
    [key: string]: string;
}

function parseFlags(argv: string[]): { positional: string[]; flags: Flags } {
    const positional: string[] = [];
    const flags: Flags = {};
    for (let i = 0; i < argv.length; i++) {
        const arg = argv[i];
        if (arg.startsWith('--')) {
            const key = arg.slice(2);
            const value = argv[i + 1];
            if (value === undefined || value.startsWith('--')) {
                flags[key] = 'true';
            } else {
                flags[key] = value;
                i++;
            }
        } else {
            positional.push(arg);
        }
    }
    return { positional, flags };
}

function loadConfig(flags: Flags): HarnessConfig {
    let config: HarnessConfig = { ...DEFAULT_CONFIG };
    if (flags['config']) {
        const text = readFileSync(flags['config'], 'utf-8');
        const file = JSON.parse(text) as Partial<{
            host: string;
            primary_port: number;
            alt_port: number;
            bait_port: number;
            ws_ports: number[];
            data_dir: string;
            allow_origin: string;
        }>;
        config = {
            host: file.host ?? config.host,
            primaryPort: file.primary_port ?? config.primaryPort,
            altOriginPort: file.alt_port ?? config.altOriginPort,
            baitPort: file.bait_port ?? config.baitPort,
            openWsPorts: file.ws_ports ?? config.openWsPorts,
            dataDir: file.data_dir ?? config.dataDir,
            allowedReportOrigin: file.allow_origin,
        };
    }
    // Flags win over the config file.
    if (flags['primary-port']) config.primaryPort = Number(flags['primary-port']);
    if (flags['alt-port']) config.altOriginPort = Number(flags['alt-port']);
    if (flags['bait-port']) config.baitPort = Number(flags['bait-port']);
    if (flags['ws-ports']) config.openWsPorts = flags['ws-ports'].split(',').map(Number);
    if (flags['data-dir']) config.dataDir = flags['data-dir'];
    if (flags['allow-origin']) config.allowedReportOrigin = flags['allow-origin'];
    if (flags['host']) config.host = flags['host'];
    return config;
}

function usage(): never {
    process.stderr.write(
        'usage: harness serve [--config FILE] [--data-dir DIR] [--primary-port N] ' +
            '[--alt-port N] [--bait-port N] [--ws-ports A,B,C] [--allow-origin ORIGIN]\n' +
            '       harness reports dump [--data-dir DIR]\n' +
            '       harness certs regenerate [--data-dir DIR]\n',
    );
    process.exit(2);
}

export async function main(argv: string[]): Promise<number> {
    const [command, ...rest] = argv;
    const { positional, flags } = parseFlags(rest);

    if (command === 'serve') {
        const harness = new Harness(loadConfig(flags));
        await harness.start();
        process.stdout.write(`harness manifest at ${harness.baseUrl}/manifest\n`);
        process.stdout.write(JSON.stringify(harness.manifest(), null, 2) + '\n');
        await new Promise<void>((resolve) => {
            process.on('SIGINT', resolve);
            process.on('SIGTERM', resolve);
        });
        await harness.stop();
        return 0;
    }
    if (command === 'reports' && positional[0] === 'dump') {
        const dataDir = flags['data-dir'] ?? DEFAULT_CONFIG.dataDir;
        const path = join(dataDir, 'reports.jsonl');
        if (existsSync(path)) {
            process.stdout.write(readFileSync(path, 'utf-8'));
        }
        return 0;
    }
    if (command === 'certs' && positional[0] === 'regenerate') {
        const dataDir = flags['data-dir'] ?? DEFAULT_CONFIG.dataDir;
        const certs = generateHarnessCerts(flags['host'] ?? DEFAULT_CONFIG.host);
        writeCerts(certs, dataDir);
        const fingerprints: Record<string, string> = {};
        for (const [name, profile] of Object.entries(certs.profiles)) {
            fingerprints[name] = profile.fingerprintSha256;
        }
        process.stdout.write(JSON.stringify({ cert_fingerprints: fingerprints }, null, 2) + '\n');
        return 0;
    }
    usage();
}

const isMain = process.argv[1] && import.meta.url.endsWith(process.argv[1].split('/').pop()!);
if (isMain) {
    main(process.argv.slice(2)).then(
        (code) => process.exit(code),
        (err) => {
            process.stderr.write(String(err) + '\n');
            process.exit(1);
        },
    );
}
