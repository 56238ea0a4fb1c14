// Console entry point.
//
//   node dist/console/main.js --harness-url http://127.0.0.1:PORT \
//       [--port 3900] [--python "python3 -m webposture.cli"] [--cwd DIR] \
//       [--baseline FILE] [--autorun] [--collector URL] [--modules a,b]

import { AgentRunner } from './runner.js';
import { ConsoleServer } from './server.js';

function flagValue(argv: string[], name: string): string | undefined {
    const index = argv.indexOf(`--${name}`);
    if (index === -1 || index + 1 >= argv.length) {
        return undefined;
    }
    return argv[index + 1];
}

async function main(): Promise<void> {
    const argv = process.argv.slice(2);
    const harnessUrl = flagValue(argv, 'harness-url');
    if (!harnessUrl) {
        process.stderr.write('--harness-url is required\n');
        process.exit(2);
    }
    const pythonCmd = (flagValue(argv, 'python') ?? 'python3 -m webposture.cli').split(' ');
    const runner = new AgentRunner({
        harnessUrl,
        pythonCmd,
        cwd: flagValue(argv, 'cwd'),
        concurrency: Number(flagValue(argv, 'concurrency') ?? 4),
    });
    const consoleServer = new ConsoleServer({
        runner,
        baselinePath: flagValue(argv, 'baseline'),
        autorun: argv.includes('--autorun'),
        autorunCollector: flagValue(argv, 'collector'),
        autorunModules: flagValue(argv, 'modules')?.split(','),
    });
    const port = await consoleServer.listen(Number(flagValue(argv, 'port') ?? 3900));
    process.stdout.write(`posture console at http://127.0.0.1:${port}/\n`);
    await new Promise<void>((resolve) => {
        process.on('SIGINT', resolve);
        process.on('SIGTERM', resolve);
    });
    await consoleServer.close();
}

main().catch((err) => {
    process.stderr.write(String(err) + '\n');
    process.exit(1);
});
