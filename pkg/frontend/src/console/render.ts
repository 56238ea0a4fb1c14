// Pure view over the run state: every result row shows id, title, status
// badge and duration; expanding a row reveals evidence and logs. Alert
// styling for detected/failed rows carries the result's own details as the
// advisory text.

import { TestResult } from '../report.js';
import { BaselineDeviation, UiRunState } from './state.js';

const ALERT_STATUSES = new Set(['fail', 'detected', 'error']);

export function escapeHtml(text: string): string {
    return text
        .replace(/&/g, '&amp;')
        .replace(/</g, '&lt;')
        .replace(/>/g, '&gt;')
        .replace(/"/g, '&quot;');
}

function evidenceRows(result: TestResult): string {
    const entries = Object.entries(result.evidence);
    if (entries.length === 0) {
        return '<p class="empty">no evidence recorded</p>';
    }
    const rows = entries
        .map(
            ([key, value]) =>
                `<tr><td class="evidence-key">${escapeHtml(key)}</td>` +
                `<td class="evidence-value">${escapeHtml(value)}</td></tr>`,
        )
        .join('');
    return `<table class="evidence">${rows}</table>`;
}

function logLines(result: TestResult): string {
    if (result.logs.length === 0) {
        return '';
    }
    const lines = result.logs
        .map(
            (entry) =>
                `<li class="log-${entry.level}">[${entry.at_ms.toFixed(0)}ms] ` +
                `${escapeHtml(entry.message)}</li>`,
        )
        .join('');
    return `<ul class="logs">${lines}</ul>`;
}

export function renderResultRow(result: TestResult, rerun: boolean): string {
    const alert = ALERT_STATUSES.has(result.status);
    const classes = ['result-row', `status-${result.status}`, alert ? 'alert' : '']
        .filter(Boolean)
        .join(' ');
    const advisory = alert
        ? `<p class="advisory">${escapeHtml(result.details)}</p>`
        : '';
    const rerunBadge = rerun ? '<span class="badge rerun">re-run</span>' : '';
    return (
        `<details class="${classes}" data-test-id="${escapeHtml(result.test_id)}">` +
        `<summary>` +
        `<code class="test-id">${escapeHtml(result.test_id)}</code> ` +
        `<span class="title">${escapeHtml(result.title)}</span> ` +
        `<span class="badge status ${result.status}">${result.status}</span> ` +
        `<span class="duration">${result.duration_ms.toFixed(1)} ms</span>` +
        rerunBadge +
        `</summary>` +
        advisory +
        `<p class="details">${escapeHtml(result.details)}</p>` +
        evidenceRows(result) +
        logLines(result) +
        `<button class="rerun-btn" data-test-id="${escapeHtml(result.test_id)}">re-run with extended budget</button>` +
        `</details>`
    );
}

export function renderDashboard(state: UiRunState, battery: string[]): string {
    const sections: string[] = [];
    if (state.phase === 'idle') {
        const checklist = battery
            .map(
                (id) =>
                    `<label><input type="checkbox" class="module-pick" value="${escapeHtml(id)}" checked> ` +
                    `<code>${escapeHtml(id)}</code></label>`,
            )
            .join('');
        sections.push(`<div id="module-checklist">${checklist}</div>`);
        sections.push('<button id="run-btn">Run</button>');
    } else {
        const { completed, total } = state.progress;
        sections.push(
            `<div id="progress" data-phase="${state.phase}">` +
                `${state.phase}: ${completed}/${total}</div>`,
        );
        if (state.phase === 'running' || state.phase === 'cancelling') {
            sections.push('<button id="cancel-btn">Cancel</button>');
        }
    }
    const rows = state.live_results
        .map((result) => renderResultRow(result, state.rerun_ids.includes(result.test_id)))
        .join('\n');
    sections.push(`<div id="results">${rows}</div>`);
    if (state.phase === 'done' && state.report) {
        const score = state.report.score;
        sections.push(
            `<div id="score">score ${score.passed}/${score.applicable} = ${score.score.toFixed(4)}</div>`,
        );
        sections.push(
            '<button id="export-btn">Export report</button> ' +
                '<button id="submit-btn">Submit to collector</button>',
        );
    }
    if (state.error) {
        sections.push(`<div id="run-error">${escapeHtml(state.error)}</div>`);
    }
    return `<section id="dashboard">${sections.join('\n')}</section>`;
}

export function renderBaselineDiff(deviations: BaselineDeviation[]): string {
    if (deviations.length === 0) {
        return '<p id="baseline-diff" class="empty">no deviations from baseline</p>';
    }
    const rows = deviations
        .map(
            (d) =>
                `<tr><td><code>${escapeHtml(d.test_id)}</code></td>` +
                `<td>${escapeHtml(d.expected)}</td><td>${escapeHtml(d.observed)}</td></tr>`,
        )
        .join('');
    return (
        '<table id="baseline-diff"><thead><tr><th>test</th><th>expected</th>' +
        `<th>observed</th></tr></thead><tbody>${rows}</tbody></table>`
    );
}
