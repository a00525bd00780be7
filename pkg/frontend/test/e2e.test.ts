/**
 * End-to-end: drive the real review server with the browser store, then
 * feed the reviewed table into dataset generation.
 *
 * Spawns `python3 -m usrep.cli serve` on a fixture table, approves one
 * fragment and edits another through ReviewStore, checks that an edit
 * dropping a protected term is rejected with an inline violation, and
 * finally checks that gen-dataset emits the edited English target verbatim.
 */

import { spawn, spawnSync } from 'node:child_process';
import type { ChildProcess } from 'node:child_process';
import { mkdtemp, readFile, writeFile } from 'node:fs/promises';
import { tmpdir } from 'node:os';
import * as path from 'node:path';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { ReviewApiClient } from '../src/api.js';
import { renderItem } from '../src/render.js';
import { ReviewStore } from '../src/store.js';
import type { ReviewItem } from '../src/types.js';

const PORT = 8900 + (process.pid % 97);
const BASE = `http://127.0.0.1:${PORT}`;

const EDITED_TARGET = 'no obvious mass is seen';
const EXPECTED_SENTENCE = 'the thyroid gland is normal in size,no obvious mass is seen.';

let dir: string;
let tablePath: string;
let corpusPath: string;
let auditPath: string;
let server: ChildProcess | null = null;
let serverLog = '';

const client = new ReviewApiClient(BASE);
const store = new ReviewStore(client, 'e2e');

function tsvRow(source: string, target: string): string {
  return [source, target, 'pending', '1', '', ''].join('\t');
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

async function waitForServer(proc: ChildProcess): Promise<void> {
  for (let i = 0; i < 100; i += 1) {
    if (proc.exitCode !== null) {
      throw new Error(`server exited before accepting connections:\n${serverLog}`);
    }
    try {
      const res = await fetch(`${BASE}/api/stats`);
      if (res.ok) return;
    } catch {
      // Not listening yet.
    }
    await sleep(150);
  }
  throw new Error(`server did not come up on ${BASE}:\n${serverLog}`);
}

function stopServer(): Promise<void> {
  const proc = server;
  // A signal-terminated child leaves exitCode null, so check both fields.
  if (!proc || proc.exitCode !== null || proc.signalCode !== null) return Promise.resolve();
  return new Promise((resolve) => {
    proc.once('exit', () => resolve());
    proc.kill('SIGTERM');
  });
}

function itemBySource(source: string): ReviewItem {
  const item = store.getState().items.find((candidate) => candidate.source === source);
  if (!item) throw new Error(`fragment not in local queue: ${source}`);
  return item;
}

beforeAll(async () => {
  dir = await mkdtemp(path.join(tmpdir(), 'usrep-e2e-'));
  tablePath = path.join(dir, 'table.tsv');
  corpusPath = path.join(dir, 'corpus.jsonl');
  auditPath = path.join(dir, 'audit.jsonl');

  const reports = [
    { id: 'r1', site: 'thyroid', language: 'zh', text: '甲状腺大小正常，未见明显肿块。', images: ['a.png', 'b.png'] },
    { id: 'r2', site: 'thyroid', language: 'zh', text: 'CFDI示血流信号正常。', images: ['c.png', 'd.png'] },
  ];
  await writeFile(corpusPath, reports.map((r) => JSON.stringify(r)).join('\n') + '\n', 'utf8');

  const table = [
    ['source', 'target', 'status', 'occurrences', 'reviewer', 'updated_at'].join('\t'),
    tsvRow('甲状腺大小正常', 'the thyroid gland is normal in size'),
    tsvRow('未见明显肿块', 'no mass'),
    tsvRow('CFDI示血流信号正常', 'CFDI shows a normal blood flow signal'),
  ];
  await writeFile(tablePath, table.join('\n') + '\n', 'utf8');

  server = spawn(
    'python3',
    [
      '-m', 'usrep.cli', 'serve',
      '--table', tablePath,
      '--corpus', corpusPath,
      '--audit-log', auditPath,
      '--bind', `127.0.0.1:${PORT}`,
    ],
    { cwd: dir, stdio: ['ignore', 'pipe', 'pipe'] },
  );
  server.stdout?.on('data', (chunk: Buffer) => { serverLog += chunk.toString(); });
  server.stderr?.on('data', (chunk: Buffer) => { serverLog += chunk.toString(); });
  await waitForServer(server);
});

afterAll(async () => {
  await stopServer();
});

describe('live review flow', () => {
  it('loads the pending queue in server order', async () => {
    await store.loadPage({});
    const state = store.getState();
    expect(state.total).toBe(3);
    expect(state.statusCounts).toEqual({ pending: 3, approved: 0, edited: 0, rejected: 0 });
    // Equal occurrence counts, so the tie-break on source decides.
    expect(state.items.map((item) => item.source)).toEqual([
      'CFDI示血流信号正常',
      '未见明显肿块',
      '甲状腺大小正常',
    ]);
    expect(state.items.every((item) => item.status === 'pending')).toBe(true);
    const cfdi = itemBySource('CFDI示血流信号正常');
    expect(cfdi.protected_terms).toContain('CFDI');
    expect(cfdi.contexts.some((ctx) => ctx.report_id === 'r2' && ctx.site === 'thyroid')).toBe(true);
  });

  it('approves one fragment and edits another', async () => {
    const approved = await store.submitDecision(itemBySource('甲状腺大小正常').hash, 'approve');
    expect(approved.ok).toBe(true);
    expect(approved.item?.status).toBe('approved');
    expect(approved.item?.reviewer).toBe('e2e');

    const edited = await store.submitDecision(itemBySource('未见明显肿块').hash, 'edit', EDITED_TARGET);
    expect(edited.ok).toBe(true);
    expect(edited.item?.status).toBe('edited');
    expect(edited.item?.target).toBe(EDITED_TARGET);

    expect(store.getState().statusCounts).toEqual({ pending: 1, approved: 1, edited: 1, rejected: 0 });
  });

  it('rejects an edit that drops a protected term, inline', async () => {
    const hash = itemBySource('CFDI示血流信号正常').hash;
    const outcome = await store.submitDecision(hash, 'edit', 'blood flow signal is normal');
    expect(outcome.ok).toBe(false);
    expect(outcome.reason).toBe('validation');
    expect(outcome.violations?.[0]?.term).toBe('CFDI');

    // The rejection is shown inline on the item, with the term marked.
    const html = renderItem(itemBySource('CFDI示血流信号正常'), store.uiFor(hash), {
      editing: false,
      focused: false,
    });
    expect(html).toContain('class="violations"');
    expect(html).toContain('<mark class="term">CFDI</mark>');

    // The rollback left the local entry untouched, and the server never applied it.
    expect(itemBySource('CFDI示血流信号正常').status).toBe('pending');
    const onServer = await client.getFragment(hash);
    expect(onServer.status).toBe('pending');
    expect(onServer.target).toBe('CFDI shows a normal blood flow signal');
  });

  it('matches server state exactly after reconciliation', async () => {
    await store.reconcile();
    const state = store.getState();
    const page = await client.listFragments(state.filter);
    expect(state.items).toEqual(page.items);
    expect(state.statusCounts).toEqual(page.status_counts);

    // Accepted decisions are audited; the rejected edit is not.
    const audit = (await readFile(auditPath, 'utf8')).trim().split('\n');
    expect(audit).toHaveLength(2);
    expect(audit.map((line) => JSON.parse(line).action).sort()).toEqual(['approve', 'edit']);
  });
});

describe('dataset generation from the reviewed table', () => {
  it('includes the edited English target verbatim and skips the unresolved report', async () => {
    await stopServer();

    const samplesPath = path.join(dir, 'samples.jsonl');
    const result = spawnSync(
      'python3',
      ['-m', 'usrep.cli', 'gen-dataset', '--corpus', corpusPath, '--table', tablePath, '--out', samplesPath],
      { cwd: dir, encoding: 'utf8' },
    );
    expect(result.status, result.stderr).toBe(0);

    const samples = (await readFile(samplesPath, 'utf8'))
      .trim()
      .split('\n')
      .map((line) => JSON.parse(line) as { id: string; prompt_type: string; messages: { role: string; content: string }[] });
    expect(samples).toHaveLength(6);

    const query = samples.find((s) => s.id === 'r1' && s.prompt_type === 'en_from_zh_query');
    expect(query).toBeDefined();
    const answer = query!.messages.find((m) => m.role === 'assistant');
    expect(answer?.content).toBe(EXPECTED_SENTENCE);

    // r2 keeps only the Chinese-target prompts while its fragment is pending.
    expect(samples.filter((s) => s.id === 'r2').map((s) => s.prompt_type)).toEqual([
      'zh_from_images',
      'zh_from_en_query',
    ]);

    const skips = (await readFile(`${samplesPath}.skips`, 'utf8'))
      .trim()
      .split('\n')
      .map((line) => JSON.parse(line) as { id: string; unresolved_fragments: string[] });
    expect(skips).toHaveLength(1);
    expect(skips[0]!.id).toBe('r2');
    expect(skips[0]!.unresolved_fragments).toContain('CFDI示血流信号正常');
  });
});
