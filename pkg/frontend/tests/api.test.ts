// Round-trip tests against a real service process with the mock backend.
import { afterAll, beforeAll, describe, expect, it } from 'vitest';
import { spawn } from 'node:child_process';
import type { ChildProcess } from 'node:child_process';
import { mkdtempSync, readFileSync, rmSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { fileURLToPath } from 'node:url';

import { ApiClient, ApiError } from '../src/api.js';

const STUDY_FILE = fileURLToPath(
  new URL('../../tests/fixtures/studies/battery-pack.json', import.meta.url),
);
const HISTORY_PROMPT = 'Please generate a history plot to check convergence.';

let proc: ChildProcess;
let dataDir: string;
let api: ApiClient;

function waitForReady(child: ChildProcess): Promise<string> {
  return new Promise((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error('service never came up')), 15000);
    let buffer = '';
    child.stdout?.on('data', (chunk: Buffer) => {
      buffer += chunk.toString();
      const match = buffer.match(/serving on (http:\/\/[^\s]+:\d+)/);
      if (match?.[1]) {
        clearTimeout(timer);
        resolve(match[1]);
      }
    });
    child.on('exit', (code) => {
      clearTimeout(timer);
      reject(new Error(`service exited early with code ${code}`));
    });
  });
}

function hasExited(child: ChildProcess): boolean {
  // a signal-killed child has exitCode null but signalCode set
  return child.exitCode !== null || child.signalCode !== null;
}

function waitForExit(child: ChildProcess): Promise<void> {
  return new Promise((resolve) => {
    if (hasExited(child)) resolve();
    else child.on('exit', () => resolve());
  });
}

beforeAll(async () => {
  dataDir = mkdtempSync(join(tmpdir(), 'console-api-'));
  proc = spawn(
    'python3',
    ['-u', '-m', 'vizagent', '--data-dir', dataDir, 'serve', '--port', '0', '--backend', 'mock'],
    { stdio: ['ignore', 'pipe', 'pipe'] },
  );
  const base = await waitForReady(proc);
  api = new ApiClient(base);
}, 30000);

afterAll(async () => {
  if (!hasExited(proc)) {
    proc.kill('SIGKILL');
    await waitForExit(proc);
  }
  rmSync(dataDir, { recursive: true, force: true });
}, 20000);

describe('service round trip', () => {
  it('uploads a study and lists it back', async () => {
    const uploaded = await api.uploadStudy(readFileSync(STUDY_FILE, 'utf8'));
    expect(uploaded.id).toBe('battery-pack');
    expect(uploaded.designs).toBe(30);

    const studies = await api.listStudies();
    expect(studies.map((s) => s.id)).toContain('battery-pack');
  });

  it('generates a clean history plot and serves its SVG', async () => {
    const result = await api.generate('battery-pack', HISTORY_PROMPT);

    expect(result.refusal).toBeNull();
    expect(result.request.class).toBe('history');
    expect(result.violations).toEqual([]);
    expect(result.report?.rendered_text).toContain('Convergence:');
    expect(result.svg_ref).toBe(`results/${result.result_id}.svg`);

    const svg = await api.getResultSvg(result.result_id);
    expect(svg.startsWith('<svg')).toBe(true);
  });

  it('fetches a stored result by id', async () => {
    const result = await api.generate('battery-pack', HISTORY_PROMPT);
    const fetched = await api.getResult(result.result_id);
    expect(fetched.result_id).toBe(result.result_id);
    expect(fetched.prompt).toBe(HISTORY_PROMPT);
  });

  it('surfaces service errors with status and kind', async () => {
    await expect(api.generate('no-such-study', HISTORY_PROMPT)).rejects.toMatchObject({
      status: 404,
      kind: 'UnknownStudyError',
    });
    await expect(api.generate('no-such-study', HISTORY_PROMPT)).rejects.toBeInstanceOf(
      ApiError,
    );
  });

  // keep this test last: it takes the service down for good
  it('rejects with a transport error once the service is gone', async () => {
    proc.kill('SIGKILL');
    await waitForExit(proc);

    const failure = api.generate('battery-pack', HISTORY_PROMPT);
    await expect(failure).rejects.toThrow();
    await expect(failure).rejects.not.toBeInstanceOf(ApiError);
  });
});
