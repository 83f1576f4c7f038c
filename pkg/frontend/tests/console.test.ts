// @vitest-environment jsdom
import { beforeEach, describe, expect, it } from 'vitest';

import { ApiError } from '../src/api.js';
import type { GenerationResult, StudySummary } from '../src/api.js';
import { initConsole } from '../src/main.js';
import type { Console, ConsoleApi } from '../src/main.js';
import { SessionStore } from '../src/session.js';
import type { StorageLike } from '../src/session.js';
import { SAMPLE_SVG, SHELL_HTML, makeResult } from './helpers.js';

class MemoryStorage implements StorageLike {
  private items = new Map<string, string>();

  getItem(key: string): string | null {
    return this.items.get(key) ?? null;
  }

  setItem(key: string, value: string): void {
    this.items.set(key, value);
  }

  removeItem(key: string): void {
    this.items.delete(key);
  }
}

const STUDIES: StudySummary[] = [
  {
    id: 'battery-pack',
    title: 'Battery Pack Structural Study',
    designs: 30,
    variables: ['Cell_Thickness'],
    objectives: [{ name: 'Total_Mass', direction: 'minimize' }],
    responses: [],
    constraints: [],
  },
];

interface StubBehavior {
  generate?: (studyId: string, prompt: string) => Promise<GenerationResult>;
  getResult?: (resultId: string) => Promise<GenerationResult>;
  getResultSvg?: (resultId: string) => Promise<string>;
}

function stubApi(behavior: StubBehavior = {}): ConsoleApi {
  return {
    listStudies: async () => STUDIES,
    generate:
      behavior.generate ?? (async (studyId) => makeResult({ study_id: studyId })),
    getResult: behavior.getResult ?? (async () => makeResult()),
    getResultSvg: behavior.getResultSvg ?? (async () => SAMPLE_SVG),
  };
}

function deferred<T>(): {
  promise: Promise<T>;
  resolve: (value: T) => void;
  reject: (reason: unknown) => void;
} {
  let resolve!: (value: T) => void;
  let reject!: (reason: unknown) => void;
  const promise = new Promise<T>((res, rej) => {
    resolve = res;
    reject = rej;
  });
  return { promise, resolve, reject };
}

function settle(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}

interface Fixture {
  app: Console;
  root: HTMLElement;
  store: SessionStore;
}

async function boot(behavior: StubBehavior = {}, store?: SessionStore): Promise<Fixture> {
  document.body.innerHTML = SHELL_HTML;
  const root = document.getElementById('console-root');
  if (root === null) throw new Error('shell missing');
  const sessionStore = store ?? new SessionStore(new MemoryStorage());
  const app = initConsole(root, stubApi(behavior), sessionStore);
  await settle(); // boot loads studies and restores the session
  return { app, root, store: sessionStore };
}

function submit(root: HTMLElement, prompt: string): void {
  const input = root.querySelector<HTMLInputElement>('#prompt-input');
  const form = root.querySelector<HTMLFormElement>('#prompt-form');
  if (input === null || form === null) throw new Error('shell missing');
  input.value = prompt;
  form.dispatchEvent(new Event('submit', { cancelable: true }));
}

describe('console boot', () => {
  beforeEach(() => {
    document.body.innerHTML = '';
  });

  it('fills the study picker from the service', async () => {
    const { root } = await boot();
    const options = root.querySelectorAll('#study-select option');
    expect(options).toHaveLength(1);
    expect(options[0]?.textContent).toBe('Battery Pack Structural Study (30 designs)');
    expect((options[0] as HTMLOptionElement).value).toBe('battery-pack');
  });

  it('rebuilds persisted turns from their result ids', async () => {
    const storage = new MemoryStorage();
    const seed = new SessionStore(storage);
    seed.add('kept turn', 'a'.repeat(16));
    seed.add('vanished turn', 'f'.repeat(16));

    const { root } = await boot(
      {
        getResult: async (id) => {
          if (id === 'a'.repeat(16)) return makeResult({ result_id: id });
          throw new ApiError(404, { error: 'unknown result', kind: 'not_found' });
        },
      },
      new SessionStore(storage),
    );

    const log = root.querySelector('#turn-log');
    expect(log?.querySelectorAll('article.turn')).toHaveLength(2);
    expect(log?.querySelector('article.turn svg')).not.toBeNull();
    expect(log?.querySelector('article.turn.missing .notice.card')?.textContent).toContain(
      'f'.repeat(16),
    );
  });
});

describe('submitting a prompt', () => {
  beforeEach(() => {
    document.body.innerHTML = '';
  });

  it('appends a turn card with the inline plot and records the turn', async () => {
    const { root, store } = await boot();
    submit(root, 'plot the optimization history');
    await settle();

    const card = root.querySelector('#turn-log article.turn');
    expect(card?.querySelector('svg')).not.toBeNull();
    expect(card?.querySelector('.findings h3')?.textContent).toBe(
      '0 error(s), 0 warning(s)',
    );
    expect(store.list()).toHaveLength(1);
    expect(store.list()[0]?.prompt).toBe('plot the optimization history');
    expect(root.querySelector<HTMLInputElement>('#prompt-input')?.value).toBe('');
  });

  it('disables submit while a request is in flight', async () => {
    const gate = deferred<GenerationResult>();
    const { app, root } = await boot({ generate: () => gate.promise });
    const button = root.querySelector<HTMLButtonElement>('#submit-button');

    submit(root, 'slow request');
    expect(app.busy).toBe(true);
    expect(button?.disabled).toBe(true);

    submit(root, 'second request while pending'); // must be ignored
    gate.resolve(makeResult());
    await settle();

    expect(app.busy).toBe(false);
    expect(button?.disabled).toBe(false);
    expect(root.querySelectorAll('#turn-log article.turn')).toHaveLength(1);
  });

  it('shows a refusal card and never fetches a plot', async () => {
    let svgCalls = 0;
    const { root, store } = await boot({
      generate: async () =>
        makeResult({ refusal: 'no plottable data in that request', report: null, svg_ref: null }),
      getResultSvg: async () => {
        svgCalls += 1;
        return SAMPLE_SVG;
      },
    });
    submit(root, 'order me a pizza');
    await settle();

    expect(root.querySelector('.refusal.card')?.textContent).toContain('no plottable data');
    expect(root.querySelector('figure.plot')).toBeNull();
    expect(svgCalls).toBe(0);
    expect(store.list()).toHaveLength(1); // refusals are still part of the session
  });

  it('keeps earlier turns when the service goes away mid-session', async () => {
    let failNow = false;
    const { root, store } = await boot({
      generate: async (studyId) => {
        if (failNow) throw new TypeError('fetch failed');
        return makeResult({ study_id: studyId });
      },
    });

    submit(root, 'first, while healthy');
    await settle();
    failNow = true;
    submit(root, 'second, after the crash');
    await settle();

    const log = root.querySelector('#turn-log');
    expect(log?.querySelectorAll('article.turn')).toHaveLength(1);
    expect(log?.querySelector('article.turn svg')).not.toBeNull();
    const banner = log?.querySelector('.banner.error');
    expect(banner?.textContent).toContain('service unreachable');
    expect(store.list()).toHaveLength(1); // the failed prompt is not recorded
  });

  it('reports service errors with their status and message', async () => {
    const { root } = await boot({
      generate: async () => {
        throw new ApiError(502, { error: '[stage complete] backend down', kind: 'GatewayError' });
      },
    });
    submit(root, 'anything');
    await settle();

    expect(root.querySelector('.banner.error')?.textContent).toBe(
      'service error (502): [stage complete] backend down',
    );
  });
});

describe('compare view', () => {
  beforeEach(() => {
    document.body.innerHTML = '';
  });

  it('renders the two selected turns side by side', async () => {
    const { root } = await boot({
      getResult: async (id) => makeResult({ result_id: id }),
    });
    submit(root, 'first plot');
    await settle();
    submit(root, 'second plot');
    await settle();

    const [a, b] = [
      root.querySelector<HTMLSelectElement>('#compare-a'),
      root.querySelector<HTMLSelectElement>('#compare-b'),
    ];
    expect(a?.options).toHaveLength(2);
    if (a && b) {
      a.value = '0';
      b.value = '1';
    }
    root.querySelector<HTMLButtonElement>('#compare-button')?.click();
    await settle();

    const panels = root.querySelectorAll('#compare-region .compare-panel');
    expect(panels).toHaveLength(2);
    expect(panels[0]?.querySelector('svg')).not.toBeNull();
    expect(panels[1]?.querySelector('svg')).not.toBeNull();
  });

  it('flags a turn whose result has been deleted', async () => {
    const { root } = await boot({
      getResult: async (id) => {
        if (id === makeResult().result_id) return makeResult();
        throw new ApiError(404, { error: 'unknown result', kind: 'not_found' });
      },
      generate: async (_study, prompt) =>
        prompt === 'doomed'
          ? makeResult({ result_id: 'f'.repeat(16), svg_ref: null, spec: null })
          : makeResult(),
    });
    submit(root, 'survives');
    await settle();
    submit(root, 'doomed');
    await settle();

    const [a, b] = [
      root.querySelector<HTMLSelectElement>('#compare-a'),
      root.querySelector<HTMLSelectElement>('#compare-b'),
    ];
    if (a && b) {
      a.value = '0';
      b.value = '1';
    }
    root.querySelector<HTMLButtonElement>('#compare-button')?.click();
    await settle();

    const panels = root.querySelectorAll('#compare-region .compare-panel');
    expect(panels[0]?.querySelector('svg')).not.toBeNull();
    expect(panels[1]?.querySelector('.notice.card')?.textContent).toContain('f'.repeat(16));
  });
});
