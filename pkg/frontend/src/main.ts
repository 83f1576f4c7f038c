// Console wiring: study picker, prompt form, turn log, compare view.
// All analysis content comes from the service; this file only moves it
// into the DOM and keeps the turn list in sync with session storage.

import { ApiClient, ApiError } from './api.js';
import type { GenerationResult, StudySummary } from './api.js';
import { SessionStore } from './session.js';
import type { SessionTurn } from './session.js';
import {
  renderCompareView,
  renderErrorBanner,
  renderMissingResult,
  renderTurnCard,
} from './ui.js';
import type { ComparePanelInput } from './ui.js';

/** The service calls the console makes; ApiClient satisfies it. */
export interface ConsoleApi {
  listStudies(): Promise<StudySummary[]>;
  generate(studyId: string, prompt: string): Promise<GenerationResult>;
  getResult(resultId: string): Promise<GenerationResult>;
  getResultSvg(resultId: string): Promise<string>;
}

interface ConsoleElements {
  studySelect: HTMLSelectElement;
  promptInput: HTMLInputElement;
  submitButton: HTMLButtonElement;
  turnLog: HTMLElement;
  compareA: HTMLSelectElement;
  compareB: HTMLSelectElement;
  compareButton: HTMLButtonElement;
  compareRegion: HTMLElement;
}

function requireElement<T extends Element>(root: ParentNode, selector: string): T {
  const node = root.querySelector(selector);
  if (node === null) throw new Error(`console shell is missing ${selector}`);
  return node as T;
}

async function fetchSvg(api: ConsoleApi, result: GenerationResult): Promise<string | null> {
  if (result.svg_ref === null) return null;
  return api.getResultSvg(result.result_id);
}

export class Console {
  private pending = false;

  constructor(
    private readonly dom: ConsoleElements,
    private readonly api: ConsoleApi,
    private readonly store: SessionStore,
  ) {}

  /** True while a generate call is outstanding; submit stays disabled. */
  get busy(): boolean {
    return this.pending;
  }

  async loadStudies(): Promise<void> {
    const studies = await this.api.listStudies();
    this.dom.studySelect.replaceChildren();
    for (const study of studies) {
      const option = document.createElement('option');
      option.value = study.id;
      option.textContent = `${study.title} (${study.designs} designs)`;
      this.dom.studySelect.append(option);
    }
  }

  /** Rebuild the turn log from persisted result ids. */
  async restoreSession(): Promise<void> {
    const restored = await this.store.restore(this.api);
    this.dom.turnLog.replaceChildren();
    for (const { turn, result } of restored) {
      if (result === null) {
        this.dom.turnLog.append(renderMissingResult(turn));
        continue;
      }
      let svg: string | null = null;
      try {
        svg = await fetchSvg(this.api, result);
      } catch {
        svg = null; // plot gone but the turn itself still renders
      }
      this.dom.turnLog.append(renderTurnCard(result, svg));
    }
    this.refreshCompareChoices();
  }

  async submitPrompt(): Promise<void> {
    if (this.pending) return;
    const studyId = this.dom.studySelect.value;
    const prompt = this.dom.promptInput.value.trim();
    if (!studyId || !prompt) return;

    this.pending = true;
    this.dom.submitButton.disabled = true;
    try {
      const result = await this.api.generate(studyId, prompt);
      const svg = await fetchSvg(this.api, result);
      this.dom.turnLog.append(renderTurnCard(result, svg));
      this.store.add(prompt, result.result_id);
      this.dom.promptInput.value = '';
      this.refreshCompareChoices();
    } catch (err) {
      // keep every prior turn; failures surface as a banner at the log tail
      const message =
        err instanceof ApiError
          ? `service error (${err.status}): ${err.message}`
          : `service unreachable: ${String(err)}`;
      this.dom.turnLog.append(renderErrorBanner(message));
    } finally {
      this.pending = false;
      this.dom.submitButton.disabled = false;
    }
  }

  async showCompare(): Promise<void> {
    const turns = this.store.list();
    const a = turns[Number(this.dom.compareA.value)];
    const b = turns[Number(this.dom.compareB.value)];
    if (a === undefined || b === undefined) return;
    const [left, right] = await Promise.all([
      this.comparePanelInput(a),
      this.comparePanelInput(b),
    ]);
    this.dom.compareRegion.replaceChildren(renderCompareView(left, right));
  }

  private async comparePanelInput(turn: SessionTurn): Promise<ComparePanelInput> {
    try {
      const result = await this.api.getResult(turn.resultId);
      const svg = await fetchSvg(this.api, result);
      return { turn, result, svg };
    } catch {
      return { turn, result: null, svg: null };
    }
  }

  private refreshCompareChoices(): void {
    const turns = this.store.list();
    for (const select of [this.dom.compareA, this.dom.compareB]) {
      select.replaceChildren();
      turns.forEach((turn, i) => {
        const option = document.createElement('option');
        option.value = String(i);
        option.textContent = `#${i + 1}: ${turn.prompt}`;
        select.append(option);
      });
    }
    const enabled = turns.length > 0;
    this.dom.compareButton.disabled = !enabled;
  }
}

export function initConsole(
  root: ParentNode,
  api: ConsoleApi = new ApiClient(),
  store: SessionStore = new SessionStore(),
): Console {
  const dom: ConsoleElements = {
    studySelect: requireElement(root, '#study-select'),
    promptInput: requireElement(root, '#prompt-input'),
    submitButton: requireElement(root, '#submit-button'),
    turnLog: requireElement(root, '#turn-log'),
    compareA: requireElement(root, '#compare-a'),
    compareB: requireElement(root, '#compare-b'),
    compareButton: requireElement(root, '#compare-button'),
    compareRegion: requireElement(root, '#compare-region'),
  };
  const app = new Console(dom, api, store);

  requireElement<HTMLFormElement>(root, '#prompt-form').addEventListener(
    'submit',
    (event) => {
      event.preventDefault();
      void app.submitPrompt();
    },
  );
  dom.compareButton.addEventListener('click', () => {
    void app.showCompare();
  });

  void (async () => {
    try {
      await app.loadStudies();
      await app.restoreSession();
    } catch (err) {
      dom.turnLog.append(
        renderErrorBanner(`could not reach the service: ${String(err)}`),
      );
    }
  })();
  return app;
}

const shell = typeof document === 'undefined' ? null : document.getElementById('console-root');
if (shell !== null) {
  initConsole(shell);
}
