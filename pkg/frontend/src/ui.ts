// DOM builders for the console. Pure functions from service payloads to
// elements; the only innerHTML sink is the SVG panel, which by design shows
// the service's rendered markup verbatim.

import type { GenerationResult, Violation } from './api.js';
import type { SessionTurn } from './session.js';

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function violationCounts(result: GenerationResult): {
  errors: number;
  warnings: number;
} {
  let errors = 0;
  for (const v of result.violations) {
    if (v.severity === 'error') errors += 1;
  }
  return { errors, warnings: result.violations.length - errors };
}

function violationList(violations: Violation[]): HTMLElement {
  const list = el('ul', 'violations');
  for (const v of violations) {
    const item = el('li', `violation ${v.severity}`);
    item.append(
      el('span', 'rule-id', v.rule_id),
      el('span', 'severity', v.severity),
      // message carries the guideline's own wording plus the finding
      el('span', 'rule-text', v.message),
    );
    item.dataset.element = v.element;
    list.append(item);
  }
  return list;
}

function plotPanel(svg: string): HTMLElement {
  const panel = el('figure', 'plot');
  panel.innerHTML = svg;
  return panel;
}

/** One completed exchange: prompt, classification, report, plot, findings. */
export function renderTurnCard(
  result: GenerationResult,
  svg: string | null,
): HTMLElement {
  const card = el('article', 'turn');
  card.dataset.resultId = result.result_id;

  const promptRow = el('header', 'prompt');
  promptRow.append(el('span', 'label', 'you'), el('span', 'text', result.prompt));
  card.append(promptRow);

  if (result.refusal !== null) {
    card.append(el('div', 'refusal card', result.refusal));
    return card; // refused requests have no report, plot, or findings
  }

  const meta = el('div', 'classification');
  const columns = result.request.columns.join(', ') || '(defaults)';
  meta.append(
    el('span', 'kind', result.request.class),
    el('span', 'columns', columns),
  );
  card.append(meta);

  if (result.report) {
    const report = el('details', 'report');
    report.append(el('summary', undefined, 'analysis report'));
    const body = el('pre', 'report-text');
    body.textContent = result.report.rendered_text;
    report.append(body);
    card.append(report);
  }

  if (result.spec_error) {
    card.append(el('div', 'spec-error card', `no usable plot spec: ${result.spec_error}`));
  }

  const counts = violationCounts(result);
  const findings = el('section', 'findings');
  findings.append(
    el(
      'h3',
      undefined,
      `${counts.errors} error(s), ${counts.warnings} warning(s)`,
    ),
  );
  if (result.violations.length > 0) {
    findings.append(violationList(result.violations));
  }
  card.append(findings);

  if (svg !== null) {
    card.append(plotPanel(svg));
  } else if (result.render_error) {
    card.append(el('div', 'render-error card', `rendering failed: ${result.render_error}`));
  }
  return card;
}

/** Inline notice for a persisted turn whose result no longer exists. */
export function renderMissingResult(turn: SessionTurn): HTMLElement {
  const card = el('article', 'turn missing');
  const promptRow = el('header', 'prompt');
  promptRow.append(el('span', 'label', 'you'), el('span', 'text', turn.prompt));
  card.append(
    promptRow,
    el('div', 'notice card', `result ${turn.resultId} is no longer available`),
  );
  return card;
}

/** Service-failure banner; callers append it without clearing the log. */
export function renderErrorBanner(message: string): HTMLElement {
  const banner = el('div', 'banner error');
  banner.setAttribute('role', 'alert');
  banner.textContent = message;
  return banner;
}

export interface ComparePanelInput {
  turn: SessionTurn;
  result: GenerationResult | null;
  svg: string | null;
}

function comparePanel(input: ComparePanelInput): HTMLElement {
  const panel = el('section', 'compare-panel');
  panel.append(el('h3', undefined, input.turn.prompt));
  if (input.result === null) {
    panel.append(
      el('div', 'notice card', `result ${input.turn.resultId} is no longer available`),
    );
    return panel;
  }
  const counts = violationCounts(input.result);
  panel.append(
    el('p', 'counts', `${counts.errors} error(s), ${counts.warnings} warning(s)`),
  );
  if (input.svg !== null) {
    panel.append(plotPanel(input.svg));
  }
  return panel;
}

/** Two turns side by side: plot and violation counts for each. */
export function renderCompareView(
  a: ComparePanelInput,
  b: ComparePanelInput,
): HTMLElement {
  const view = el('div', 'compare');
  view.append(comparePanel(a), comparePanel(b));
  return view;
}
