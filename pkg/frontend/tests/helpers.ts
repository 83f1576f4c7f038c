import type { GenerationResult } from '../src/api.js';

export const SAMPLE_SVG =
  '<svg xmlns="http://www.w3.org/2000/svg" width="640" height="360" viewBox="0 0 640 360"><text x="10" y="20">Total_Mass over evaluations</text></svg>';

export function makeResult(overrides: Partial<GenerationResult> = {}): GenerationResult {
  return {
    result_id: 'ab12cd34ef56ab78',
    study_id: 'battery-pack',
    prompt: 'show how the objectives improved over the run',
    backend: 'mock',
    created_at: '2026-08-22T09:00:00Z',
    prompt_fingerprint: '0'.repeat(64),
    refusal: null,
    request: {
      class: 'history',
      columns: ['Total_Mass', 'First_Torsion_Frequency'],
      raw_prompt: 'show how the objectives improved over the run',
      confidence: 0.9,
      unresolved_mentions: [],
    },
    report: {
      study_id: 'battery-pack',
      rendered_text:
        "Analysis of study 'battery-pack'\n\nConvergence:\n- Total_Mass: converged",
      feasible_count: 24,
      infeasible_count: 6,
      scale_disparity: true,
      columns: [],
      convergence: [],
      best: [],
      correlations: [],
      disparity_pairs: [],
    },
    completion_text: '```json\n{}\n```',
    spec: { kind: 'history' },
    spec_error: null,
    violations: [],
    svg_ref: 'results/ab12cd34ef56ab78.svg',
    render_error: null,
    timings_ms: { total: 12 },
    ...overrides,
  };
}

export const SHELL_HTML = `
  <main id="console-root">
    <form id="prompt-form">
      <select id="study-select"></select>
      <input id="prompt-input" type="text">
      <button id="submit-button" type="submit">generate</button>
    </form>
    <section id="turn-log"></section>
    <select id="compare-a"></select>
    <select id="compare-b"></select>
    <button id="compare-button" type="button" disabled>show</button>
    <section id="compare-region"></section>
  </main>
`;
