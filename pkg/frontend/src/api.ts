// Typed client for the generation service's JSON API.
// All analytics shown in the console come from these responses verbatim;
// the client never recomputes statistics locally.

export interface ObjectiveSummary {
  name: string;
  direction: string;
}

export interface StudySummary {
  id: string;
  title: string;
  designs: number;
  variables: string[];
  objectives: ObjectiveSummary[];
  responses: string[];
  constraints: string[];
}

export interface ClassifiedRequest {
  class: string;
  columns: string[];
  raw_prompt: string;
  confidence: number;
  unresolved_mentions: string[];
}

export interface Violation {
  rule_id: string;
  severity: 'error' | 'warning';
  message: string;
  element: string;
}

export interface AnalysisReport {
  study_id: string;
  rendered_text: string;
  feasible_count: number;
  infeasible_count: number;
  scale_disparity: boolean;
  // structured mirrors of the text sections; the console shows rendered_text
  columns: unknown[];
  convergence: unknown[];
  best: unknown[];
  correlations: unknown[];
  disparity_pairs: unknown[];
}

export interface GenerationResult {
  result_id: string;
  study_id: string;
  prompt: string;
  request: ClassifiedRequest;
  report: AnalysisReport | null;
  prompt_fingerprint: string | null;
  backend: string | null;
  completion_text: string | null;
  spec: Record<string, unknown> | null;
  spec_error: string | null;
  violations: Violation[];
  svg_ref: string | null;
  render_error: string | null;
  refusal: string | null;
  timings_ms: Record<string, number>;
  created_at: string;
}

export interface ApiErrorBody {
  error: string;
  kind: string;
}

/** A non-2xx response from the service, with its parsed error payload. */
export class ApiError extends Error {
  readonly status: number;
  readonly kind: string;

  constructor(status: number, body: ApiErrorBody) {
    super(body.error);
    this.status = status;
    this.kind = body.kind;
  }
}

async function asJson<T>(res: Response): Promise<T> {
  if (!res.ok) {
    let body: ApiErrorBody = { error: `HTTP ${res.status}`, kind: 'http' };
    try {
      body = (await res.json()) as ApiErrorBody;
    } catch {
      // non-JSON error body; keep the status-only message
    }
    throw new ApiError(res.status, body);
  }
  return res.json() as Promise<T>;
}

export class ApiClient {
  constructor(private readonly base: string = '') {}

  async listStudies(): Promise<StudySummary[]> {
    const res = await fetch(`${this.base}/api/studies`);
    const payload = await asJson<{ studies: StudySummary[] }>(res);
    return payload.studies;
  }

  async uploadStudy(document: string): Promise<StudySummary> {
    const res = await fetch(`${this.base}/api/studies`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: document,
    });
    const payload = await asJson<{ study: StudySummary }>(res);
    return payload.study;
  }

  async generate(studyId: string, prompt: string): Promise<GenerationResult> {
    const res = await fetch(`${this.base}/api/generate`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ study_id: studyId, prompt }),
    });
    return asJson<GenerationResult>(res);
  }

  async getResult(resultId: string): Promise<GenerationResult> {
    const res = await fetch(`${this.base}/api/results/${resultId}`);
    return asJson<GenerationResult>(res);
  }

  /** The rendered SVG markup for a result, verbatim from the service. */
  async getResultSvg(resultId: string): Promise<string> {
    const res = await fetch(`${this.base}/api/results/${resultId}.svg`);
    if (!res.ok) {
      let body: ApiErrorBody = { error: `HTTP ${res.status}`, kind: 'http' };
      try {
        body = (await res.json()) as ApiErrorBody;
      } catch {
        // fall through with the generic body
      }
      throw new ApiError(res.status, body);
    }
    return res.text();
  }
}
