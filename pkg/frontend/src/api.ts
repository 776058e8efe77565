// Thin typed client over the pipeline service. Every displayed value
// comes from these responses; the UI never recomputes quality metrics.

import type {
  BatchCommandResponse,
  BatchForm,
  SampleDetail,
  SamplesListing,
  SessionInfo,
  SessionState,
  StageName,
} from './types';

export class ApiError extends Error {
  constructor(
    public status: number,
    detail: string,
  ) {
    super(detail);
  }
}

async function parseError(response: Response): Promise<never> {
  let detail = `HTTP ${response.status}`;
  try {
    const body = await response.json();
    if (body && typeof body.detail === 'string') detail = body.detail;
  } catch {
    // keep the generic message
  }
  throw new ApiError(response.status, detail);
}

export class ApiClient {
  constructor(public baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/+$/, '');
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(`${this.baseUrl}${path}`, init);
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body ?? {}),
    });
  }

  createSession(language: string, rngSeed?: number): Promise<SessionInfo> {
    const body: Record<string, unknown> = { language };
    if (rngSeed !== undefined) body.rng_seed = rngSeed;
    return this.post('/sessions', body);
  }

  getSession(sessionId: string): Promise<SessionState> {
    return this.request(`/sessions/${sessionId}`);
  }

  runStage(sessionId: string, stage: StageName, body?: unknown): Promise<unknown> {
    return this.post(`/sessions/${sessionId}/${stage}`, body ?? {});
  }

  sessionAudioUrl(sessionId: string, turn: number | 'dialogue'): string {
    return `${this.baseUrl}/sessions/${sessionId}/audio/${turn}`;
  }

  packageUrl(sessionId: string): string {
    return `${this.baseUrl}/sessions/${sessionId}/package`;
  }

  listSamples(dir: string): Promise<SamplesListing> {
    return this.request(`/samples?dir=${encodeURIComponent(dir)}`);
  }

  sampleDetail(dialogueId: string, dir: string): Promise<SampleDetail> {
    return this.request(`/samples/${dialogueId}?dir=${encodeURIComponent(dir)}`);
  }

  sampleAudioUrl(dialogueId: string, dir: string, turn: number | 'dialogue'): string {
    return `${this.baseUrl}/samples/${dialogueId}/audio/${turn}?dir=${encodeURIComponent(dir)}`;
  }

  batchCommand(form: BatchForm): Promise<BatchCommandResponse> {
    return this.post('/tools/batch-command', form);
  }
}
