import type {
  CandidateResponse,
  CoverageManifestEntry,
  ReportPayload,
  StabilityResponse,
} from './types.js';

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

// The surface the app needs from one session; tests substitute a fake.
export interface TriageApi {
  getReport(): Promise<ReportPayload>;
  submitCandidate(entry: CoverageManifestEntry): Promise<CandidateResponse>;
  resolveCompartment(id: string): Promise<ReportPayload>;
}

async function parseError(response: Response): Promise<ApiError> {
  let detail = response.statusText;
  try {
    const body = await response.json();
    if (typeof body.detail === 'string') detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(response.status, detail);
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, init);
  if (!response.ok) {
    throw await parseError(response);
  }
  return response.json() as Promise<T>;
}

export class CompassApi implements TriageApi {
  constructor(
    private readonly baseUrl: string,
    public readonly sessionId: string
  ) {}

  private url(path: string): string {
    return `${this.baseUrl}/sessions/${encodeURIComponent(this.sessionId)}${path}`;
  }

  static async createSession(
    baseUrl: string,
    payload: unknown
  ): Promise<{ id: string; report: ReportPayload }> {
    return request(`${baseUrl}/sessions`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(payload),
    });
  }

  getReport(): Promise<ReportPayload> {
    return request(this.url('/report?format=json'));
  }

  getCompartment(id: string): Promise<ReportPayload['entries'][number]> {
    return request(this.url(`/compartments/${encodeURIComponent(id)}`));
  }

  submitCandidate(entry: CoverageManifestEntry): Promise<CandidateResponse> {
    return request(this.url('/candidates'), {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(entry),
    });
  }

  resolveCompartment(id: string): Promise<ReportPayload> {
    return request(this.url(`/compartments/${encodeURIComponent(id)}/resolve`), {
      method: 'POST',
    });
  }

  stability(body: Record<string, unknown>): Promise<StabilityResponse> {
    return request(this.url('/stability'), {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body),
    });
  }
}
