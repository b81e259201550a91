import { readFileSync } from 'node:fs';
import { resolve } from 'node:path';

import { ApiError, type TriageApi } from './api.js';
import type {
  CandidateResponse,
  CoverageManifestEntry,
  ReportPayload,
} from './types.js';

// Recorded service traffic for one fixture session (see
// scripts/export_ui_fixtures.py in the repository root).
export interface SessionRecording {
  session: string;
  initial_report: ReportPayload;
  candidate_request: CoverageManifestEntry;
  candidate_response: CandidateResponse;
  resolves: { compartment: string; report: ReportPayload }[];
  conflict: { compartment: string; status: number; detail: string };
  final_report: ReportPayload;
}

export function loadRecording(): SessionRecording {
  // vitest runs from the frontend directory; jsdom rewrites import.meta.url,
  // so resolve against the working directory instead.
  const path = resolve(process.cwd(), 'fixtures', 'session.json');
  return JSON.parse(readFileSync(path, 'utf-8')) as SessionRecording;
}

// Replays the recording: the same requests in the same order yield the same
// payloads the live service produced.
export class FixtureApi implements TriageApi {
  readonly calls: string[] = [];
  private current: ReportPayload;
  private resolvedIds: Set<string>;

  constructor(private readonly recording: SessionRecording) {
    this.current = recording.initial_report;
    this.resolvedIds = new Set();
  }

  async getReport(): Promise<ReportPayload> {
    this.calls.push('getReport');
    return this.current;
  }

  async submitCandidate(entry: CoverageManifestEntry): Promise<CandidateResponse> {
    this.calls.push(`submitCandidate:${entry.input}`);
    if (JSON.stringify(entry) !== JSON.stringify(this.recording.candidate_request)) {
      throw new ApiError(422, 'unexpected candidate for this recording');
    }
    this.current = this.recording.candidate_response.report;
    for (const resolved of this.current.resolved ?? []) {
      this.resolvedIds.add(`${resolved.function}:${resolved.entry_block}`);
    }
    return this.recording.candidate_response;
  }

  async resolveCompartment(id: string): Promise<ReportPayload> {
    this.calls.push(`resolve:${id}`);
    if (this.resolvedIds.has(id)) {
      throw new ApiError(409, `${id} already resolved`);
    }
    const step = this.recording.resolves.find((r) => r.compartment === id);
    if (!step) {
      throw new ApiError(404, `unknown compartment ${id}`);
    }
    this.resolvedIds.add(id);
    this.current = step.report;
    return step.report;
  }
}
