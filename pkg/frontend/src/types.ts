// Payload shapes served by the triage service. The UI is a pure projection
// of these documents; it never recomputes weights or ranks.

export interface ReportEntry {
  rank: number;
  function: string;
  weight: number;
  block_weight: number;
  calls_weight: number;
  profile_cnt: number;
  label: string;
  conditional: string;
  compartment: string;
  input: string;
  solution: string;
  status: string;
  kind: string;
  entry_block: string;
  conditional_block: string;
}

export interface ReportPayload {
  config: { max_exec_count: number; top_k: number; roots: string[] };
  snapshot: string;
  entries: ReportEntry[];
  resolved?: ReportEntry[];
}

export interface CoverageBlock {
  fn: string;
  block: string;
}

export interface CoverageManifestEntry {
  input: string;
  covered: CoverageBlock[];
}

export interface CandidateOutcome {
  compartment: string;
  reaches_conditional: boolean;
  unlocks_entry: boolean;
}

export interface CandidateResponse {
  input: string;
  outcomes: CandidateOutcome[];
  report: ReportPayload;
}

export interface StabilityResponse {
  still_locked?: number;
  entries?: number;
  topk_overlap?: number;
  k?: number;
  truncated?: boolean;
}

export function compartmentId(entry: ReportEntry): string {
  return `${entry.function}:${entry.entry_block}`;
}
