import { ApiError, type TriageApi } from './api.js';
import { buildBoardModel, renderBoard } from './board.js';
import type { CandidateResponse, CoverageManifestEntry, ReportPayload } from './types.js';

export interface HistoryEvent {
  action: 'candidate' | 'resolve';
  detail: string;
}

function validateManifestEntry(text: string): CoverageManifestEntry | string {
  let parsed: unknown;
  try {
    parsed = JSON.parse(text);
  } catch {
    return 'not valid JSON';
  }
  const entry = parsed as CoverageManifestEntry;
  if (typeof entry !== 'object' || entry === null) return 'manifest entry must be an object';
  if (typeof entry.input !== 'string' || entry.input === '') {
    return 'manifest entry needs an "input" name';
  }
  if (!Array.isArray(entry.covered)) return 'manifest entry needs a "covered" array';
  for (const block of entry.covered) {
    if (typeof block?.fn !== 'string' || typeof block?.block !== 'string') {
      return 'covered entries need "fn" and "block" strings';
    }
  }
  return entry;
}

// Drives the greedy triage loop against one session. Mutating requests are
// serialized (one in flight) and every mutation refetches via the response
// payload, so the board always equals the server's report.
export class TriageApp {
  readonly history: HistoryEvent[] = [];
  private report: ReportPayload | null = null;
  private lastEvaluation: CandidateResponse | null = null;
  private validationError = '';
  private toast = '';
  private loadError = '';
  private busy = false;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: TriageApi
  ) {}

  async start(): Promise<void> {
    try {
      this.report = await this.api.getReport();
      this.loadError = '';
    } catch (err) {
      this.loadError = err instanceof Error ? err.message : String(err);
    }
    this.render();
  }

  get currentReport(): ReportPayload | null {
    return this.report;
  }

  async submitCandidateText(text: string): Promise<void> {
    const entry = validateManifestEntry(text);
    if (typeof entry === 'string') {
      // Invalid manifests never reach the service.
      this.validationError = entry;
      this.render();
      return;
    }
    if (this.busy) return;
    this.busy = true;
    this.validationError = '';
    try {
      const response = await this.api.submitCandidate(entry);
      this.lastEvaluation = response;
      this.report = response.report;
      const unlocked = response.outcomes.filter((o) => o.unlocks_entry).map((o) => o.compartment);
      this.history.push({
        action: 'candidate',
        detail: `${entry.input} unlocked [${unlocked.join(', ')}]`,
      });
    } catch (err) {
      this.toast = err instanceof Error ? err.message : String(err);
    } finally {
      this.busy = false;
    }
    this.render();
  }

  async resolve(id: string): Promise<void> {
    if (this.busy) return;
    this.busy = true;
    try {
      this.report = await this.api.resolveCompartment(id);
      this.history.push({ action: 'resolve', detail: id });
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // Stale view: surface the conflict and resync with the server.
        this.toast = `already resolved: ${id}`;
        this.report = await this.api.getReport();
      } else {
        this.toast = err instanceof Error ? err.message : String(err);
      }
    } finally {
      this.busy = false;
    }
    this.render();
  }

  render(): void {
    this.root.replaceChildren();

    if (this.loadError) {
      const error = document.createElement('div');
      error.className = 'load-error';
      error.setAttribute('data-testid', 'load-error');
      error.textContent = `failed to load report: ${this.loadError}`;
      const retry = document.createElement('button');
      retry.textContent = 'retry';
      retry.addEventListener('click', () => void this.start());
      error.appendChild(retry);
      this.root.appendChild(error);
      return;
    }
    if (!this.report) return;

    if (this.toast) {
      const toast = document.createElement('div');
      toast.className = 'toast';
      toast.setAttribute('data-testid', 'toast');
      toast.textContent = this.toast;
      this.root.appendChild(toast);
      this.toast = '';
    }

    const board = renderBoard(buildBoardModel(this.report), {
      onResolve: (id) => void this.resolve(id),
    });
    this.root.appendChild(board);

    this.root.appendChild(this.candidateForm());
    if (this.lastEvaluation) {
      this.root.appendChild(this.evaluationPanel(this.lastEvaluation));
    }
    this.root.appendChild(this.historyPanel());
  }

  private candidateForm(): HTMLElement {
    const form = document.createElement('div');
    form.className = 'candidate-form';
    const heading = document.createElement('h3');
    heading.textContent = 'Submit candidate coverage';
    form.appendChild(heading);
    const textarea = document.createElement('textarea');
    textarea.setAttribute('data-testid', 'candidate-input');
    textarea.placeholder = '{"input": "seed.bin", "covered": [{"fn": "...", "block": "..."}]}';
    form.appendChild(textarea);
    const submit = document.createElement('button');
    submit.textContent = 'evaluate';
    submit.setAttribute('data-testid', 'candidate-submit');
    submit.addEventListener('click', () => void this.submitCandidateText(textarea.value));
    form.appendChild(submit);
    if (this.validationError) {
      const error = document.createElement('p');
      error.className = 'validation-error';
      error.setAttribute('data-testid', 'validation-error');
      error.textContent = this.validationError;
      form.appendChild(error);
    }
    return form;
  }

  private evaluationPanel(evaluation: CandidateResponse): HTMLElement {
    const panel = document.createElement('div');
    panel.className = 'evaluation-panel';
    panel.setAttribute('data-testid', 'evaluation-panel');
    const heading = document.createElement('h3');
    heading.textContent = `Evaluation of ${evaluation.input}`;
    panel.appendChild(heading);
    const list = document.createElement('ul');
    for (const outcome of evaluation.outcomes) {
      const item = document.createElement('li');
      item.setAttribute('data-cid', outcome.compartment);
      item.textContent =
        `${outcome.compartment}: reaches=${outcome.reaches_conditional} ` +
        `unlocks=${outcome.unlocks_entry}`;
      list.appendChild(item);
    }
    panel.appendChild(list);
    return panel;
  }

  private historyPanel(): HTMLElement {
    const panel = document.createElement('div');
    panel.className = 'history-panel';
    panel.setAttribute('data-testid', 'history');
    const heading = document.createElement('h3');
    heading.textContent = 'Session history';
    panel.appendChild(heading);
    const list = document.createElement('ol');
    for (const event of this.history) {
      const item = document.createElement('li');
      item.textContent = `${event.action}: ${event.detail}`;
      list.appendChild(item);
    }
    panel.appendChild(list);
    return panel;
  }
}
