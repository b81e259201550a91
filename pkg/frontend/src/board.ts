import type { ReportEntry, ReportPayload } from './types.js';
import { compartmentId } from './types.js';

// View model is a direct projection of the report payload: every number
// shown on the board comes from the server verbatim, only the bar percent
// (a presentation scale against the heaviest row) is derived.

export interface BoardRow {
  rank: number;
  id: string;
  functionName: string;
  weight: number;
  blockWeight: number;
  callsWeight: number;
  profileCnt: number;
  labelBadge: string; // "I" | "H" | "IH" | em dash placeholder
  conditional: string;
  compartment: string;
  input: string;
  solution: string;
  barPercent: number;
}

export interface RetiredRow {
  id: string;
  functionName: string;
  weight: number;
  status: string;
}

export interface BoardViewModel {
  snapshot: string;
  locked: BoardRow[];
  unlocked: RetiredRow[];
  resolved: RetiredRow[];
}

const NO_LABEL = '—';

function badge(label: string): string {
  return label === '' ? NO_LABEL : label;
}

export function buildBoardModel(report: ReportPayload): BoardViewModel {
  const maxWeight = report.entries.reduce((m, e) => Math.max(m, e.weight), 0);
  const locked = report.entries.map((e) => ({
    rank: e.rank,
    id: compartmentId(e),
    functionName: e.function,
    weight: e.weight,
    blockWeight: e.block_weight,
    callsWeight: e.calls_weight,
    profileCnt: e.profile_cnt,
    labelBadge: badge(e.label),
    conditional: e.conditional,
    compartment: e.compartment,
    input: e.input,
    solution: e.solution,
    barPercent: maxWeight > 0 ? (e.weight / maxWeight) * 100 : 0,
  }));
  const retired = (status: string) =>
    (report.resolved ?? [])
      .filter((e) => e.status === status)
      .map((e: ReportEntry) => ({
        id: compartmentId(e),
        functionName: e.function,
        weight: e.weight,
        status: e.status,
      }));
  return {
    snapshot: report.snapshot,
    locked,
    unlocked: retired('unlocked'),
    resolved: retired('resolved'),
  };
}

export interface BoardHandlers {
  onResolve?: (id: string) => void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function lockedTable(model: BoardViewModel, handlers: BoardHandlers): HTMLElement {
  const table = el('table', 'board-table');
  table.setAttribute('data-testid', 'locked-board');
  const head = el('tr');
  for (const title of [
    'Rank',
    'Function',
    'Weight',
    'Label',
    'Conditional',
    'Compartment',
    'Input',
    'Solution',
    '',
  ]) {
    head.appendChild(el('th', undefined, title));
  }
  table.appendChild(head);
  for (const row of model.locked) {
    const tr = el('tr', 'board-row');
    tr.setAttribute('data-cid', row.id);
    tr.appendChild(el('td', 'rank', String(row.rank)));
    tr.appendChild(el('td', 'function', row.functionName));

    const weightCell = el('td', 'weight');
    const weightValue = el('span', 'weight-value', String(row.weight));
    weightValue.title = `block ${row.blockWeight} + calls ${row.callsWeight}, conditional count ${row.profileCnt}`;
    const bar = el('div', 'weight-bar');
    bar.style.width = `${row.barPercent}%`;
    bar.setAttribute('data-percent', row.barPercent.toFixed(1));
    weightCell.appendChild(weightValue);
    weightCell.appendChild(bar);
    tr.appendChild(weightCell);

    tr.appendChild(el('td', 'label-badge', row.labelBadge));
    tr.appendChild(el('td', 'conditional', row.conditional));
    tr.appendChild(el('td', 'compartment', row.compartment));
    tr.appendChild(el('td', 'input', row.input));
    tr.appendChild(el('td', 'solution', row.solution));

    const actions = el('td', 'actions');
    const button = el('button', 'resolve-button', 'resolve');
    button.addEventListener('click', () => handlers.onResolve?.(row.id));
    actions.appendChild(button);
    tr.appendChild(actions);
    table.appendChild(tr);
  }
  return table;
}

function retiredSection(title: string, rows: RetiredRow[], testId: string): HTMLElement {
  const section = el('div', 'retired-section');
  section.setAttribute('data-testid', testId);
  section.appendChild(el('h3', undefined, title));
  const list = el('ul');
  for (const row of rows) {
    const item = el('li', undefined, `${row.id} (weight ${row.weight})`);
    item.setAttribute('data-cid', row.id);
    list.appendChild(item);
  }
  section.appendChild(list);
  return section;
}

export function renderBoard(model: BoardViewModel, handlers: BoardHandlers = {}): HTMLElement {
  const root = el('div', 'board');
  root.appendChild(el('h2', undefined, `Locked compartments (snapshot ${model.snapshot || 'n/a'})`));
  if (model.locked.length === 0) {
    const empty = el('p', 'empty-state', 'no locked compartments');
    empty.setAttribute('data-testid', 'empty-state');
    root.appendChild(empty);
  } else {
    root.appendChild(lockedTable(model, handlers));
  }
  root.appendChild(retiredSection('Unlocked', model.unlocked, 'unlocked-section'));
  root.appendChild(retiredSection('Resolved', model.resolved, 'resolved-section'));
  return root;
}
