// App wiring: debounced live evaluation with stale-request cancelation.

import { Api, ApiError } from './api.js';
import {
  canExport,
  defaultValues,
  makeScenario,
  scenariosToCsv,
  validateValues,
} from './scenario.js';
import { renderForm, renderHistory, renderResults, setBanner } from './render.js';
import type { FeatureValues, Scenario, SchemaResponse } from './types.js';

export const DEBOUNCE_MS = 250;

export interface AppOptions {
  api: Api;
  root: HTMLElement;
  explainTask?: string;
  debounceMs?: number;
  now?: () => number;
}

/**
 * Live evaluation loop: edits schedule a trailing-edge evaluation after the
 * debounce window; a newer edit aborts any in-flight request so at most one
 * request chain is active. The final edited value is always evaluated.
 */
export class WhatIfApp {
  readonly api: Api;
  readonly root: HTMLElement;
  schema: SchemaResponse | null = null;
  values: FeatureValues = {};
  history: Scenario[] = [];
  explainTask: string;
  private readonly debounceMs: number;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private inflight: AbortController | null = null;
  private pinCounter = 0;
  lastRenderGap = 0;

  private formRoot!: HTMLElement;
  private resultsRoot!: HTMLElement;
  private historyRoot!: HTMLElement;
  private banner!: HTMLElement;
  private exportButton!: HTMLButtonElement;

  constructor(options: AppOptions) {
    this.api = options.api;
    this.root = options.root;
    this.explainTask = options.explainTask ?? 'spalling';
    this.debounceMs = options.debounceMs ?? DEBOUNCE_MS;
  }

  async start(initial?: FeatureValues): Promise<void> {
    this.buildShell();
    try {
      this.schema = await this.api.getSchema();
    } catch (err) {
      this.root.replaceChildren();
      const panel = document.createElement('div');
      panel.className = 'fatal-error';
      panel.textContent = `cannot load feature schema: ${String(err)}`;
      this.root.appendChild(panel);
      return;
    }
    this.values = initial ?? defaultValues(this.schema);
    renderForm(this.formRoot, this.schema, this.values,
               (name, value) => this.onEdit(name, value));
    renderHistory(this.historyRoot, this.history, this.values, this.exportButton);
    await this.evaluateNow();
  }

  private buildShell(): void {
    this.root.replaceChildren();
    this.banner = section(this.root, 'banner');
    this.banner.id = 'stale-banner';
    const layout = section(this.root, 'layout');
    this.formRoot = section(layout, 'form-panel');
    this.resultsRoot = section(layout, 'results-panel');
    const historyWrap = section(this.root, 'history-panel');
    const controls = section(historyWrap, 'history-controls');
    const pin = document.createElement('button');
    pin.id = 'pin-button';
    pin.textContent = 'pin scenario';
    pin.addEventListener('click', () => this.pinCurrent());
    controls.appendChild(pin);
    this.exportButton = document.createElement('button');
    this.exportButton.id = 'export-button';
    this.exportButton.textContent = 'export CSV';
    this.exportButton.disabled = true;
    this.exportButton.addEventListener('click', () => this.download());
    controls.appendChild(this.exportButton);
    this.historyRoot = section(historyWrap, 'history-table-root');
  }

  onEdit(name: string, value: number | string): void {
    this.values = { ...this.values, [name]: value };
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.evaluateNow();
    }, this.debounceMs);
  }

  async evaluateNow(): Promise<void> {
    if (!this.schema) return;
    const problems = validateValues(this.schema, this.values);
    if (Object.keys(problems).length > 0) {
      setBanner(this.banner,
                `blocked: ${Object.entries(problems)
                  .map(([k, v]) => `${k}: ${v}`).join('; ')}`);
      return;
    }
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    try {
      const snapshot = await this.api.evaluate(this.values, this.explainTask,
                                               controller.signal);
      if (controller.signal.aborted) return;
      this.lastRenderGap = renderResults(this.resultsRoot, snapshot);
      setBanner(this.banner, null);
      renderHistory(this.historyRoot, this.history, this.values, this.exportButton);
    } catch (err) {
      if (controller.signal.aborted) return;  // superseded by a newer edit
      const detail = err instanceof ApiError && err.fields
        ? Object.entries(err.fields).map(([k, v]) => `${k}: ${v}`).join('; ')
        : String(err);
      setBanner(this.banner, `showing stale results (${detail})`);
    } finally {
      if (this.inflight === controller) this.inflight = null;
    }
  }

  pinCurrent(): void {
    this.pinCounter += 1;
    const scenario = makeScenario(`pin-${this.pinCounter}`, this.values);
    scenario.pinned = true;
    void this.api.evaluate(this.values, this.explainTask).then((snapshot) => {
      scenario.lastResult = snapshot;
      if (this.schema) {
        renderHistory(this.historyRoot, this.history, this.values, this.exportButton);
      }
    }).catch(() => {
      // pin keeps its features; metrics stay n/a until re-pinned
    });
    this.history.push(scenario);
    renderHistory(this.historyRoot, this.history, this.values, this.exportButton);
  }

  exportCsv(): string {
    return scenariosToCsv(this.history.filter((s) => s.lastResult !== null));
  }

  private download(): void {
    if (!canExport(this.history)) return;
    const blob = new Blob([this.exportCsv()], { type: 'text/csv' });
    const link = document.createElement('a');
    link.href = URL.createObjectURL(blob);
    link.download = 'scenarios.csv';
    link.click();
    URL.revokeObjectURL(link.href);
  }
}

function section(parent: HTMLElement, className: string): HTMLElement {
  const node = document.createElement('div');
  node.className = className;
  parent.appendChild(node);
  return node;
}

export function apiBaseFromLocation(): string {
  const params = new URLSearchParams(window.location.search);
  return params.get('api') ?? 'http://127.0.0.1:8330';
}

if (typeof document !== 'undefined' && document.getElementById('app')) {
  const app = new WhatIfApp({
    api: new Api(apiBaseFromLocation()),
    root: document.getElementById('app') as HTMLElement,
  });
  void app.start();
}
