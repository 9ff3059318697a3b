// DOM construction and updates. Every number shown here comes from an
// EvaluationSnapshot; this module renders, it never computes predictions.

import type {
  EvaluationSnapshot,
  FeatureValues,
  Scenario,
  SchemaFeature,
  SchemaResponse,
} from './types.js';
import { diffFeatures, roundTo, sortedContributions } from './scenario.js';

const DISPLAY_DECIMALS = 4;

export function el<K extends keyof HTMLElementTagNameMap>(
    tag: K, className = '', text = ''): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

function controlFor(feature: SchemaFeature,
                    value: number | string,
                    onEdit: (name: string, value: number | string) => void): HTMLElement {
  const wrap = el('div', 'control');
  const label = el('label', 'control-label');
  label.textContent = feature.unit
    ? `${feature.name} (${feature.unit})`
    : feature.name;
  label.htmlFor = `ctl-${feature.name}`;
  wrap.appendChild(label);

  if (feature.kind === 'categorical' || feature.name === 'S') {
    const select = el('select', 'control-input');
    select.id = `ctl-${feature.name}`;
    const options = feature.name === 'S'
      ? ['1', '2', '3', '4']
      : (feature.categories ?? []).filter((c) => c !== 'OTHER');
    for (const option of options) {
      const opt = el('option', '', option);
      opt.value = option;
      select.appendChild(opt);
    }
    select.value = String(value);
    select.addEventListener('change', () => {
      onEdit(feature.name,
             feature.name === 'S' ? Number(select.value) : select.value);
    });
    wrap.appendChild(select);
    return wrap;
  }

  const slider = el('input', 'control-input');
  slider.id = `ctl-${feature.name}`;
  slider.type = 'range';
  slider.min = String(feature.min);
  slider.max = String(feature.max);
  slider.step = String(Math.max((feature.max - feature.min) / 200, 0.01));
  slider.value = String(value);
  const readout = el('span', 'control-value', String(value));
  slider.addEventListener('input', () => {
    const x = roundTo(Number(slider.value), 2);
    readout.textContent = String(x);
    onEdit(feature.name, x);
  });
  wrap.appendChild(slider);
  wrap.appendChild(readout);
  return wrap;
}

/** One control per schema feature, in schema order. */
export function renderForm(root: HTMLElement, schema: SchemaResponse,
                           values: FeatureValues,
                           onEdit: (name: string, value: number | string) => void): void {
  root.replaceChildren();
  for (const feature of schema.features) {
    root.appendChild(controlFor(feature, values[feature.name] ?? '', onEdit));
  }
}

function fmt(x: number | null | undefined, digits = DISPLAY_DECIMALS): string {
  if (x === null || x === undefined || Number.isNaN(x)) return 'n/a';
  return x.toFixed(digits);
}

/**
 * Results panel. Returns the displayed attribution check gap so callers
 * (and tests) can assert bars + baseline equal the displayed prediction.
 */
export function renderResults(root: HTMLElement,
                              snapshot: EvaluationSnapshot): number {
  root.replaceChildren();
  const { predict, explain, codal } = snapshot;

  if (predict.sp_probability !== undefined) {
    const gauge = el('div', 'gauge');
    gauge.appendChild(el('div', 'gauge-label', 'spalling probability'));
    const bar = el('div', 'gauge-bar');
    const fill = el('div', 'gauge-fill');
    fill.style.width = `${Math.round(predict.sp_probability * 100)}%`;
    bar.appendChild(fill);
    gauge.appendChild(bar);
    const value = el('span', 'gauge-value', fmt(predict.sp_probability));
    value.id = 'sp-probability';
    gauge.appendChild(value);
    gauge.appendChild(el('span',
                         `sp-flag ${predict.sp_label ? 'spall' : 'no-spall'}`,
                         predict.sp_label ? 'spalls' : 'no spalling'));
    root.appendChild(gauge);
  }

  if (predict.fr_minutes !== undefined) {
    const box = el('div', 'fire-summary');
    const minutes = el('span', 'fr-minutes', fmt(predict.fr_minutes, 1));
    minutes.id = 'fr-minutes';
    box.appendChild(el('span', 'fr-label', 'fire resistance (min)'));
    box.appendChild(minutes);
    box.appendChild(el('span', `rating-badge rating-${predict.rating_class}`,
                       predict.rating_class ?? ''));
    root.appendChild(box);
  }

  // signed attribution bars; the header shows the efficiency check
  const shap = el('div', 'shap-panel');
  shap.appendChild(el('div', 'shap-title',
                      `attribution (${explain.task}, ${explain.mode})`));
  const displayed = explain.task === 'spalling'
    ? predict.sp_probability ?? explain.prediction
    : predict.fr_minutes ?? explain.prediction;
  let total = explain.baseline;
  const scale = Math.max(...Object.values(explain.contributions).map(Math.abs), 1e-12);
  for (const [name, value] of sortedContributions(explain)) {
    total += value;
    const row = el('div', 'shap-row');
    row.appendChild(el('span', 'shap-feature', name));
    const track = el('div', 'shap-track');
    const bar = el('div', `shap-bar ${value >= 0 ? 'positive' : 'negative'}`);
    bar.style.width = `${Math.min(Math.abs(value) / scale * 50, 50)}%`;
    if (value >= 0) bar.style.left = '50%';
    else bar.style.right = '50%';
    track.appendChild(bar);
    row.appendChild(track);
    const cell = el('span', 'shap-value', fmt(value));
    cell.dataset.feature = name;
    row.appendChild(cell);
    shap.appendChild(row);
  }
  const gap = Math.abs(total - (displayed ?? explain.prediction));
  const check = el('div', 'shap-check',
                   `baseline ${fmt(explain.baseline)} + bars = ${fmt(total)}`);
  check.id = 'shap-total';
  check.dataset.gap = String(gap);
  shap.appendChild(check);
  root.appendChild(shap);

  const codalBox = el('div', 'codal-panel');
  codalBox.appendChild(el('div', 'codal-title',
                          `design-code baselines (profile: ${codal.profile})`));
  const ec2 = el('div', 'codal-row',
                 `EC2: ${codal.ec2_minutes === null ? codal.ec2_error ?? 'n/a'
                                                    : fmt(codal.ec2_minutes, 1) + ' min'}`);
  ec2.id = 'codal-ec2';
  const as36 = el('div', 'codal-row',
                  `AS3600: ${codal.as3600_minutes === null
                    ? codal.as3600_error ?? 'n/a'
                    : fmt(codal.as3600_minutes, 1) + ' min'}`);
  as36.id = 'codal-as3600';
  codalBox.appendChild(ec2);
  codalBox.appendChild(as36);
  root.appendChild(codalBox);

  const fp = el('div', 'fingerprint',
                Object.entries(snapshot.fingerprints)
                  .map(([task, hash]) => `${task}: ${hash.slice(0, 12)}`)
                  .join('  '));
  fp.id = 'model-fingerprint';
  root.appendChild(fp);
  return gap;
}

/** Pinned scenarios side by side with differing features highlighted. */
export function renderHistory(root: HTMLElement, history: Scenario[],
                              current: FeatureValues,
                              exportButton: HTMLButtonElement): void {
  root.replaceChildren();
  exportButton.disabled = !history.some((s) => s.lastResult !== null);
  if (history.length === 0) {
    root.appendChild(el('div', 'history-empty', 'no pinned scenarios yet'));
    return;
  }
  const table = el('table', 'history-table');
  const head = el('tr');
  head.appendChild(el('th', '', 'feature'));
  for (const s of history) head.appendChild(el('th', '', s.label));
  table.appendChild(head);

  const names = Object.keys(history[0].values);
  for (const name of names) {
    const row = el('tr');
    row.appendChild(el('td', 'history-feature', name));
    for (const s of history) {
      const changed = diffFeatures(s.values, current).includes(name);
      row.appendChild(el('td', changed ? 'diff' : '', String(s.values[name])));
    }
    table.appendChild(row);
  }

  const metrics: Array<[string, (r: EvaluationSnapshot) => string]> = [
    ['sp probability', (r) => fmt(r.predict.sp_probability)],
    ['FR minutes', (r) => fmt(r.predict.fr_minutes, 1)],
    ['rating', (r) => r.predict.rating_class ?? 'n/a'],
  ];
  for (const [label, extract] of metrics) {
    const row = el('tr', 'history-metric');
    row.appendChild(el('td', 'history-feature', label));
    for (const s of history) {
      row.appendChild(el('td', '', s.lastResult ? extract(s.lastResult) : 'n/a'));
    }
    table.appendChild(row);
  }
  root.appendChild(table);
}

export function setBanner(node: HTMLElement, message: string | null): void {
  node.textContent = message ?? '';
  node.classList.toggle('visible', message !== null);
}
