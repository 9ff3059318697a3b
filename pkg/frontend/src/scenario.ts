// Scenario state: validation mirroring the server schema, wire payloads,
// diffing for pinned comparisons, and CSV export in the corpus file format.

import type {
  EvaluationSnapshot,
  FeatureValues,
  Scenario,
  SchemaResponse,
} from './types.js';

/** Feature name -> corpus CSV column, in schema order. */
export const WIRE_COLUMNS: Record<string, string> = {
  W: 'W_mm', r: 'r_pct', L: 'L_m', fc: 'fc_MPa', fy: 'fy_MPa', K: 'K',
  C: 'C_mm', ex: 'ex_mm', ey: 'ey_mm', P: 'P_kN', E: 'E', S: 'S',
};

export const CSV_HEADER =
  'id,provenance,W_mm,r_pct,L_m,fc_MPa,fy_MPa,K,C_mm,ex_mm,ey_mm,P_kN,E,S,FR_min,SP';

export function defaultValues(schema: SchemaResponse): FeatureValues {
  const values: FeatureValues = {};
  for (const f of schema.features) {
    if (f.kind === 'categorical') {
      values[f.name] = f.categories?.[0] ?? '';
    } else if (f.name === 'S') {
      values[f.name] = 4;
    } else {
      values[f.name] = roundTo((f.min + f.max) / 2, 1);
    }
  }
  return values;
}

export function roundTo(x: number, digits: number): number {
  const p = 10 ** digits;
  return Math.round(x * p) / p;
}

/**
 * Client-side validation mirroring GET /v1/schema: continuous features must
 * sit inside the declared range, categorical values inside the declared
 * category list. Messages match the server's field messages for the hard
 * violations it would reject.
 */
export function validateValues(schema: SchemaResponse,
                               values: FeatureValues): Record<string, string> {
  const problems: Record<string, string> = {};
  for (const f of schema.features) {
    const value = values[f.name];
    if (value === undefined || value === null || value === '') {
      problems[f.name] = 'value required';
      continue;
    }
    if (f.kind === 'categorical') {
      const allowed = f.categories ?? [];
      const ok = allowed.includes(String(value)) ||
        (f.name === 'E' && String(value).startsWith('OTHER:') && String(value).length > 6);
      if (!ok) problems[f.name] = `must be one of ${allowed.join(', ')}`;
      continue;
    }
    const x = Number(value);
    if (!Number.isFinite(x)) {
      problems[f.name] = 'must be a finite number';
    } else if (f.name === 'S' && ![1, 2, 3, 4].includes(x)) {
      problems[f.name] = 'exposed faces must be 1, 2, 3 or 4';
    } else if (x < f.min || x > f.max) {
      problems[f.name] = `value ${x} outside plausible range [${f.min}, ${f.max}]`;
    }
  }
  return problems;
}

/** JSON body for /v1/predict and friends, keyed by the CSV column names. */
export function toRecordPayload(values: FeatureValues,
                                id = 'scenario'): Record<string, unknown> {
  const payload: Record<string, unknown> = { id, provenance: 'real' };
  for (const [name, column] of Object.entries(WIRE_COLUMNS)) {
    payload[column] = values[name];
  }
  return payload;
}

function csvCell(value: number | string | undefined): string {
  if (value === undefined || value === null || value === '') return '';
  return String(value);
}

/** Corpus-format CSV of the given scenarios, targets left empty. */
export function scenariosToCsv(scenarios: Scenario[]): string {
  const lines = [CSV_HEADER];
  scenarios.forEach((s, i) => {
    const v = s.values;
    const cells = [
      sanitizeId(s.label) || `scenario-${i}`,
      'real',
      csvCell(v.W), csvCell(v.r), csvCell(v.L), csvCell(v.fc), csvCell(v.fy),
      csvCell(v.K), csvCell(v.C), csvCell(v.ex), csvCell(v.ey), csvCell(v.P),
      csvCell(v.E), csvCell(v.S),
      '', '',  // FR_min and SP stay empty: these are designs, not observations
    ];
    lines.push(cells.join(','));
  });
  return lines.join('\n') + '\n';
}

function sanitizeId(label: string): string {
  return label.replace(/[,\n\r]/g, ' ').trim();
}

/** Feature names whose values differ between two scenarios. */
export function diffFeatures(a: FeatureValues, b: FeatureValues): string[] {
  const names = new Set([...Object.keys(a), ...Object.keys(b)]);
  return [...names].filter((name) => String(a[name]) !== String(b[name])).sort();
}

export function canExport(history: Scenario[]): boolean {
  return history.some((s) => s.lastResult !== null);
}

export function makeScenario(label: string, values: FeatureValues): Scenario {
  return { label, values: { ...values }, pinned: false, lastResult: null };
}

/** Largest |contribution| first, for stable bar ordering. */
export function sortedContributions(explain: EvaluationSnapshot['explain']):
    Array<[string, number]> {
  return Object.entries(explain.contributions)
    .sort((x, y) => Math.abs(y[1]) - Math.abs(x[1]));
}
