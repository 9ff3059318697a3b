// Typed fetch client; the UI never computes a prediction locally, every
// displayed number flows through these calls.

import type {
  CodalResponse,
  EvaluationSnapshot,
  ExplainResponse,
  FeatureValues,
  PredictResponse,
  SchemaResponse,
} from './types.js';
import { toRecordPayload } from './scenario.js';

export class ApiError extends Error {
  constructor(message: string, readonly status: number,
              readonly fields?: Record<string, string>) {
    super(message);
  }
}

async function asJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let fields: Record<string, string> | undefined;
    try {
      const body = await response.json();
      fields = body.fields;
    } catch {
      // non-JSON error body; status alone carries the failure
    }
    throw new ApiError(`request failed with status ${response.status}`,
                       response.status, fields);
  }
  return response.json() as Promise<T>;
}

export class Api {
  constructor(readonly baseUrl: string,
              readonly fetchFn: typeof fetch = fetch) {}

  private post<T>(path: string, body: unknown, signal?: AbortSignal): Promise<T> {
    return this.fetchFn(`${this.baseUrl}${path}`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body),
      signal,
    }).then((r) => asJson<T>(r));
  }

  getSchema(signal?: AbortSignal): Promise<SchemaResponse> {
    return this.fetchFn(`${this.baseUrl}/v1/schema`, { signal })
      .then((r) => asJson<SchemaResponse>(r));
  }

  predict(values: FeatureValues, signal?: AbortSignal): Promise<PredictResponse> {
    return this.post('/v1/predict', { record: toRecordPayload(values) }, signal);
  }

  explain(values: FeatureValues, task: string,
          signal?: AbortSignal): Promise<ExplainResponse> {
    return this.post('/v1/explain',
                     { record: toRecordPayload(values), task }, signal);
  }

  codal(values: FeatureValues, signal?: AbortSignal): Promise<CodalResponse> {
    return this.post('/v1/codal', { record: toRecordPayload(values) }, signal);
  }

  /** One scenario evaluation: prediction, attribution and codal baselines. */
  async evaluate(values: FeatureValues, explainTask: string,
                 signal?: AbortSignal): Promise<EvaluationSnapshot> {
    const [predict, explain, codal] = await Promise.all([
      this.predict(values, signal),
      this.explain(values, explainTask, signal),
      this.codal(values, signal),
    ]);
    return {
      predict: predict.results[0],
      fingerprints: predict.model_fingerprint,
      explain,
      codal,
    };
  }
}
