// Wire types for the column fire service (POST /v1/predict, /v1/explain, /v1/codal).

export interface SchemaFeature {
  name: string;
  unit: string;
  kind: 'continuous' | 'categorical';
  min: number;
  max: number;
  spalling: boolean;
  fire_resistance: boolean;
  categories?: string[];
  spalling_range?: [number, number];
}

export interface SchemaResponse {
  csv_header: string[];
  features: SchemaFeature[];
}

export interface MemberOutputs {
  forest: number;
  gbt: number;
  mlp: number;
}

export interface PredictResult {
  id: string;
  sp_probability?: number;
  sp_label?: boolean;
  fr_minutes?: number;
  rating_class?: string;
  per_member?: Record<string, MemberOutputs>;
}

export interface PredictResponse {
  model_fingerprint: Record<string, string>;
  results: PredictResult[];
}

export interface ExplainResponse {
  model_fingerprint: string;
  task: string;
  baseline: number;
  contributions: Record<string, number>;
  prediction: number;
  mode: 'exact' | 'sampled';
  n_permutations?: number;
  background_rows: number;
}

export interface CodalResponse {
  profile: string;
  ec2_minutes: number | null;
  as3600_minutes: number | null;
  ec2_error?: string;
  as3600_error?: string;
  ec2_flags?: { defaulted_mu: boolean; clamped_length: boolean };
}

export interface ValidationFailure {
  error: 'validation';
  fields: Record<string, string>;
}

/** One editable design: feature values keyed by schema feature name. */
export type FeatureValues = Record<string, number | string>;

export interface EvaluationSnapshot {
  predict: PredictResult;
  fingerprints: Record<string, string>;
  explain: ExplainResponse;
  codal: CodalResponse;
}

export interface Scenario {
  label: string;
  values: FeatureValues;
  pinned: boolean;
  lastResult: EvaluationSnapshot | null;
}
