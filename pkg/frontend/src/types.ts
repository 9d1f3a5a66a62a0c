/** Shapes of the explanation-service JSON bodies the client consumes. */

export type CovariateValue = number | string;
export type Covariates = Record<string, CovariateValue>;

export interface FeatureDescriptor {
  name: string;
  kind: "binary" | "categorical" | "integer" | "continuous";
  min?: number;
  max?: number;
  categories?: string[];
}

export interface ModelDescriptor {
  id: string;
  kind: string;
  bundle_hash: string;
  classes: string[];
  features: FeatureDescriptor[];
}

export interface ModelsResponse {
  models: ModelDescriptor[];
}

export interface PredictResponse {
  model_id: string;
  bundle_hash: string;
  probabilities: number[];
  logits: number[];
  predicted_class: string;
  predicted_index: number;
}

export interface RadarResponse {
  model_id: string;
  bundle_hash: string;
  features: string[];
  axes: number[];
  baseline: number;
  patient_probability: number;
  class_index: number | null;
  neighbor_axes: number[] | null;
}

export interface PdpCurve {
  feature_index: number;
  feature: string;
  class_index: number | null;
  grid: number[];
  values: number[];
  patient: [number, number] | null;
  cohort: [number, number][];
  neighbors: [number, number][];
}

export interface PdpResponse {
  model_id: string;
  bundle_hash: string;
  class_index: number | null;
  curves: PdpCurve[];
}

export interface NeighborEntry {
  id: number;
  distance: number;
  probability: number;
  true_label: string | null;
  covariates: Covariates;
}

export interface NeighborsResponse {
  model_id: string;
  bundle_hash: string;
  query_row: number[];
  neighbors: NeighborEntry[];
}

export interface ImportanceResponse {
  model_id: string;
  bundle_hash: string;
  class_index: number | null;
  features: string[];
  scores: number[];
  shares: number[];
  bias_score: number;
}

/** One coherent set of panel data, all fetched from a single snapshot. */
export interface PanelData {
  predict: PredictResponse;
  radar: RadarResponse;
  pdp: PdpResponse;
  neighbors: NeighborsResponse;
}
