// Payload shapes of the analysis service API.

export const WEATHER_ATTRIBUTES = ["temperature", "humidity", "pressure", "wind_speed"] as const;
export const POLLUTANT_ATTRIBUTES = ["CO", "NO2", "O3", "SO2", "PM25", "PM10"] as const;
export const ALL_ATTRIBUTES = [...WEATHER_ATTRIBUTES, ...POLLUTANT_ATTRIBUTES];

export interface Station {
  station_id: string;
  name: string;
  latitude: number;
  longitude: number;
  kind: "roadside" | "general";
  attributes: string[];
}

export interface StationsResponse {
  dataset_id: string;
  range: { from: number | null; to: number | null };
  stations: Station[];
}

export interface DatasetInfo {
  dataset_id: string;
  stations: number;
  rows: number;
}

export interface SeriesView {
  station_id: string;
  attribute: string;
  timestamps: string[];
  values: number[];
  downsampled: { bucket_seconds: number } | null;
}

export interface EventRecord {
  id: string;
  station_id: string;
  attribute: string;
  start: string;
  end: string;
  score: number;
  severity: number;
  source: "detected" | "manual";
  tags: string[];
  comment: string;
  hidden?: boolean;
  experiment_id?: string;
  dataset_id?: string;
  annotations?: { author: string; at: string; text: string; tags: string[] }[];
}

export interface WindowThreshold {
  window_start: number;
  window_len: number;
  threshold: { k: number; theta: number; objective: number } | null;
}

export interface SignalsView {
  experiment_id: string;
  station_id: string;
  attribute: string;
  status: string;
  mape: number | null;
  timestamps: string[];
  y: number[];
  y_hat: number[];
  e: number[];
  e_s: number[];
  windows: WindowThreshold[];
  events: EventRecord[];
}

export interface ExperimentStatus {
  id: string;
  dataset_id: string;
  stations: string[];
  pollutants: string[];
  seed: number;
  created_at: string;
  status: string;
  error: string | null;
  models: Record<string, string>;
  summary: {
    model_count: number;
    done_count: number;
    failed_count: number;
    event_count: number;
    mean_events_per_model: number;
  } | null;
  config: PipelineConfig;
}

export interface ModelSummary {
  station_id: string;
  attribute: string;
  status: string;
  mape: number | null;
  event_count: number;
}

export interface BlockSpec {
  name: string;
  hyperparameters: Record<string, number | string>;
}

export interface PipelineConfig {
  interval: number;
  split_fraction: number;
  blocks: BlockSpec[];
}

export interface ParamSchema {
  type: "int" | "float" | "choice";
  default: number | string;
  min: number | null;
  max: number | null;
  choices: string[] | null;
}

export interface RegistrySchema {
  blocks: Record<
    string,
    { kind: string; inputs: string; outputs: string; hyperparameters: Record<string, ParamSchema> }
  >;
  default_config: PipelineConfig;
}

export interface AggregateBucket {
  label: string;
  weekday?: number;
  values: (number | null)[];
}

export interface PeriodAggregate {
  station_id: string;
  attribute: string;
  level: "year" | "month" | "day";
  anchor: string;
  buckets: AggregateBucket[];
}

export function parseIso(iso: string): number {
  return Date.parse(iso);
}

export function toIso(ms: number): string {
  return new Date(ms).toISOString().replace(/\.\d{3}Z$/, "Z");
}
