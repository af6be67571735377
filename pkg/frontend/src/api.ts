// Thin typed client over the service API. All views go through this single
// source of truth; nothing in the UI recomputes detection math.

import {
  DatasetInfo,
  EventRecord,
  ExperimentStatus,
  ModelSummary,
  PeriodAggregate,
  PipelineConfig,
  RegistrySchema,
  SeriesView,
  SignalsView,
  StationsResponse,
} from "./types";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, message: string, public violations?: string[]) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private base: string = "",
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(this.base + path, init);
    const body = await resp.json().catch(() => ({}));
    if (!resp.ok) {
      throw new ApiError(resp.status, body.error ?? resp.statusText, body.violations);
    }
    return body as T;
  }

  private qs(params: Record<string, string | number | undefined>): string {
    const parts = Object.entries(params)
      .filter(([, v]) => v !== undefined && v !== "")
      .map(([k, v]) => `${encodeURIComponent(k)}=${encodeURIComponent(String(v))}`);
    return parts.length ? `?${parts.join("&")}` : "";
  }

  listDatasets(): Promise<{ datasets: DatasetInfo[] }> {
    return this.request("/api/datasets");
  }

  stations(dataset: string): Promise<StationsResponse> {
    return this.request(`/api/stations${this.qs({ dataset })}`);
  }

  registry(): Promise<RegistrySchema> {
    return this.request("/api/registry");
  }

  listExperiments(): Promise<{ experiments: ExperimentStatus[] }> {
    return this.request("/api/experiments");
  }

  experiment(id: string): Promise<ExperimentStatus> {
    return this.request(`/api/experiments/${id}`);
  }

  submitExperiment(body: {
    config: PipelineConfig;
    dataset: string;
    stations?: string[];
    pollutants?: string[];
    seed?: number;
  }): Promise<{ experiment_id: string; status: string; cached: boolean }> {
    return this.request("/api/experiments", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  modelSummaries(experiment: string): Promise<{ models: ModelSummary[] }> {
    return this.request(`/api/experiments/${experiment}/models`);
  }

  signals(experiment: string, station: string, attribute: string): Promise<SignalsView> {
    return this.request(
      `/api/experiments/${experiment}/signals${this.qs({ station, attribute })}`,
    );
  }

  series(
    dataset: string,
    station: string,
    attribute: string,
    opts: { from?: string; to?: string; resolution?: number } = {},
  ): Promise<SeriesView> {
    return this.request(
      `/api/series${this.qs({ dataset, station, attribute, ...opts })}`,
    );
  }

  events(filters: {
    experiment?: string;
    dataset?: string;
    station?: string;
    attribute?: string;
  }): Promise<{ events: EventRecord[] }> {
    return this.request(`/api/events${this.qs(filters)}`);
  }

  createEvent(payload: Record<string, unknown>): Promise<EventRecord> {
    return this.request("/api/events", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  modifyEvent(id: string, changes: Record<string, unknown>): Promise<EventRecord> {
    return this.request(`/api/events/${id}`, {
      method: "PATCH",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(changes),
    });
  }

  deleteEvent(id: string): Promise<{ id: string; deleted: boolean; hidden: boolean }> {
    return this.request(`/api/events/${id}`, { method: "DELETE" });
  }

  annotateEvent(id: string, text: string, tags: string[], author = "analyst"): Promise<EventRecord> {
    return this.request(`/api/events/${id}/annotations`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ text, tags, author }),
    });
  }

  aggregates(
    dataset: string,
    station: string,
    attribute: string,
    level: "year" | "month" | "day",
    anchor: string,
  ): Promise<PeriodAggregate> {
    return this.request(
      `/api/aggregates${this.qs({ dataset, station, attribute, level, anchor })}`,
    );
  }
}
