// Dashboard: experiment summary, the pipeline's blocks with editable
// hyperparameters (schema-driven from the registry), and per-station model
// stats like "(10) NO2: 0.16" (events and MAPE per model). Submitting an
// edited config starts a new experiment and the view polls its progress.
// Drafts persist in localStorage so a tuned config survives a reload.

import { ApiClient, ApiError } from "../api";
import { clear, fmtNumber, h } from "../dom";
import { ViewState } from "../state";
import {
  ExperimentStatus,
  ModelSummary,
  ParamSchema,
  PipelineConfig,
  RegistrySchema,
} from "../types";

const DRAFT_KEY = "aqdetect-config-draft";

export class DashboardView {
  readonly root: HTMLElement;
  private summaryBox: HTMLElement;
  private pipelineBox: HTMLElement;
  private modelsBox: HTMLElement;
  private progressBox: HTMLElement;
  private experimentSelect: HTMLSelectElement;
  private seedInput: HTMLInputElement;

  private registry: RegistrySchema | null = null;
  private experiments: ExperimentStatus[] = [];
  private current: ExperimentStatus | null = null;
  private models: ModelSummary[] = [];
  private draft: PipelineConfig | null = null;
  private pollTimer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private api: ApiClient,
    private state: ViewState,
    private onExperimentChanged: () => void,
  ) {
    this.summaryBox = h("div", { class: "dash-summary" });
    this.pipelineBox = h("div", { class: "dash-pipeline" });
    this.modelsBox = h("div", { class: "dash-models" });
    this.progressBox = h("div", { class: "dash-progress" });
    this.experimentSelect = h("select", { name: "experiment" });
    this.experimentSelect.addEventListener("change", () => {
      void this.selectExperiment(this.experimentSelect.value);
    });
    this.seedInput = h("input", { name: "seed", value: "7", class: "seed-input" });

    this.root = h(
      "div",
      { class: "panel dashboard-view" },
      h("h2", {}, "Dashboard"),
      h("div", { class: "dash-exp-row" }, h("span", {}, "experiment "), this.experimentSelect),
      this.summaryBox,
      this.progressBox,
      h("h3", {}, "Pipeline"),
      this.pipelineBox,
      h("h3", {}, "Models at selected stations"),
      this.modelsBox,
    );
  }

  async load(): Promise<void> {
    this.registry = await this.api.registry();
    const saved = localStorage.getItem(DRAFT_KEY);
    if (saved) {
      try {
        this.draft = JSON.parse(saved) as PipelineConfig;
      } catch {
        this.draft = null;
      }
    }
    await this.reloadExperiments();
  }

  async reloadExperiments(preferred?: string): Promise<void> {
    const listing = await this.api.listExperiments();
    this.experiments = listing.experiments
      .filter((e) => e.dataset_id === this.state.datasetId)
      .sort((a, b) => (a.created_at < b.created_at ? 1 : -1));
    clear(this.experimentSelect);
    for (const exp of this.experiments) {
      const opt = h("option", { value: exp.id }, `${exp.id} (${exp.status})`);
      this.experimentSelect.append(opt);
    }
    const pick =
      preferred ??
      this.state.experimentId ??
      this.experiments.find((e) => e.status === "done")?.id;
    if (pick && this.experiments.some((e) => e.id === pick)) {
      this.experimentSelect.value = pick;
      await this.selectExperiment(pick);
    } else if (this.experiments.length) {
      await this.selectExperiment(this.experiments[0].id);
    } else {
      this.render();
    }
  }

  async selectExperiment(id: string): Promise<void> {
    this.current = await this.api.experiment(id);
    const changed = this.state.experimentId !== id;
    this.state.experimentId = id;
    this.models = [];
    if (this.current.status === "done") {
      this.models = (await this.api.modelSummaries(id).catch(() => ({ models: [] }))).models;
    }
    this.render();
    if (this.current.status === "running" || this.current.status === "pending") {
      this.startPolling(id);
    }
    if (changed) this.onExperimentChanged();
  }

  private startPolling(id: string): void {
    this.stopPolling();
    this.pollTimer = setInterval(() => {
      void (async () => {
        const status = await this.api.experiment(id);
        this.current = status;
        this.renderProgress();
        if (status.status !== "running" && status.status !== "pending") {
          this.stopPolling();
          await this.reloadExperiments(id);
          this.onExperimentChanged();
        }
      })();
    }, 700);
  }

  private stopPolling(): void {
    if (this.pollTimer !== null) clearInterval(this.pollTimer);
    this.pollTimer = null;
  }

  private configForEditing(): PipelineConfig {
    if (this.draft) return this.draft;
    if (this.current) return JSON.parse(JSON.stringify(this.current.config)) as PipelineConfig;
    return JSON.parse(JSON.stringify(this.registry!.default_config)) as PipelineConfig;
  }

  render(): void {
    this.renderSummary();
    this.renderProgress();
    this.renderPipeline();
    this.renderModels();
  }

  private renderSummary(): void {
    clear(this.summaryBox);
    if (!this.current) {
      this.summaryBox.append(h("p", { class: "hint" }, "No experiments yet; edit the pipeline and run one."));
      return;
    }
    const s = this.current.summary;
    const rows = [
      ["status", this.current.status],
      ["models", s ? String(s.model_count) : "-"],
      ["events", s ? String(s.event_count) : "-"],
      ["events / model", s ? fmtNumber(s.mean_events_per_model, 2) : "-"],
      ["created", this.current.created_at],
      ["seed", String(this.current.seed)],
    ];
    const table = h("table", { class: "kv-table" });
    for (const [k, v] of rows) {
      table.append(h("tr", {}, h("td", { class: "k" }, k), h("td", {}, v)));
    }
    this.summaryBox.append(table);
  }

  private renderProgress(): void {
    clear(this.progressBox);
    if (!this.current || (this.current.status !== "running" && this.current.status !== "pending")) {
      return;
    }
    const states = Object.values(this.current.models);
    const done = states.filter((s) => s === "done" || s === "failed").length;
    this.progressBox.append(
      h("div", { class: "progress-line" },
        `running: ${done}/${states.length} models finished`),
    );
  }

  private paramInput(
    block: string,
    key: string,
    schema: ParamSchema,
    value: number | string,
  ): HTMLElement {
    let input: HTMLInputElement | HTMLSelectElement;
    if (schema.type === "choice") {
      input = h("select", { "data-block": block, "data-param": key });
      for (const choice of schema.choices ?? []) {
        const opt = h("option", { value: choice }, choice);
        if (choice === value) opt.setAttribute("selected", "selected");
        input.append(opt);
      }
    } else {
      input = h("input", {
        value: String(value),
        "data-block": block,
        "data-param": key,
        class: "param-input",
      });
    }
    const hintParts = [];
    if (schema.min !== null) hintParts.push(`min ${schema.min}`);
    if (schema.max !== null) hintParts.push(`max ${schema.max}`);
    const label = h(
      "label",
      { class: "param-field" },
      h("span", { class: "param-name" }, key),
      input,
      h("span", { class: "param-hint" }, hintParts.join(" ")),
    );
    label.append(h("span", { class: "param-error", "data-error-for": `${block}.${key}` }));
    return label;
  }

  private renderPipeline(): void {
    clear(this.pipelineBox);
    if (!this.registry) return;
    const config = this.configForEditing();

    for (const block of config.blocks) {
      const schema = this.registry.blocks[block.name];
      const blockEl = h("div", { class: "block-card", "data-block-name": block.name });
      blockEl.append(h("div", { class: "block-title" }, `${block.name} (${schema?.kind ?? "?"})`));
      if (schema) {
        for (const [key, paramSchema] of Object.entries(schema.hyperparameters)) {
          const value = block.hyperparameters[key] ?? paramSchema.default;
          blockEl.append(this.paramInput(block.name, key, paramSchema, value));
        }
      }
      this.pipelineBox.append(blockEl);
    }

    const run = h("button", { class: "primary", name: "run" }, "Run experiment");
    run.addEventListener("click", () => void this.submit());
    const reset = h("button", { name: "reset" }, "Reset to defaults");
    reset.addEventListener("click", () => {
      this.draft = null;
      localStorage.removeItem(DRAFT_KEY);
      this.renderPipeline();
    });
    this.pipelineBox.append(
      h("div", { class: "run-row" }, h("span", {}, "seed "), this.seedInput, run, reset),
    );
  }

  /** Read the form back into a config, preserving declared types. */
  collectConfig(): PipelineConfig {
    const config = this.configForEditing();
    for (const block of config.blocks) {
      const schema = this.registry?.blocks[block.name];
      if (!schema) continue;
      for (const [key, paramSchema] of Object.entries(schema.hyperparameters)) {
        const el = this.pipelineBox.querySelector<HTMLInputElement | HTMLSelectElement>(
          `[data-block="${block.name}"][data-param="${key}"]`,
        );
        if (!el) continue;
        const raw = el.value;
        if (paramSchema.type === "choice") block.hyperparameters[key] = raw;
        else if (paramSchema.type === "int") block.hyperparameters[key] = parseInt(raw, 10);
        else block.hyperparameters[key] = parseFloat(raw);
      }
    }
    return config;
  }

  async submit(): Promise<void> {
    const config = this.collectConfig();
    this.draft = config;
    localStorage.setItem(DRAFT_KEY, JSON.stringify(config));
    this.pipelineBox.querySelectorAll(".param-error").forEach((el) => (el.textContent = ""));
    try {
      const out = await this.api.submitExperiment({
        config,
        dataset: this.state.datasetId,
        seed: parseInt(this.seedInput.value, 10) || 0,
      });
      await this.reloadExperiments(out.experiment_id);
    } catch (err) {
      if (err instanceof ApiError && err.violations) {
        this.showViolations(err.violations);
      } else {
        this.progressBox.textContent = String((err as Error).message ?? err);
      }
    }
  }

  /** Surface server-side validation per field when possible. */
  private showViolations(violations: string[]): void {
    for (const violation of violations) {
      const m = violation.match(/^([a-z_]+)\.([a-z_]+)/);
      const slot = m
        ? this.pipelineBox.querySelector(`[data-error-for="${m[1]}.${m[2]}"]`)
        : null;
      if (slot) slot.textContent = violation;
      else this.progressBox.append(h("div", { class: "form-error" }, violation));
    }
  }

  private renderModels(): void {
    clear(this.modelsBox);
    const selected = this.state.stations;
    if (!selected.length || !this.models.length) {
      this.modelsBox.append(h("p", { class: "hint" }, "Select stations to see per-model stats."));
      return;
    }
    for (const station of selected) {
      const rows = this.models.filter((m) => m.station_id === station);
      if (!rows.length) continue;
      const card = h("div", { class: "station-card" });
      const title = h("div", { class: "station-card-title" }, station);
      title.style.borderLeft = `6px solid ${this.state.colorOf(station)}`;
      card.append(title);
      for (const m of rows) {
        // e.g. "(10) NO2: 0.16" -- events and MAPE of that model
        card.append(
          h(
            "div",
            { class: "model-line", "data-model": `${m.station_id}/${m.attribute}` },
            m.status === "done"
              ? `(${m.event_count}) ${m.attribute}: ${fmtNumber(m.mape, 2)}`
              : `${m.attribute}: ${m.status}`,
          ),
        );
      }
      this.modelsBox.append(card);
    }
  }
}
