// Application shell: wires the five coordinated views together. All data
// flows through the API client; views re-render from shared state.

import { ApiClient } from "./api";
import { clear, h } from "./dom";
import { ViewState } from "./state";
import { parseIso } from "./types";
import { ContextView } from "./views/context";
import { DashboardView } from "./views/dashboard";
import { FocusView } from "./views/focus";
import { PeriodView } from "./views/period";
import { StationsView } from "./views/stations";

export class App {
  readonly state = new ViewState();
  readonly dashboard: DashboardView;
  readonly stations: StationsView;
  readonly context: ContextView;
  readonly focus: FocusView;
  readonly period: PeriodView;
  private header: HTMLElement;

  constructor(private api: ApiClient, private root: HTMLElement) {
    this.header = h("header", { class: "app-header" }, h("h1", {}, "air quality anomaly explorer"));

    this.dashboard = new DashboardView(api, this.state, () => void this.refreshSeries());
    this.stations = new StationsView(this.state, () => void this.refreshSeries());
    this.context = new ContextView(api, this.state, (attribute) => {
      this.state.focusAttribute = attribute;
      void this.refreshFocusAndPeriod();
      this.context.render();
    });
    this.focus = new FocusView(api, this.state, () => {
      void this.context.load();
    });
    this.period = new PeriodView(api, this.state);

    this.state.subscribe(() => {
      // keep brush-dependent views in sync with the shared time window
      this.focus.render();
    });
  }

  async boot(datasetId?: string): Promise<void> {
    clear(this.root);
    const left = h("div", { class: "col left" });
    left.append(this.dashboard.root, this.stations.root);
    const center = h("div", { class: "col center" });
    center.append(this.context.root, this.focus.root);
    const right = h("div", { class: "col right" });
    right.append(this.period.root);
    this.root.append(this.header, h("div", { class: "app-grid" }, left, center, right));

    const datasets = await this.api.listDatasets();
    if (!datasets.datasets.length) {
      this.header.append(h("p", { class: "hint" }, "No datasets ingested yet."));
      return;
    }
    this.state.datasetId = datasetId ?? datasets.datasets[0].dataset_id;

    const stations = await this.api.stations(this.state.datasetId);
    if (stations.range.from !== null && stations.range.to !== null) {
      this.state.setContextRange({
        from: stations.range.from * 1000,
        to: stations.range.to * 1000,
      });
      this.state.periodAnchor = new Date(stations.range.from * 1000).toISOString();
    }
    this.stations.setStations(stations.stations);
    if (stations.stations.length) {
      this.state.toggleStation(stations.stations[0].station_id);
      this.stations.render();
    }

    await this.dashboard.load();
    await this.refreshSeries();
  }

  /** Reload everything that depends on station/experiment selection. */
  async refreshSeries(): Promise<void> {
    await this.context.load();
    await this.refreshFocusAndPeriod();
    this.dashboard.render();
  }

  async refreshFocusAndPeriod(): Promise<void> {
    await this.focus.load();
    await this.period.load();
  }
}

export function brushRangeFromIso(startIso: string, endIso: string) {
  return { from: parseIso(startIso), to: parseIso(endIso) };
}
