// Time-series context view: one small-multiple row per attribute (weather on
// top, pollutants below), shared time axis, anomalous intervals overdrawn as
// red curve segments. A brush strip at the bottom drives the focus window and
// the brushed region shows as a grey band on every row.

import { extent } from "d3-array";
import { brushX, D3BrushEvent } from "d3-brush";
import { scaleLinear, scaleTime } from "d3-scale";
import { select } from "d3-selection";
import { line } from "d3-shape";

import { ApiClient } from "../api";
import { clear, h, svgEl } from "../dom";
import { ViewState } from "../state";
import {
  EventRecord,
  POLLUTANT_ATTRIBUTES,
  SeriesView,
  WEATHER_ATTRIBUTES,
  parseIso,
} from "../types";

const ROW_HEIGHT = 44;
const MARGIN_LEFT = 86;
const MARGIN_RIGHT = 12;

export interface ContextRowData {
  attribute: string;
  perStation: Map<string, { points: [number, number][]; error?: string }>;
  events: EventRecord[];
}

export class ContextView {
  readonly root: HTMLElement;
  private rowsBox: HTMLElement;
  private brushBox: HTMLElement;
  private width = 860;
  private rows: ContextRowData[] = [];

  constructor(
    private api: ApiClient,
    private state: ViewState,
    private onPickAttribute: (attribute: string) => void,
  ) {
    this.rowsBox = h("div", { class: "context-rows" });
    this.brushBox = h("div", { class: "context-brush" });
    this.root = h(
      "div",
      { class: "panel context-view" },
      h("h2", {}, "Context"),
      this.rowsBox,
      this.brushBox,
    );
  }

  /** All ten attribute rows, weather first, for the selected stations. */
  async load(): Promise<void> {
    const attributes = [...WEATHER_ATTRIBUTES, ...POLLUTANT_ATTRIBUTES];
    const stations = this.state.stations;
    const events = this.state.experimentId
      ? (await this.api.events({ experiment: this.state.experimentId }).catch(() => ({ events: [] }))).events
      : [];

    const rows: ContextRowData[] = [];
    for (const attribute of attributes) {
      const perStation = new Map<string, { points: [number, number][]; error?: string }>();
      await Promise.all(
        stations.map(async (st) => {
          try {
            const view: SeriesView = await this.api.series(this.state.datasetId, st, attribute, {
              resolution: 1200,
            });
            const points: [number, number][] = view.timestamps.map((t, i) => [
              parseIso(t),
              view.values[i],
            ]);
            perStation.set(st, { points });
          } catch (err) {
            perStation.set(st, { points: [], error: String((err as Error).message ?? err) });
          }
        }),
      );
      rows.push({
        attribute,
        perStation,
        events: events.filter((ev) => ev.attribute === attribute && stations.includes(ev.station_id)),
      });
    }
    this.rows = rows;
    this.render();
  }

  render(): void {
    clear(this.rowsBox);
    clear(this.brushBox);
    const range = this.state.contextRange;
    if (!range || this.state.stations.length === 0) {
      this.rowsBox.append(h("p", { class: "hint" }, "Select a station on the map to load its series."));
      return;
    }
    const x = scaleTime()
      .domain([range.from, range.to])
      .range([MARGIN_LEFT, this.width - MARGIN_RIGHT]);

    for (const row of this.rows) {
      this.rowsBox.append(this.renderRow(row, x));
    }
    this.brushBox.append(this.renderBrushStrip(x));
  }

  private renderRow(row: ContextRowData, x: (t: number) => number): HTMLElement {
    const svg = svgEl("svg", {
      width: String(this.width),
      height: String(ROW_HEIGHT),
      class: "context-row-svg",
    });
    const allValues = [...row.perStation.values()].flatMap((s) => s.points.map((p) => p[1]));
    const [lo, hi] = extent(allValues);
    const y = scaleLinear()
      .domain([lo ?? 0, hi ?? 1])
      .nice()
      .range([ROW_HEIGHT - 4, 4]);

    // grey band for the focused window
    const brush = this.state.brushRange;
    if (brush) {
      svg.append(
        svgEl("rect", {
          x: String(x(brush.from)),
          y: "0",
          width: String(Math.max(0, x(brush.to) - x(brush.from))),
          height: String(ROW_HEIGHT),
          class: "focus-band",
        }),
      );
    }

    const path = line<[number, number]>()
      .x((d) => x(d[0]))
      .y((d) => y(d[1]))
      .defined((d) => Number.isFinite(d[1]));

    for (const station of this.state.stations) {
      const entry = row.perStation.get(station);
      if (!entry) continue;
      if (entry.error) {
        svg.append(
          svgEl("text", {
            x: String(MARGIN_LEFT + 6),
            y: String(ROW_HEIGHT / 2 + 4),
            class: "chart-error",
          }),
        );
        (svg.lastChild as SVGTextElement).textContent = `unavailable: ${entry.error}`;
        continue;
      }
      const base = svgEl("path", {
        d: path(entry.points) ?? "",
        class: "series-line",
        stroke: this.state.colorOf(station),
      });
      svg.append(base);

      // red curve segments over anomalous intervals for this station
      for (const ev of row.events.filter((e) => e.station_id === station)) {
        const t0 = parseIso(ev.start);
        const t1 = parseIso(ev.end);
        const seg = entry.points.filter((p) => p[0] >= t0 && p[0] <= t1);
        if (seg.length < 2) {
          const nearest = entry.points.filter((p) => p[0] >= t0 - 3.6e6 && p[0] <= t1 + 3.6e6);
          if (nearest.length >= 2) seg.push(...nearest);
        }
        if (seg.length >= 2) {
          svg.append(
            svgEl("path", {
              d: path(seg) ?? "",
              class: "anomaly-segment",
              "data-event-id": ev.id,
            }),
          );
        }
      }
    }

    const label = h("div", { class: "row-label" }, row.attribute);
    const rowEl = h("div", { class: "context-row", "data-attribute": row.attribute });
    if (row.attribute === this.state.focusAttribute) rowEl.classList.add("focused-attribute");
    rowEl.append(label, svg);
    rowEl.addEventListener("click", () => this.onPickAttribute(row.attribute));
    return rowEl;
  }

  private renderBrushStrip(x: ReturnType<typeof scaleTime>): SVGSVGElement {
    const height = 34;
    const svg = svgEl("svg", { width: String(this.width), height: String(height), class: "brush-strip" });
    const axis = svgEl("g", { class: "axis" });
    for (const tick of x.ticks(8)) {
      const tx = x(tick as unknown as number);
      const lineEl = svgEl("line", {
        x1: String(tx), x2: String(tx), y1: "0", y2: "6", stroke: "#999",
      });
      const label = svgEl("text", { x: String(tx), y: "18", class: "tick-label" });
      label.textContent = (tick as Date).toISOString().slice(0, 10);
      axis.append(lineEl, label);
    }
    svg.append(axis);

    const brush = brushX<unknown>()
      .extent([
        [MARGIN_LEFT, 0],
        [this.width - MARGIN_RIGHT, height - 14],
      ])
      .on("end", (ev: D3BrushEvent<unknown>) => {
        if (!ev.selection) {
          this.state.setBrush(null);
          return;
        }
        const [a, b] = ev.selection as [number, number];
        this.applyBrushPixels(a, b, x);
      });
    const g = svgEl("g", { class: "brush" });
    svg.append(g);
    select(g as SVGGElement).call(brush as never);
    return svg;
  }

  /** Map brush pixel bounds back to time and push into the shared state. */
  applyBrushPixels(a: number, b: number, x: ReturnType<typeof scaleTime>): void {
    const from = (x.invert(a) as Date).getTime();
    const to = (x.invert(b) as Date).getTime();
    this.state.setBrush({ from, to });
  }
}
