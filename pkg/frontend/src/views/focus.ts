// Time-series focus view: the selected attribute in detail. Single-station
// mode shows true values, the prediction curve, the smoothed-error flow, grey
// anomaly regions, and a score-colored header bar (diverging blue to red).
// With several stations compared, predictions and errors are hidden. Brushing
// an empty span opens the create-event form; clicking an event edits it.

import { extent, max } from "d3-array";
import { brushX, D3BrushEvent } from "d3-brush";
import { scaleLinear, scaleTime } from "d3-scale";
import { interpolateRdBu } from "d3-scale-chromatic";
import { select } from "d3-selection";
import { area, line } from "d3-shape";

import { ApiClient } from "../api";
import { clear, fmtNumber, h, svgEl } from "../dom";
import { BrushRange, ViewState } from "../state";
import { EventRecord, SignalsView, parseIso } from "../types";
import { EventDialog } from "./eventDialog";

const WIDTH = 860;
const HEIGHT = 300;
const HEADER_H = 14;
const FLOW_H = 46;
const MARGIN = { left: 86, right: 12, top: HEADER_H + 4, bottom: 22 };

export function scoreColor(score: number): string {
  // 0 maps to the blue end, saturating to red around severity-4 scores
  const clamped = Math.max(0, Math.min(1, score / 4));
  return interpolateRdBu(1 - clamped);
}

interface StationSignals {
  station: string;
  signals: SignalsView | null;
  fallback: [number, number][];
  error?: string;
}

export class FocusView {
  readonly root: HTMLElement;
  private chartBox: HTMLElement;
  private statusBox: HTMLElement;
  private data: StationSignals[] = [];
  readonly dialog: EventDialog;

  constructor(
    private api: ApiClient,
    private state: ViewState,
    private onEventsChanged: () => void,
  ) {
    this.chartBox = h("div", { class: "focus-chart" });
    this.statusBox = h("div", { class: "focus-status" });
    this.dialog = new EventDialog(api, state, () => {
      void this.load().then(() => this.onEventsChanged());
    });
    this.root = h(
      "div",
      { class: "panel focus-view" },
      h("h2", {}, "Focus"),
      this.statusBox,
      this.chartBox,
      this.dialog.root,
    );
  }

  async load(): Promise<void> {
    const stations = this.state.stations;
    const attribute = this.state.focusAttribute;
    const out: StationSignals[] = [];
    for (const station of stations) {
      const entry: StationSignals = { station, signals: null, fallback: [] };
      if (this.state.experimentId) {
        try {
          entry.signals = await this.api.signals(this.state.experimentId, station, attribute);
        } catch {
          entry.signals = null;
        }
      }
      if (!entry.signals || entry.signals.status !== "done") {
        try {
          const view = await this.api.series(this.state.datasetId, station, attribute, {
            resolution: 2000,
          });
          entry.fallback = view.timestamps.map((t, i) => [parseIso(t), view.values[i]]);
        } catch (err) {
          entry.error = String((err as Error).message ?? err);
        }
      }
      out.push(entry);
    }
    this.data = out;
    this.render();
  }

  private visibleEvents(): EventRecord[] {
    const events: EventRecord[] = [];
    for (const entry of this.data) {
      if (entry.signals) events.push(...entry.signals.events);
    }
    return events;
  }

  render(): void {
    clear(this.chartBox);
    clear(this.statusBox);
    const windowRange = this.state.focusWindow();
    if (!windowRange || this.data.length === 0) {
      this.chartBox.append(h("p", { class: "hint" }, "Pick a station and an attribute."));
      return;
    }
    const single = this.data.length === 1 ? this.data[0] : null;
    if (single?.signals) {
      this.statusBox.append(
        h(
          "span",
          { class: "focus-meta" },
          `${single.station} / ${this.state.focusAttribute}  MAPE ${fmtNumber(single.signals.mape, 3)}`,
        ),
      );
    } else if (this.data.length > 1) {
      this.statusBox.append(
        h("span", { class: "focus-meta" },
          `${this.data.length} stations compared; predictions hidden`),
      );
    }

    const x = scaleTime()
      .domain([windowRange.from, windowRange.to])
      .range([MARGIN.left, WIDTH - MARGIN.right]);

    const inWindow = (p: [number, number]) => p[0] >= windowRange.from && p[0] <= windowRange.to;
    const seriesOf = (entry: StationSignals): [number, number][] => {
      if (entry.signals && entry.signals.status === "done") {
        return entry.signals.timestamps
          .map((t, i) => [parseIso(t), entry.signals!.y[i]] as [number, number])
          .filter(inWindow);
      }
      return entry.fallback.filter(inWindow);
    };

    const allValues = this.data.flatMap((d) => seriesOf(d).map((p) => p[1]));
    const [lo, hi] = extent(allValues);
    const y = scaleLinear()
      .domain([lo ?? 0, hi ?? 1])
      .nice()
      .range([HEIGHT - MARGIN.bottom, MARGIN.top + FLOW_H]);

    const svg = svgEl("svg", { width: String(WIDTH), height: String(HEIGHT), class: "focus-svg" });
    const events = this.visibleEvents().filter(
      (ev) => parseIso(ev.end) >= windowRange.from && parseIso(ev.start) <= windowRange.to,
    );

    // grey backgrounds + score-colored header bar
    for (const ev of events) {
      const x0 = Math.max(MARGIN.left, x(parseIso(ev.start)));
      const x1 = Math.min(WIDTH - MARGIN.right, x(parseIso(ev.end)));
      const w = Math.max(2, x1 - x0);
      const region = svgEl("rect", {
        x: String(x0), y: String(MARGIN.top), width: String(w),
        height: String(HEIGHT - MARGIN.top - MARGIN.bottom),
        class: "event-region",
        "data-event-id": ev.id,
      });
      region.addEventListener("click", () => this.dialog.openEdit(ev));
      svg.append(region);
      const headerCell = svgEl("rect", {
        x: String(x0), y: "2", width: String(w), height: String(HEADER_H - 4),
        fill: scoreColor(ev.score),
        class: "score-cell",
        "data-event-id": ev.id,
      });
      const tooltip = svgEl("title", {});
      tooltip.textContent = `${ev.source} s=${ev.score.toFixed(3)} sev=${ev.severity}`;
      headerCell.append(tooltip);
      headerCell.addEventListener("click", () => this.dialog.openEdit(ev));
      svg.append(headerCell);
    }

    const mkLine = line<[number, number]>()
      .x((d) => x(d[0]))
      .y((d) => y(d[1]))
      .defined((d) => Number.isFinite(d[1]));

    for (const entry of this.data) {
      if (entry.error) {
        const msg = svgEl("text", {
          x: String(MARGIN.left + 8), y: String(HEIGHT / 2), class: "chart-error",
        });
        msg.textContent = `${entry.station}: ${entry.error}`;
        svg.append(msg);
        continue;
      }
      const pts = seriesOf(entry);
      svg.append(
        svgEl("path", {
          d: mkLine(pts) ?? "",
          class: "series-line focus-series",
          stroke: this.state.colorOf(entry.station),
        }),
      );
      // red overdraw inside event intervals
      for (const ev of events.filter((e) => e.station_id === entry.station)) {
        const t0 = parseIso(ev.start);
        const t1 = parseIso(ev.end);
        const seg = pts.filter((p) => p[0] >= t0 && p[0] <= t1);
        if (seg.length >= 2) {
          svg.append(svgEl("path", { d: mkLine(seg) ?? "", class: "anomaly-segment" }));
        }
      }
    }

    // single-station extras: prediction curve + smoothed-error centered flow
    const signals = single?.signals;
    if (signals && signals.status === "done") {
      const yhat = signals.timestamps
        .map((t, i) => [parseIso(t), signals.y_hat[i]] as [number, number])
        .filter(inWindow);
      svg.append(svgEl("path", { d: mkLine(yhat) ?? "", class: "prediction-line" }));

      const es = signals.timestamps
        .map((t, i) => [parseIso(t), signals.e_s[i]] as [number, number])
        .filter(inWindow);
      const esMax = max(es, (d) => d[1]) ?? 1;
      const half = scaleLinear().domain([0, esMax || 1]).range([0, FLOW_H / 2]);
      const mid = MARGIN.top + FLOW_H / 2;
      const flow = area<[number, number]>()
        .x((d) => x(d[0]))
        .y0((d) => mid + half(d[1]))
        .y1((d) => mid - half(d[1]));
      svg.append(svgEl("path", { d: flow(es) ?? "", class: "error-flow" }));
    }

    // axis
    for (const tick of x.ticks(8)) {
      const tx = x(tick as unknown as number);
      const lbl = svgEl("text", { x: String(tx), y: String(HEIGHT - 6), class: "tick-label" });
      lbl.textContent = (tick as Date).toISOString().slice(5, 16).replace("T", " ");
      svg.append(lbl);
    }

    // brushing an empty span proposes a new manual event
    const brush = brushX<unknown>()
      .extent([
        [MARGIN.left, MARGIN.top + FLOW_H],
        [WIDTH - MARGIN.right, HEIGHT - MARGIN.bottom],
      ])
      .on("end", (ev: D3BrushEvent<unknown>) => {
        if (!ev.selection) return;
        const [a, b] = ev.selection as [number, number];
        const from = (x.invert(a) as Date).getTime();
        const to = (x.invert(b) as Date).getTime();
        this.beginCreate({ from, to });
        select(g as SVGGElement).call((brush as never as { move: Function }).move as never, null as never);
      });
    const g = svgEl("g", { class: "brush create-brush" });
    svg.append(g);
    select(g as SVGGElement).call(brush as never);

    this.chartBox.append(svg);
  }

  /** Open the create form for a time range (used by the brush handler). */
  beginCreate(range: BrushRange): void {
    const station = this.state.primaryStation;
    if (!station) return;
    this.dialog.openCreate(station, this.state.focusAttribute, range);
  }
}
