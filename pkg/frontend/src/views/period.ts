// Period view: a circular time axis per glyph, area height encoding value.
// Year level shows one glyph per year (12 monthly means), month level one per
// month (daily means), day level a calendar of weeks with one glyph per day
// (24 hourly means). Clicking a glyph drills one level down.

import { max } from "d3-array";

import { ApiClient } from "../api";
import { clear, h, svgEl } from "../dom";
import { ViewState } from "../state";
import { AggregateBucket, PeriodAggregate } from "../types";

const GLYPH_R = 34;
const INNER_R = 8;

export class PeriodView {
  readonly root: HTMLElement;
  private body: HTMLElement;
  private crumbs: HTMLElement;
  private aggregate: PeriodAggregate | null = null;

  constructor(private api: ApiClient, private state: ViewState) {
    this.body = h("div", { class: "period-body" });
    this.crumbs = h("div", { class: "period-crumbs" });
    this.root = h(
      "div",
      { class: "panel period-view" },
      h("h2", {}, "Periodic patterns"),
      this.crumbs,
      this.body,
    );
  }

  async load(): Promise<void> {
    const station = this.state.primaryStation;
    if (!station || !this.state.periodAnchor) {
      this.aggregate = null;
      this.render();
      return;
    }
    try {
      this.aggregate = await this.api.aggregates(
        this.state.datasetId,
        station,
        this.state.focusAttribute,
        this.state.periodLevel,
        this.state.periodAnchor,
      );
    } catch {
      this.aggregate = null;
    }
    this.render();
  }

  /** Drill into a clicked bucket: year glyph -> months, month glyph -> days. */
  async drillInto(label: string): Promise<void> {
    if (this.state.periodLevel === "year") {
      this.state.periodLevel = "month";
      this.state.periodAnchor = `${label}-06-01T00:00:00Z`;
    } else if (this.state.periodLevel === "month") {
      this.state.periodLevel = "day";
      this.state.periodAnchor = `${label}-15T00:00:00Z`;
    } else {
      return;
    }
    await this.load();
  }

  async drillUp(): Promise<void> {
    if (this.state.periodLevel === "day") this.state.periodLevel = "month";
    else if (this.state.periodLevel === "month") this.state.periodLevel = "year";
    await this.load();
  }

  render(): void {
    clear(this.body);
    clear(this.crumbs);
    const up = h("button", { class: "small", name: "up" }, "up one level");
    up.addEventListener("click", () => void this.drillUp());
    this.crumbs.append(
      h("span", { class: "level-label" }, `level: ${this.state.periodLevel}`),
      up,
    );

    if (!this.aggregate) {
      this.body.append(h("p", { class: "hint" }, "No aggregate data for this selection."));
      return;
    }

    const peak =
      max(this.aggregate.buckets.flatMap((b) => b.values.filter((v): v is number => v !== null))) ?? 1;

    if (this.aggregate.level === "day") {
      this.body.append(this.calendar(this.aggregate.buckets, peak));
    } else {
      const grid = h("div", { class: "glyph-grid" });
      for (const bucket of this.aggregate.buckets) {
        grid.append(this.glyphCell(bucket, peak));
      }
      this.body.append(grid);
    }
  }

  /** Day glyphs arranged by calendar week so weekly patterns line up. */
  private calendar(buckets: AggregateBucket[], peak: number): HTMLElement {
    const table = h("div", { class: "calendar" });
    const header = h("div", { class: "calendar-week" });
    for (const name of ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"]) {
      header.append(h("div", { class: "calendar-head" }, name));
    }
    table.append(header);
    let week = h("div", { class: "calendar-week" });
    const firstWeekday = buckets[0]?.weekday ?? 0;
    for (let i = 0; i < firstWeekday; i++) week.append(h("div", { class: "calendar-slot" }));
    for (const bucket of buckets) {
      week.append(this.glyphCell(bucket, peak, "calendar-slot"));
      if ((bucket.weekday ?? 0) === 6) {
        table.append(week);
        week = h("div", { class: "calendar-week" });
      }
    }
    if (week.childElementCount) table.append(week);
    return table;
  }

  private glyphCell(bucket: AggregateBucket, peak: number, extraClass = ""): HTMLElement {
    const cell = h("div", { class: `glyph-cell ${extraClass}`, "data-label": bucket.label });
    cell.append(this.glyph(bucket, peak), h("div", { class: "glyph-label" }, bucket.label));
    if (this.state.periodLevel !== "day") {
      cell.addEventListener("click", () => void this.drillInto(bucket.label));
      cell.classList.add("clickable");
    }
    return cell;
  }

  /** Radial area glyph: angle is position in the cycle, radius the value. */
  private glyph(bucket: AggregateBucket, peak: number): SVGSVGElement {
    const size = 2 * (GLYPH_R + 2);
    const svg = svgEl("svg", {
      width: String(size),
      height: String(size),
      class: "period-glyph",
      viewBox: `0 0 ${size} ${size}`,
    });
    const cx = size / 2;
    const cy = size / 2;
    const n = bucket.values.length;
    const pts: string[] = [];
    for (let i = 0; i < n; i++) {
      const v = bucket.values[i];
      const radius = v === null ? INNER_R : INNER_R + ((GLYPH_R - INNER_R) * v) / (peak || 1);
      const angle = (2 * Math.PI * i) / n - Math.PI / 2;
      pts.push(`${cx + radius * Math.cos(angle)},${cy + radius * Math.sin(angle)}`);
    }
    svg.append(svgEl("circle", { cx: String(cx), cy: String(cy), r: String(INNER_R), class: "glyph-core" }));
    if (pts.length >= 3) {
      svg.append(svgEl("polygon", { points: pts.join(" "), class: "glyph-area" }));
    }
    return svg;
  }
}
