// Station picker: a schematic coordinate plot of station markers (no map
// tiles). Click toggles selection; at most four stations compare at once and
// each keeps its session color everywhere.

import { extent } from "d3-array";
import { scaleLinear } from "d3-scale";

import { clear, h, svgEl } from "../dom";
import { MAX_COMPARED_STATIONS, ViewState } from "../state";
import { Station } from "../types";

const WIDTH = 300;
const HEIGHT = 230;

export class StationsView {
  readonly root: HTMLElement;
  private box: HTMLElement;
  private note: HTMLElement;
  private stations: Station[] = [];

  constructor(private state: ViewState, private onSelectionChanged: () => void) {
    this.box = h("div", { class: "map-box" });
    this.note = h("div", { class: "map-note" });
    this.root = h("div", { class: "panel stations-view" }, h("h2", {}, "Stations"), this.box, this.note);
  }

  setStations(stations: Station[]): void {
    this.stations = stations;
    this.render();
  }

  render(): void {
    clear(this.box);
    clear(this.note);
    if (!this.stations.length) {
      this.box.append(h("p", { class: "hint" }, "No stations."));
      return;
    }
    const [lonLo, lonHi] = extent(this.stations, (s) => s.longitude);
    const [latLo, latHi] = extent(this.stations, (s) => s.latitude);
    const x = scaleLinear().domain([lonLo ?? 0, lonHi ?? 1]).range([24, WIDTH - 24]);
    const y = scaleLinear().domain([latLo ?? 0, latHi ?? 1]).range([HEIGHT - 24, 24]);

    const svg = svgEl("svg", { width: String(WIDTH), height: String(HEIGHT), class: "map-svg" });
    for (const st of this.stations) {
      const selected = this.state.isSelected(st.station_id);
      const color = selected ? this.state.colorOf(st.station_id) : "#9aa0a6";
      const cx = x(st.longitude);
      const cy = y(st.latitude);
      const marker =
        st.kind === "roadside"
          ? svgEl("rect", {
              x: String(cx - 6), y: String(cy - 6), width: "12", height: "12",
              fill: color, class: "station-marker", "data-station": st.station_id,
            })
          : svgEl("circle", {
              cx: String(cx), cy: String(cy), r: "7",
              fill: color, class: "station-marker", "data-station": st.station_id,
            });
      const title = svgEl("title", {});
      title.textContent = `${st.name} (${st.kind})`;
      marker.append(title);
      marker.addEventListener("click", () => this.toggle(st.station_id));
      svg.append(marker);
      const label = svgEl("text", { x: String(cx + 9), y: String(cy + 4), class: "station-label" });
      label.textContent = st.station_id;
      svg.append(label);
    }
    this.box.append(svg);

    const legend = h("div", { class: "legend" });
    for (const id of this.state.stations) {
      const chip = h("span", { class: "legend-chip" }, id);
      chip.style.background = this.state.colorOf(id);
      legend.append(chip);
    }
    this.note.append(legend);
  }

  toggle(stationId: string): void {
    const ok = this.state.toggleStation(stationId);
    if (!ok) {
      this.note.textContent = `comparison mode is limited to ${MAX_COMPARED_STATIONS} stations`;
      return;
    }
    this.render();
    this.onSelectionChanged();
  }
}
