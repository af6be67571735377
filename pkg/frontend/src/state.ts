// Session view state shared by all coordinated views.
//
// Station selection is capped at four; each selected station is bound to a
// categorical color slot that stays stable for the whole session, including
// across deselect/reselect, so a station keeps its color in every view.

export const STATION_COLORS = ["#4269d0", "#3ca951", "#efb118", "#9c6b4e"] as const;
export const MAX_COMPARED_STATIONS = STATION_COLORS.length;

export interface BrushRange {
  from: number; // epoch ms
  to: number;
}

export type Listener = () => void;

export class ViewState {
  datasetId = "";
  experimentId = "";
  focusAttribute = "PM25";
  periodLevel: "year" | "month" | "day" = "year";
  periodAnchor = "";
  contextRange: BrushRange | null = null; // full data extent
  brushRange: BrushRange | null = null;   // focus window, always within context

  private selected: string[] = [];
  private colorBySlot = new Map<string, string>(); // sticky for the session
  private listeners: Listener[] = [];

  subscribe(fn: Listener): void {
    this.listeners.push(fn);
  }

  notify(): void {
    for (const fn of this.listeners) fn();
  }

  get stations(): string[] {
    return [...this.selected];
  }

  get primaryStation(): string | null {
    return this.selected[0] ?? null;
  }

  get comparing(): boolean {
    return this.selected.length > 1;
  }

  isSelected(stationId: string): boolean {
    return this.selected.includes(stationId);
  }

  /** Toggle a station; returns false when the 4-station cap rejects it. */
  toggleStation(stationId: string): boolean {
    const at = this.selected.indexOf(stationId);
    if (at >= 0) {
      this.selected.splice(at, 1);
      this.notify();
      return true;
    }
    if (this.selected.length >= MAX_COMPARED_STATIONS) {
      return false;
    }
    if (!this.colorBySlot.has(stationId)) {
      const used = new Set(
        [...this.colorBySlot.entries()]
          .filter(([id]) => this.selected.includes(id))
          .map(([, c]) => c),
      );
      const free = STATION_COLORS.find((c) => !used.has(c));
      this.colorBySlot.set(stationId, free ?? STATION_COLORS[0]);
    }
    this.selected.push(stationId);
    this.notify();
    return true;
  }

  colorOf(stationId: string): string {
    return this.colorBySlot.get(stationId) ?? "#888888";
  }

  setBrush(range: BrushRange | null): void {
    if (range && this.contextRange) {
      range = {
        from: Math.max(range.from, this.contextRange.from),
        to: Math.min(range.to, this.contextRange.to),
      };
      if (range.to <= range.from) range = null;
    }
    this.brushRange = range;
    this.notify();
  }

  setContextRange(range: BrushRange): void {
    this.contextRange = range;
    if (this.brushRange) {
      this.setBrush(this.brushRange);
      return;
    }
    this.notify();
  }

  focusWindow(): BrushRange | null {
    return this.brushRange ?? this.contextRange;
  }
}
